import pytest

from spectra.errors import ProviderError, ReplayMiss
from spectra.provider.base import ChatRequest, RecordingProvider, RequestTag
from spectra.provider.replay import ReplayProvider, ScriptedProvider


def request(text: str = "hello", temperature: float = 0.0) -> ChatRequest:
    return ChatRequest(
        messages=(("user", text),), temperature=temperature, tag=RequestTag.TRANSLATE
    )


def test_replay_requires_directory(tmp_path):
    with pytest.raises(ProviderError, match="not found"):
        ReplayProvider(tmp_path / "missing")


def test_record_then_complete_round_trip(tmp_path):
    provider = ReplayProvider(tmp_path)
    req = request()
    provider.record(req, "answer one")
    response = provider.complete(req)
    assert response.text == "answer one"
    assert response.provider_id == "replay"
    assert response.prompt_digest == req.digest()


def test_repeated_requests_walk_the_sequence(tmp_path):
    provider = ReplayProvider(tmp_path)
    req = request()
    provider.record(req, "first")
    provider.record(req, "second")
    assert (tmp_path / f"{req.digest()}.txt").is_file()
    assert (tmp_path / f"{req.digest()}.2.txt").is_file()
    assert provider.complete(req).text == "first"
    assert provider.complete(req).text == "second"
    # past the recorded sequence, the last fixture keeps answering
    assert provider.complete(req).text == "second"
    assert provider.complete(req).text == "second"


def test_digest_keyed_not_order_keyed(tmp_path):
    provider = ReplayProvider(tmp_path)
    a, b = request("a"), request("b")
    provider.record(a, "answer a")
    provider.record(b, "answer b")
    # order of asking does not matter, only content
    assert provider.complete(b).text == "answer b"
    assert provider.complete(a).text == "answer a"


def test_temperature_is_part_of_the_digest(tmp_path):
    provider = ReplayProvider(tmp_path)
    cold = request("same", temperature=0.0)
    warm = request("same", temperature=0.3)
    assert cold.digest() != warm.digest()
    provider.record(cold, "cold answer")
    with pytest.raises(ReplayMiss):
        provider.complete(warm)


def test_miss_is_loud_and_names_the_digest(tmp_path):
    provider = ReplayProvider(tmp_path)
    req = request("never recorded")
    with pytest.raises(ReplayMiss) as exc_info:
        provider.complete(req)
    miss = exc_info.value
    assert miss.digest == req.digest()
    assert miss.call_index == 1
    assert str(tmp_path) in str(miss)


def test_scripted_answers_in_fifo_order():
    provider = ScriptedProvider(["one", "two"])
    assert provider.complete(request("x")).text == "one"
    assert provider.complete(request("y")).text == "two"
    assert provider.remaining() == 0
    assert [r.tag for r in provider.requests] == [RequestTag.TRANSLATE] * 2


def test_scripted_exhaustion_is_an_error():
    provider = ScriptedProvider(["only"])
    provider.complete(request())
    with pytest.raises(ProviderError, match="exhausted after 1"):
        provider.complete(request())


def test_scripted_push_extends_queue():
    provider = ScriptedProvider()
    provider.push("a", "b")
    assert provider.remaining() == 2
    assert provider.complete(request()).text == "a"


def test_recording_provider_wraps_and_logs():
    inner = ScriptedProvider(["resp"])
    recorder = RecordingProvider(inner)
    assert recorder.provider_id == "scripted"
    req = request("logged")
    response = recorder.complete(req)
    assert response.text == "resp"
    assert recorder.log == [(req, response)]
    assert recorder.requests(RequestTag.TRANSLATE) == [req]
    assert recorder.requests(RequestTag.REPAIR) == []
