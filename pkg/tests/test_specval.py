import pytest

from helpers import (
    C_DOUBLE,
    C_TRIPLE,
    c_program,
    desc_spec,
    fenced,
    io_spec,
    spec_of,
    static_spec,
)
from spectra.model import Modality, PairOrigin, SpecStatus
from spectra.provider.base import RequestTag
from spectra.provider.replay import ScriptedProvider
from spectra.sandbox import Sandbox
from spectra.specval import (
    back_translate,
    check_self_consistency,
    validate_io_spec,
    validator_for,
)


def test_back_translation_prompt_hides_source(library):
    program = c_program()
    provider = ScriptedProvider([fenced("c", C_DOUBLE)])
    regenerated = back_translate(spec_of(Modality.DESC), program, provider, library)
    assert regenerated == C_DOUBLE.rstrip()
    request = provider.requests[0]
    assert request.tag is RequestTag.CODE_GEN
    assert request.temperature == 0.0
    prompt = "".join(content for _, content in request.messages)
    assert program.source not in prompt


def test_self_consistency_accepts_faithful_regeneration(
    sandbox, library, require_c
):
    program = c_program()
    provider = ScriptedProvider([fenced("c", C_DOUBLE)])
    outcome = check_self_consistency(
        spec_of(Modality.STATIC, static_spec(program)),
        program, provider, sandbox, library,
    )
    assert outcome.accepted
    assert outcome.spec.status is SpecStatus.SELF_CONSISTENT
    assert outcome.artifact == C_DOUBLE.rstrip()  # kept for audit replay


def test_self_consistency_rejects_divergent_regeneration(
    sandbox, library, require_c
):
    program = c_program()
    provider = ScriptedProvider([fenced("c", C_TRIPLE)])
    outcome = check_self_consistency(
        spec_of(Modality.DESC), program, provider, sandbox, library
    )
    assert not outcome.accepted
    assert outcome.spec.status is SpecStatus.REJECTED
    assert "wrong_output" in outcome.reason


def test_self_consistency_rejects_empty_regeneration(sandbox, library):
    program = c_program()
    provider = ScriptedProvider(["I cannot produce code for this."  ""])
    outcome = check_self_consistency(
        spec_of(Modality.DESC), program, provider, sandbox, library
    )
    # a fenceless response is taken whole, so feed one that cannot compile;
    # an actually empty response is the extraction-failure path
    empty = ScriptedProvider([fenced("c", "")])
    failed = check_self_consistency(
        spec_of(Modality.DESC), program, empty, sandbox, library
    )
    assert not failed.accepted
    assert "no code" in failed.reason


def test_self_consistency_refuses_io_specs(sandbox, library):
    with pytest.raises(ValueError):
        check_self_consistency(
            spec_of(Modality.IO), c_program(), ScriptedProvider([]), sandbox, library
        )


def test_io_validation_keeps_only_matching_pairs(sandbox, require_c):
    # one right pair, one wrong pair: the right one survives, spec promoted
    candidate = spec_of(
        Modality.IO,
        io_spec((b"4\n", b"8\n"), (b"5\n", b"99\n")),
        status=SpecStatus.CANDIDATE,
    )
    outcome = validate_io_spec(candidate, c_program(), sandbox)
    assert outcome.accepted
    assert outcome.spec.status is SpecStatus.SELF_CONSISTENT
    pairs = outcome.spec.payload.pairs
    assert len(pairs) == 1
    assert pairs[0].stdin == b"4\n"
    assert pairs[0].origin is PairOrigin.MODEL  # kept as written


def test_io_validation_patches_when_nothing_matches(sandbox, require_c):
    candidate = spec_of(
        Modality.IO,
        io_spec((b"5\n", b"99\n"), (b"6\n", b"77\n")),
        status=SpecStatus.CANDIDATE,
    )
    outcome = validate_io_spec(candidate, c_program(), sandbox)
    assert outcome.accepted
    assert outcome.spec.status is SpecStatus.PATCHED
    pairs = outcome.spec.payload.pairs
    assert [p.origin for p in pairs] == [PairOrigin.PATCHED, PairOrigin.PATCHED]
    # patched outputs must equal what the program actually prints
    artifact = sandbox.build(C_DOUBLE, c_program().language)
    try:
        for pair in pairs:
            from spectra.model import TestCase

            record = sandbox.run_one(
                artifact, TestCase("probe", pair.stdin, pair.stdout)
            )
            assert record.verdict.value == "pass"
    finally:
        sandbox.cleanup(artifact)


def test_io_validation_rejects_when_program_cannot_run_any_pair(
    sandbox, require_c
):
    # negative inputs abort, so no pair is runnable and nothing survives
    candidate = spec_of(
        Modality.IO,
        io_spec((b"-1\n", b"x\n"), (b"-2\n", b"y\n")),
        status=SpecStatus.CANDIDATE,
    )
    outcome = validate_io_spec(candidate, c_program(), sandbox)
    assert not outcome.accepted
    assert outcome.spec.status is SpecStatus.REJECTED
    assert "crashed or hung" in outcome.reason


def test_io_validation_rejects_unbuildable_program(sandbox, require_c):
    broken = c_program(source="int main(void) { broken", program_id="broken")
    outcome = validate_io_spec(spec_of(Modality.IO), broken, sandbox)
    assert not outcome.accepted
    assert "does not build" in outcome.reason


def test_io_validation_guard(sandbox):
    with pytest.raises(ValueError):
        validate_io_spec(spec_of(Modality.DESC), c_program(), sandbox)


def test_validator_for_dispatch(sandbox, library, require_c):
    program = c_program()
    io_validator = validator_for(
        Modality.IO, program, ScriptedProvider([]), sandbox, library
    )
    outcome = io_validator(spec_of(Modality.IO, io_spec((b"4\n", b"8\n"))))
    assert outcome.accepted  # executed, no provider call needed

    provider = ScriptedProvider([fenced("c", C_DOUBLE)])
    desc_validator = validator_for(Modality.DESC, program, provider, sandbox, library)
    assert desc_validator(spec_of(Modality.DESC)).accepted
    assert len(provider.requests) == 1
