import pytest

from helpers import c_program, spec_of
from spectra.errors import UsageError
from spectra.model import Modality, SpecStatus
from spectra.provider.base import RequestTag
from spectra.provider.replay import ScriptedProvider
from spectra.specgen import GenBudget, generate_candidates, generate_until_valid
from spectra.specval import ValidationOutcome

GOOD_DESC = "Reads one integer from stdin and prints its double."


def accept_all(spec):
    return ValidationOutcome(accepted=True, spec=spec)


def reject_all(spec):
    return ValidationOutcome(accepted=False, spec=spec, reason="nope")


def accept_from(n):
    seen = {"count": 0}

    def validator(spec):
        seen["count"] += 1
        if seen["count"] >= n:
            return accept_all(spec)
        return reject_all(spec)

    return validator


def test_budget_validation_and_lookup():
    budget = GenBudget()
    assert budget.max_for(Modality.STATIC) == 6
    assert budget.max_for(Modality.DESC) == 6
    assert budget.max_for(Modality.IO) == 10
    with pytest.raises(UsageError):
        GenBudget(static_max=0)
    with pytest.raises(UsageError):
        GenBudget(io_pair_count=0)


def test_batch_numbering_is_nominal():
    budget = GenBudget(batch_k=3)
    assert [budget.batch_of(i) for i in range(1, 8)] == [1, 1, 1, 2, 2, 2, 3]


def test_generation_is_lazy(library):
    provider = ScriptedProvider([GOOD_DESC] * 3)
    gen = generate_candidates(
        c_program(), Modality.DESC, GenBudget(), provider, library
    )
    assert len(provider.requests) == 0  # nothing until the first pull
    first = next(gen)
    assert len(provider.requests) == 1
    assert first.candidate_index == 1
    next(gen)
    assert len(provider.requests) == 2


def test_candidates_carry_sequential_indexes(library):
    provider = ScriptedProvider([GOOD_DESC] * 4)
    budget = GenBudget(desc_max=4)
    indexes = [
        s.candidate_index
        for s in generate_candidates(c_program(), Modality.DESC, budget, provider, library)
    ]
    assert indexes == [1, 2, 3, 4]
    assert len(provider.requests) == 4
    assert all(r.tag is RequestTag.SPEC_GEN for r in provider.requests)
    assert all(r.temperature == 0.6 for r in provider.requests)


def test_parse_failure_consumes_its_index(library):
    # candidate 2 is unparseable as io pairs; indexes never renumber
    responses = ["Input: 1\nOutput: 2", "word salad", "Input: 3\nOutput: 6"]
    provider = ScriptedProvider(responses)
    failures = []
    specs = list(
        generate_candidates(
            c_program(),
            Modality.IO,
            GenBudget(io_max=3),
            provider,
            library,
            on_parse_failure=lambda i, msg: failures.append(i),
        )
    )
    assert [s.candidate_index for s in specs] == [1, 3]
    assert failures == [2]
    assert len(provider.requests) == 3  # the bad call still spent budget


def test_first_accept_costs_exactly_one_generation_call(library):
    provider = ScriptedProvider([GOOD_DESC])
    accepted = generate_until_valid(
        c_program(), Modality.DESC, GenBudget(), provider, accept_all, library
    )
    assert accepted is not None
    assert len(provider.requests) == 1
    assert provider.remaining() == 0


def test_acceptance_stops_midway(library):
    provider = ScriptedProvider([GOOD_DESC] * 6)
    accepted = generate_until_valid(
        c_program(), Modality.DESC, GenBudget(), provider, accept_from(3), library
    )
    assert accepted is not None
    assert len(provider.requests) == 3
    assert provider.remaining() == 3  # later candidates never generated


def test_budget_exhaustion_returns_none(library):
    provider = ScriptedProvider([GOOD_DESC] * 6)
    result = generate_until_valid(
        c_program(), Modality.DESC, GenBudget(desc_max=6), provider, reject_all, library
    )
    assert result is None
    assert len(provider.requests) == 6  # exactly the budget, never more


def test_observer_sees_every_candidate(library):
    provider = ScriptedProvider([GOOD_DESC] * 6)
    seen = []
    generate_until_valid(
        c_program(),
        Modality.DESC,
        GenBudget(),
        provider,
        accept_from(2),
        library,
        observer=lambda spec, outcome: seen.append((spec.candidate_index, outcome.accepted)),
    )
    assert seen == [(1, False), (2, True)]


def test_io_budget_respected(library):
    provider = ScriptedProvider(["nonsense"] * 10)
    result = generate_until_valid(
        c_program(), Modality.IO, GenBudget(), provider, accept_all, library
    )
    assert result is None  # nothing parsed, so nothing validated
    assert len(provider.requests) == 10


def test_rejected_spec_status_flows_through(library):
    provider = ScriptedProvider([GOOD_DESC])

    def reject_marked(spec):
        from dataclasses import replace

        return ValidationOutcome(
            accepted=False, spec=replace(spec, status=SpecStatus.REJECTED)
        )

    outcomes = []
    generate_until_valid(
        c_program(), Modality.DESC, GenBudget(desc_max=1), provider, reject_marked,
        library, observer=lambda s, o: outcomes.append(o),
    )
    assert outcomes[0].spec.status is SpecStatus.REJECTED
