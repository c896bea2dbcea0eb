"""Spec candidate generation under per-modality budgets.

Generation is strictly lazy: one provider call produces one candidate, and
no call happens until the consumer asks for the next candidate.  That is
what makes early stopping real; when the first candidate validates, exactly
one generation call has been spent.  A response that fails to parse still
consumes budget (the call was made) but yields nothing.

batch_k is nominal grouping for provenance and logs: candidate i belongs to
batch (i-1)//batch_k + 1.  It never changes how many calls are made.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator

from .errors import SpecParseFailed, UsageError
from .model import Modality, SourceProgram, Specification
from .provider.base import Provider
from .provider.compose import (
    compose_desc_spec_prompt,
    compose_io_spec_prompt,
    compose_static_spec_prompt,
)
from .provider.parse import extract_spec
from .provider.templates import PromptLibrary
from .specval import ValidationOutcome, Validator


@dataclass(frozen=True)
class GenBudget:
    static_max: int = 6  # candidate ceiling per program, static modality
    desc_max: int = 6  # same, description modality
    io_max: int = 10  # same, io modality
    batch_k: int = 3  # nominal batch size for bookkeeping
    io_pair_count: int = 10  # pairs requested per io candidate

    def __post_init__(self) -> None:
        if min(self.static_max, self.desc_max, self.io_max) < 1:
            raise UsageError("candidate budgets must be >= 1")
        if self.batch_k < 1 or self.io_pair_count < 1:
            raise UsageError("batch_k and io_pair_count must be >= 1")

    def max_for(self, modality: Modality) -> int:
        return {
            Modality.STATIC: self.static_max,
            Modality.IO: self.io_max,
            Modality.DESC: self.desc_max,
        }[modality]

    def batch_of(self, candidate_index: int) -> int:
        return (candidate_index - 1) // self.batch_k + 1


def _compose(
    program: SourceProgram,
    modality: Modality,
    budget: GenBudget,
    library: PromptLibrary,
):
    if modality is Modality.STATIC:
        return compose_static_spec_prompt(program, library)
    if modality is Modality.IO:
        return compose_io_spec_prompt(program, budget.io_pair_count, library)
    return compose_desc_spec_prompt(program, library)


def generate_candidates(
    program: SourceProgram,
    modality: Modality,
    budget: GenBudget,
    provider: Provider,
    library: PromptLibrary,
    on_parse_failure: Callable[[int, str], None] | None = None,
) -> Iterator[Specification]:
    """Yield parsed candidates one at a time, up to the modality's budget.

    Unparseable responses are reported to on_parse_failure and skipped;
    their candidate index stays consumed so provenance never renumbers.
    """
    for index in range(1, budget.max_for(modality) + 1):
        request = _compose(program, modality, budget, library)
        response = provider.complete(request)
        try:
            yield extract_spec(request, response, modality, program, candidate_index=index)
        except SpecParseFailed as exc:
            if on_parse_failure is not None:
                on_parse_failure(index, str(exc))


def generate_until_valid(
    program: SourceProgram,
    modality: Modality,
    budget: GenBudget,
    provider: Provider,
    validator: Validator,
    library: PromptLibrary,
    observer: Callable[[Specification, ValidationOutcome], None] | None = None,
) -> Specification | None:
    """First validated spec, or None when the budget is exhausted.

    Stops at the first acceptance: with a validator costing one call, a
    first-candidate accept spends exactly two provider calls in total.  The
    observer sees every candidate with its outcome, accepted or not, so
    stores can keep the full audit trail.
    """
    for candidate in generate_candidates(program, modality, budget, provider, library):
        outcome = validator(candidate)
        if observer is not None:
            observer(candidate, outcome)
        if outcome.accepted:
            return outcome.spec
    return None
