"""Spec validation: does a candidate spec actually describe the program?

Static and description specs are checked by self-consistency: regenerate a
program in the original language from the spec alone, then run it against
the original program's tests.  If the regenerated program passes everything,
the spec carried enough information to reconstruct the behaviour, and it is
promoted to SelfConsistent.  The regenerated source is kept as an audit
artifact so the acceptance can be replayed without a model.

Io specs are checked by execution instead: run the original program on each
generated input.  Pairs the program crashes or hangs on are dropped.  If any
surviving pair's output matches the program's real output, the matching
pairs are kept and the spec is SelfConsistent; if none match, every
surviving pair's output is replaced with the observed output and the spec is
Patched.  A spec with no surviving pairs is rejected.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

from .errors import CompileFailed, ExtractionFailed
from .model import (
    IoPair,
    IoSpec,
    Modality,
    PairOrigin,
    SourceProgram,
    SpecStatus,
    Specification,
    TestCase,
)
from .provider.base import Provider
from .provider.compose import compose_codegen_prompt
from .provider.parse import extract_code_block
from .provider.templates import PromptLibrary
from .sandbox import Sandbox, Verdict


@dataclass(frozen=True)
class ValidationOutcome:
    """Verdict on one candidate spec.

    accepted=True means spec carries the promoted status (SelfConsistent or
    Patched).  artifact holds the regenerated source for consistency checks,
    so a stored acceptance can be re-run later without any model access.
    """

    accepted: bool
    spec: Specification
    reason: str = ""
    artifact: str | None = None


Validator = Callable[[Specification], ValidationOutcome]


def back_translate(
    spec: Specification,
    program: SourceProgram,
    provider: Provider,
    library: PromptLibrary,
) -> str:
    """Regenerate source in the program's own language from the spec alone.

    The prompt never sees the original source; leaking it would let the
    model copy instead of reconstruct, and the check would prove nothing.
    """
    request = compose_codegen_prompt(spec, program.language, library)
    response = provider.complete(request)
    return extract_code_block(response.text, program.language)


def check_self_consistency(
    spec: Specification,
    program: SourceProgram,
    provider: Provider,
    sandbox: Sandbox,
    library: PromptLibrary,
) -> ValidationOutcome:
    """Self-consistency probe for static and description specs."""
    if spec.modality is Modality.IO:
        raise ValueError("io specs are validated by validate_io_spec")
    try:
        regenerated = back_translate(spec, program, provider, library)
    except ExtractionFailed as exc:
        return ValidationOutcome(
            accepted=False,
            spec=replace(spec, status=SpecStatus.REJECTED),
            reason=f"regeneration produced no code: {exc}",
        )
    outcome = sandbox.evaluate(regenerated, program.language, program.tests)
    if outcome.passed:
        return ValidationOutcome(
            accepted=True,
            spec=replace(spec, status=SpecStatus.SELF_CONSISTENT),
            artifact=regenerated,
        )
    return ValidationOutcome(
        accepted=False,
        spec=replace(spec, status=SpecStatus.REJECTED),
        reason=f"regenerated program failed: {outcome.failure.value}",
        artifact=regenerated,
    )


def validate_io_spec(
    spec: Specification,
    program: SourceProgram,
    sandbox: Sandbox,
) -> ValidationOutcome:
    """Execution check for io specs; may patch outputs (see module docstring)."""
    if spec.modality is not Modality.IO:
        raise ValueError("validate_io_spec only handles io specs")
    payload: IoSpec = spec.payload  # type: ignore[assignment]
    try:
        artifact = sandbox.build(program.source, program.language)
    except CompileFailed:
        return ValidationOutcome(
            accepted=False,
            spec=replace(spec, status=SpecStatus.REJECTED),
            reason="original program does not build; cannot execute io pairs",
        )
    matching: list[IoPair] = []
    runnable: list[IoPair] = []
    try:
        for i, pair in enumerate(payload.pairs):
            probe = TestCase(
                test_id=f"iopair-{i+1}",
                stdin=pair.stdin,
                expected_stdout=pair.stdout,
            )
            record = sandbox.run_one(artifact, probe)
            if record.verdict in (Verdict.TIMEOUT, Verdict.RUNTIME_ERROR):
                continue  # program cannot run this input; drop the pair
            if record.verdict is Verdict.PASS:
                matching.append(pair)
            runnable.append(replace(pair, stdout=record.stdout, origin=PairOrigin.PATCHED))
    finally:
        sandbox.cleanup(artifact)

    if matching:
        kept = IoSpec(pairs=tuple(matching))
        return ValidationOutcome(
            accepted=True,
            spec=replace(spec, payload=kept, status=SpecStatus.SELF_CONSISTENT),
        )
    if runnable:
        patched = IoSpec(pairs=tuple(runnable))
        return ValidationOutcome(
            accepted=True,
            spec=replace(spec, payload=patched, status=SpecStatus.PATCHED),
            reason="no generated output matched; outputs replaced with observed",
        )
    return ValidationOutcome(
        accepted=False,
        spec=replace(spec, status=SpecStatus.REJECTED),
        reason="original program crashed or hung on every generated input",
    )


def validator_for(
    modality: Modality,
    program: SourceProgram,
    provider: Provider,
    sandbox: Sandbox,
    library: PromptLibrary,
) -> Validator:
    """The validation routine generate_until_valid should apply."""
    if modality is Modality.IO:
        return lambda spec: validate_io_spec(spec, program, sandbox)
    return lambda spec: check_self_consistency(spec, program, provider, sandbox, library)
