"""Multi-stage translation: one candidate per stage, specs ordered by
modality, pass@k read off the stage verdicts.

A program's stage plan comes from which validated specs it has: static
first, then io, then description, then the vanilla no-spec stage, truncated
to k_max stages.  Stage one samples greedy (0.0); every later stage samples
at 0.3.  The run stops at the first passing stage; pass@k counts a program
as solved at k iff any of its first k stages passed, clamping k to the
stages actually run.

Ablation arms reshape the plan, nothing else: Baseline runs k_max vanilla
stages; AllSpecsTogether puts every spec in one prompt for every stage;
SingleModality repeats one modality; OneShotSpec is SingleModality driven by
an unvalidated first candidate (the caller supplies it).

Repair is compile-errors only.  A candidate that compiles but fails tests is
wrong, not broken, and regenerating it from the failure would blur the
accounting between translation quality and repair quality.
"""
from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Mapping, Sequence

from .errors import (
    EnvironmentProblem,
    ExtractionFailed,
    ProviderError,
    ReplayMiss,
    UsageError,
)
from .model import (
    FailureKind,
    Language,
    Modality,
    PassAtKReport,
    SourceProgram,
    SpecSet,
    Specification,
    StageRecord,
    StageResult,
    aggregate_pass_at_k,
    modality_order,
    require_supported_pair,
)
from .provider.base import Provider
from .provider.compose import (
    FIRST_TRANSLATE_TEMPERATURE,
    RETRY_TRANSLATE_TEMPERATURE,
    compose_repair_prompt,
    compose_translation_prompt,
)
from .provider.parse import extract_code_block
from .provider.templates import PromptLibrary
from .sandbox import Sandbox

MAX_REPAIR_ROUNDS = 3


class ModeKind(Enum):
    SPECTRA = "spectra"
    BASELINE = "baseline"
    ALL_TOGETHER = "all-specs-together"
    SINGLE = "single"
    ONE_SHOT = "one-shot"


@dataclass(frozen=True)
class PipelineMode:
    kind: ModeKind
    modality: Modality | None = None  # set for single and one-shot arms

    def __post_init__(self) -> None:
        needs_modality = self.kind in (ModeKind.SINGLE, ModeKind.ONE_SHOT)
        if needs_modality and self.modality is None:
            raise UsageError(f"{self.kind.value} mode needs a modality")
        if not needs_modality and self.modality is not None:
            raise UsageError(f"{self.kind.value} mode takes no modality")

    @classmethod
    def parse(cls, text: str) -> "PipelineMode":
        t = text.strip().lower()
        if ":" in t:
            kind_text, modality_text = t.split(":", 1)
            kind = _kind_of(kind_text)
            return cls(kind=kind, modality=Modality.parse(modality_text))
        return cls(kind=_kind_of(t))


def _kind_of(text: str) -> ModeKind:
    for kind in ModeKind:
        if kind.value == text:
            return kind
    raise UsageError(
        f"unknown mode {text!r} (expected spectra, baseline, "
        "all-specs-together, single:<modality> or one-shot:<modality>)"
    )


@dataclass(frozen=True)
class PipelineConfig:
    mode: PipelineMode
    target: Language
    k_max: int = 3
    repair_rounds: int = 0  # compile-repair calls allowed per stage
    max_prompt_chars: int | None = None  # degrade spec choice above this size

    def __post_init__(self) -> None:
        if self.k_max < 1:
            raise UsageError("k_max must be >= 1")
        if not 0 <= self.repair_rounds <= MAX_REPAIR_ROUNDS:
            raise UsageError(f"repair_rounds must be in 0..{MAX_REPAIR_ROUNDS}")
        if self.max_prompt_chars is not None and self.max_prompt_chars < 1:
            raise UsageError("max_prompt_chars must be positive when set")


def translate_once(
    program: SourceProgram,
    spec: Specification | None,
    target: Language,
    temperature: float,
    provider: Provider,
    library: PromptLibrary,
    all_specs: Sequence[Specification] | None = None,
) -> str:
    """One prompt, one candidate; raises ExtractionFailed on empty answers."""
    request = compose_translation_prompt(
        program, spec, target, temperature, library, all_specs=all_specs
    )
    response = provider.complete(request)
    return extract_code_block(response.text, target)


def _stage_plan(specs: SpecSet, config: PipelineConfig) -> list[Modality | None]:
    kind = config.mode.kind
    if kind is ModeKind.BASELINE:
        return [None] * config.k_max
    if kind in (ModeKind.SINGLE, ModeKind.ONE_SHOT):
        m = config.mode.modality
        have = specs.get(m) is not None
        return [m if have else None] * config.k_max
    if kind is ModeKind.ALL_TOGETHER:
        # modality None per stage; the all-specs flag marks the records
        return [None] * config.k_max
    plan = specs.stage_plan()
    return plan[: config.k_max]


def run_pipeline(
    program: SourceProgram,
    specs: SpecSet,
    config: PipelineConfig,
    provider: Provider,
    sandbox: Sandbox,
    library: PromptLibrary,
) -> StageResult:
    """Translate one program through its staged plan; stop at first pass."""
    require_supported_pair(program.language, config.target)
    all_together = config.mode.kind is ModeKind.ALL_TOGETHER
    bundle = [s for _, s in specs.by_modality] if all_together else None
    if bundle is not None and not bundle:
        bundle = None  # no specs at all: degenerate to vanilla prompts

    plan = _stage_plan(specs, config)
    records: list[StageRecord] = []
    for stage_index, planned in enumerate(plan, start=1):
        temperature = (
            FIRST_TRANSLATE_TEMPERATURE
            if stage_index == 1
            else RETRY_TRANSLATE_TEMPERATURE
        )
        modality, skipped = _degrade(program, specs, planned, config, library, temperature)
        spec = specs.get(modality) if modality is not None else None
        record = _run_stage(
            program=program,
            spec=spec,
            modality=modality,
            all_specs=bundle,
            temperature=temperature,
            config=config,
            provider=provider,
            sandbox=sandbox,
            library=library,
            skipped=skipped,
        )
        records.append(record)
        if record.passed:
            break  # later stages cannot change any pass@k verdict
    return StageResult(program_id=program.program_id, stages=tuple(records))


def _degrade(
    program: SourceProgram,
    specs: SpecSet,
    planned: Modality | None,
    config: PipelineConfig,
    library: PromptLibrary,
    temperature: float,
) -> tuple[Modality | None, tuple[Modality, ...]]:
    """Swap an oversized spec prompt for the next modality in order.

    Only applies when a prompt budget is configured.  The vanilla prompt is
    the final fallback and is never skipped.
    """
    if config.max_prompt_chars is None or planned is None:
        return planned, ()
    order = modality_order(specs.available())
    start = order.index(planned)
    skipped: list[Modality] = []
    for modality in order[start:]:
        if modality is None:
            return None, tuple(skipped)
        request = compose_translation_prompt(
            program, specs.get(modality), config.target, temperature, library
        )
        if request.prompt_chars() <= config.max_prompt_chars:
            return modality, tuple(skipped)
        skipped.append(modality)
    return None, tuple(skipped)


def _run_stage(
    program: SourceProgram,
    spec: Specification | None,
    modality: Modality | None,
    all_specs: Sequence[Specification] | None,
    temperature: float,
    config: PipelineConfig,
    provider: Provider,
    sandbox: Sandbox,
    library: PromptLibrary,
    skipped: tuple[Modality, ...],
) -> StageRecord:
    try:
        candidate = translate_once(
            program, spec, config.target, temperature, provider, library,
            all_specs=all_specs,
        )
    except ExtractionFailed:
        return StageRecord(
            modality=modality,
            candidate="",
            passed=False,
            failure=FailureKind.COMPILE,
            skipped=skipped,
            all_specs=all_specs is not None,
        )
    repair_calls = 0
    outcome = sandbox.evaluate(candidate, config.target, program.tests)
    while (
        outcome.failure is FailureKind.COMPILE
        and repair_calls < config.repair_rounds
    ):
        request = compose_repair_prompt(
            candidate, outcome.compile_log, config.target, library
        )
        response = provider.complete(request)
        repair_calls += 1
        try:
            candidate = extract_code_block(response.text, config.target)
        except ExtractionFailed:
            break
        outcome = sandbox.evaluate(candidate, config.target, program.tests)
    return StageRecord(
        modality=modality,
        candidate=candidate,
        passed=outcome.passed,
        failure=outcome.failure,
        repair_calls=repair_calls,
        skipped=skipped,
        all_specs=all_specs is not None,
    )


@dataclass(frozen=True)
class CorpusRunResult:
    results: tuple[StageResult, ...]
    incomplete: tuple[tuple[str, str], ...]  # (program_id, error text)

    def report(
        self,
        k_max: int,
        baseline: Sequence[StageResult] | None = None,
    ) -> PassAtKReport:
        notes = tuple(
            f"incomplete: {pid} ({err})" for pid, err in self.incomplete
        )
        return aggregate_pass_at_k(
            self.results, k_max=k_max, baseline=baseline, notes=notes
        )


def run_corpus(
    programs: Sequence[SourceProgram],
    specs_by_program: Mapping[str, SpecSet],
    config: PipelineConfig,
    provider: Provider,
    sandbox: Sandbox,
    library: PromptLibrary,
    workers: int = 1,
    progress: Callable[[StageResult], None] | None = None,
) -> CorpusRunResult:
    """Run the pipeline over a corpus, optionally in parallel.

    Environment failures (missing fixture, dead provider, missing toolchain)
    mark that program incomplete instead of crashing the whole run; the
    report then carries an explicit note per excluded program.
    """
    if workers < 1:
        raise UsageError("workers must be >= 1")
    empty = SpecSet(by_modality=())

    def one(program: SourceProgram) -> StageResult:
        specs = specs_by_program.get(program.program_id, empty)
        return run_pipeline(program, specs, config, provider, sandbox, library)

    results: list[StageResult] = []
    incomplete: list[tuple[str, str]] = []
    if workers == 1:
        for program in programs:
            try:
                result = one(program)
            except (EnvironmentProblem, ProviderError, ReplayMiss) as exc:
                incomplete.append((program.program_id, str(exc)))
                continue
            results.append(result)
            if progress is not None:
                progress(result)
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(one, p): p for p in programs}
            for future in concurrent.futures.as_completed(futures):
                program = futures[future]
                try:
                    result = future.result()
                except (EnvironmentProblem, ProviderError, ReplayMiss) as exc:
                    incomplete.append((program.program_id, str(exc)))
                    continue
                results.append(result)
                if progress is not None:
                    progress(result)
    results.sort(key=lambda r: r.program_id)
    incomplete.sort()
    return CorpusRunResult(results=tuple(results), incomplete=tuple(incomplete))


def verify_stage_shape(
    result: StageResult, specs: SpecSet, config: PipelineConfig
) -> None:
    """Assert the recorded stages follow the configured plan prefix.

    Used by tests and by store loading to reject corrupted run records.
    Degraded stages are exempt where their skip trail explains the swap.
    """
    plan = _stage_plan(specs, config)
    if len(result.stages) > config.k_max:
        raise UsageError(
            f"{result.program_id}: {len(result.stages)} stages exceeds k_max"
        )
    for i, record in enumerate(result.stages):
        if record.skipped:
            continue
        if record.modality is not plan[i]:
            raise UsageError(
                f"{result.program_id}: stage {i+1} used "
                f"{record.modality} but plan says {plan[i]}"
            )
