"""Whole-project translation orchestrator: C to Rust, one function at a time.

Phases, in order:

1. Pristine check.  Build the untouched tree in a scratch copy and run its
   end-to-end tests; each test's stdout is kept as the transparency
   baseline for phase 3.
2. Decompose.  Parse every entry source into function units with byte
   ranges, docstrings, and an intra-file call graph.
3. Specs.  Three per-function sources, mirroring the single-program
   modalities:
     - description: the function's own documentation comment, verbatim;
     - io: instrument a copy of the tree, re-run the e2e tests with the
       trace file enabled, require stdout byte-identical to the baseline,
       then sample the logged argument/return pairs;
     - static: ask the model for a contract, regenerate the function in C
       from contract plus signature alone, splice the regeneration into a
       throwaway copy, and accept the contract only if the whole project's
       tests still pass.
4. Glue.  Exported-signature and extern-declaration scaffolding per
   function; a signature that cannot cross the C ABI marks the function
   SKIPPED rather than guessed at.
5. Translate, leaves first.  Each function gets a staged ladder of
   attempts (spec modalities in rank order, vanilla last, capped at k_max);
   every candidate is judged by a mixed C + Rust build of the real project
   plus the full e2e suite.  First pass wins the stage ladder.

The manifest tree itself is never modified: all builds happen in disposable
copies, and a digest over the tracked files is checked after the run so a
leaked mutation fails loudly instead of corrupting later runs.
"""
from __future__ import annotations

import shutil
import tempfile
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

from ..errors import (
    CompileFailed,
    EnvironmentProblem,
    ExtractionFailed,
    ProjectStateError,
    SpecParseFailed,
    UsageError,
)
from ..csource import FunctionUnit, analyze
from ..model import (
    DescSource,
    DescSpec,
    FailureKind,
    FunctionContract,
    Language,
    Modality,
    PassAtKReport,
    Provenance,
    SpecStatus,
    Specification,
    StageRecord,
    StaticSpec,
    StageResult,
    aggregate_pass_at_k,
    modality_order,
)
from ..provider.base import Provider
from ..provider.compose import (
    compose_fn_codegen_prompt,
    compose_fn_spec_prompt,
    compose_fn_translation_prompt,
    compose_repair_prompt,
)
from ..provider.parse import extract_code_block, parse_fn_contract
from ..provider.templates import PromptLibrary
from ..sandbox import RunLimits
from ..specgen import GenBudget
from .build import (
    copy_tree,
    mixed_build,
    run_build_command,
    run_e2e,
    splice_replace,
    tree_digest,
)
from .ffi import FfiGlue, NonRenderable, generate_ffi_glue
from .instrument import TRACE_ENV, InstrumentReport, instrument_tree
from .manifest import ProjectManifest
from .traces import TRACE_CAP, parse_trace_file, pairs_to_iospec, sample_pairs

FIRST_STAGE_TEMPERATURE = 0.0
LATER_STAGE_TEMPERATURE = 0.3
MAX_REPAIR_ROUNDS = 3


class FunctionStatus(Enum):
    TRANSLATED_PASSING = "translated_passing"
    TRANSLATED_FAILING = "translated_failing"
    SKIPPED = "skipped"  # never attempted: ABI-unrenderable or filtered out


@dataclass(frozen=True)
class FunctionOutcome:
    """Terminal state of one function after a project run."""

    name: str
    status: FunctionStatus
    reason: str = ""  # SKIPPED only: why no attempt was made
    stages: StageResult | None = None  # None exactly when SKIPPED
    rust: str = ""  # accepted translation, empty unless passing

    def __post_init__(self) -> None:
        if (self.stages is None) != (self.status is FunctionStatus.SKIPPED):
            raise UsageError("stage results must exist iff the function was attempted")
        if self.rust and self.status is not FunctionStatus.TRANSLATED_PASSING:
            raise UsageError("only passing functions carry a translation")


@dataclass(frozen=True)
class ProjectResult:
    functions: tuple[FunctionOutcome, ...]
    report: PassAtKReport  # over attempted functions only
    instrumented: InstrumentReport
    spec_counts: Mapping[str, int]  # modality value -> functions covered

    def by_status(self, status: FunctionStatus) -> tuple[FunctionOutcome, ...]:
        return tuple(f for f in self.functions if f.status is status)

    def translations(self) -> dict[str, str]:
        return {
            f.name: f.rust
            for f in self.functions
            if f.status is FunctionStatus.TRANSLATED_PASSING
        }


def translation_order(units: Sequence[FunctionUnit]) -> list[FunctionUnit]:
    """Leaves-first order: a function comes after every function it calls.

    Cycles are broken at the earliest function in source order, which also
    keeps the whole ordering stable.  Only intra-file edges exist in the
    call graph; cross-file calls are externals and impose no constraint.
    """
    pos = {u.name: i for i, u in enumerate(units)}
    by_name = {u.name: u for u in units}
    remaining = {u.name: {c for c in u.callees if c in pos} for u in units}
    order: list[FunctionUnit] = []
    while remaining:
        ready = sorted(
            (n for n, deps in remaining.items() if not deps & remaining.keys()),
            key=pos.__getitem__,
        )
        if not ready:
            ready = [min(remaining, key=pos.__getitem__)]
        for name in ready:
            order.append(by_name[name])
            del remaining[name]
    return order


class ProjectRunner:
    """Drives the per-function migration of one project.

    accumulate=True (the default) keeps each accepted translation in the
    link set, so later functions are judged against the partly-migrated
    project; accumulate=False judges every function against an otherwise
    all-C tree.
    """

    def __init__(
        self,
        manifest: ProjectManifest,
        provider: Provider,
        *,
        library: PromptLibrary | None = None,
        target: Language = Language.RUST,
        k_max: int = 3,
        repair_rounds: int = MAX_REPAIR_ROUNDS,
        budget: GenBudget | None = None,
        limits: RunLimits | None = None,
        modalities: Sequence[Modality] = tuple(Modality),
        accumulate: bool = True,
        trace_cap: int = TRACE_CAP,
        scratch: Path | None = None,
    ):
        if target is not Language.RUST:
            raise UsageError("project mode only links Rust into a C build")
        if k_max < 1:
            raise UsageError("k_max must be >= 1")
        if not 0 <= repair_rounds <= MAX_REPAIR_ROUNDS:
            raise UsageError(f"repair_rounds must be in 0..{MAX_REPAIR_ROUNDS}")
        self.manifest = manifest
        self.provider = provider
        self.library = library or PromptLibrary.default()
        self.target = target
        self.k_max = k_max
        self.repair_rounds = repair_rounds
        self.budget = budget or GenBudget()
        self.limits = limits or RunLimits()
        self.modalities = tuple(modalities)
        self.accumulate = accumulate
        self.trace_cap = trace_cap
        self._scratch = scratch
        self._owns_scratch = scratch is None
        # name -> (source rel-path, unit); filled by _decompose
        self._units: dict[str, tuple[str, FunctionUnit]] = {}
        self._accepted: dict[str, str] = {}  # passing translations so far

    # -- phase 1: pristine check ----------------------------------------

    def _pristine_check(self) -> dict[str, bytes]:
        tree = copy_tree(self.manifest.root, self._scratch_dir() / "pristine")
        try:
            binary = run_build_command(self.manifest, tree)
            outcome = run_e2e(
                binary, self.manifest.e2e_tests, self.limits,
                bit_exact=self.manifest.bit_exact,
            )
        except CompileFailed as exc:
            raise EnvironmentProblem(
                f"pristine project does not build:\n{exc.log}"
            ) from exc
        if not outcome.passed:
            raise EnvironmentProblem(
                "pristine project fails its own tests: "
                + ", ".join(outcome.failures())
            )
        return {r.test_id: r.stdout for r in outcome.runs}

    # -- phase 2: decomposition ------------------------------------------

    def _decompose(self) -> list[FunctionUnit]:
        """Fill the name -> (file, unit) map; returns the allowlisted units."""
        for rel in self.manifest.entry_sources:
            text = (self.manifest.root / rel).read_text(encoding="utf-8")
            for unit in analyze(text):
                if unit.name in self._units:
                    raise ProjectStateError(
                        f"{unit.name} is defined in both "
                        f"{self._units[unit.name][0]} and {rel}"
                    )
                self._units[unit.name] = (rel, unit)
        allow = self.manifest.function_allowlist
        selected = [
            unit for _, unit in self._units.values()
            if not allow or unit.name in allow
        ]
        if allow:
            missing = set(allow) - set(self._units)
            if missing:
                raise UsageError(
                    f"allowlist names undefined functions: {sorted(missing)}"
                )
        if not selected:
            raise UsageError("decomposition found no functions to translate")
        return selected

    def _all_units(self) -> tuple[FunctionUnit, ...]:
        return tuple(unit for _, unit in self._units.values())

    # -- phase 3a: description specs ---------------------------------------

    def _desc_specs(
        self, selected: Sequence[FunctionUnit]
    ) -> dict[str, Specification]:
        specs = {}
        for unit in selected:
            if not unit.docstring:
                continue
            specs[unit.name] = Specification(
                modality=Modality.DESC,
                payload=DescSpec(unit.docstring, DescSource.DOCSTRING),
                status=SpecStatus.CANDIDATE,
                candidate_index=1,
                provenance=Provenance(0.0, "docstring", ""),
            )
        return specs

    # -- phase 3b: traced io specs ---------------------------------------

    def _traced_specs(
        self, selected: Sequence[FunctionUnit], baseline: Mapping[str, bytes]
    ) -> tuple[dict[str, Specification], InstrumentReport]:
        dest = self._scratch_dir() / "traced"
        report = instrument_tree(self.manifest, dest)
        binary = run_build_command(self.manifest, dest)
        per_test: dict[str, list] = {}
        for test in self.manifest.e2e_tests:
            trace_path = dest / f"__sp_trace_{test.test_id}.log"
            outcome = run_e2e(
                binary, [test], self.limits,
                bit_exact=self.manifest.bit_exact,
                env={TRACE_ENV: str(trace_path)},
            )
            run = outcome.runs[0]
            if run.stdout != baseline[test.test_id]:
                raise ProjectStateError(
                    f"instrumentation changed stdout for test {test.test_id}"
                )
            if trace_path.is_file():
                per_test[test.test_id] = parse_trace_file(trace_path)
        sampled = sample_pairs(per_test, cap=self.trace_cap)
        wanted = {u.name for u in selected}
        specs = {}
        for name, pairs in sampled.items():
            if name not in wanted or not pairs:
                continue
            specs[name] = Specification(
                modality=Modality.IO,
                payload=pairs_to_iospec(pairs),
                status=SpecStatus.SELF_CONSISTENT,
                candidate_index=1,
                provenance=Provenance(0.0, "trace", ""),
            )
        return specs, report

    # -- phase 3c: static specs with swap validation -----------------------

    def _contract_text(self, unit: FunctionUnit, contract: FunctionContract) -> str:
        return (
            f"Function: {unit.name}\n"
            f"Precondition: {contract.precondition}\n"
            f"Postcondition: {contract.postcondition}\n\n"
            "Required C signature (use exactly this):\n"
            f"{unit.signature}"
        )

    def _swap_check(self, rel: str, unit: FunctionUnit, regenerated: str) -> bool:
        """Does the project still pass with `regenerated` in place of `unit`?"""
        tree = copy_tree(
            self.manifest.root,
            tempfile.mkdtemp(dir=self._scratch_dir(), prefix="swap-") + "/t",
        )
        try:
            path = tree / rel
            spliced = splice_replace(
                path.read_text(encoding="utf-8"), unit, regenerated
            )
            path.write_text(spliced, encoding="utf-8")
            try:
                binary = run_build_command(self.manifest, tree)
            except CompileFailed:
                return False
            outcome = run_e2e(
                binary, self.manifest.e2e_tests, self.limits,
                bit_exact=self.manifest.bit_exact,
            )
            return outcome.passed
        finally:
            shutil.rmtree(tree.parent, ignore_errors=True)

    def _static_spec(self, rel: str, unit: FunctionUnit) -> Specification | None:
        """Candidate loop: contract -> C regeneration -> swap check.

        Lazy like the single-program path: each candidate costs one spec
        request plus one regeneration request, and the first contract whose
        regeneration keeps the test suite green is frozen.
        """
        for index in range(1, self.budget.static_max + 1):
            request = compose_fn_spec_prompt(unit, Language.C, self.library)
            response = self.provider.complete(request)
            try:
                contract = parse_fn_contract(response.text, unit.name)
            except SpecParseFailed:
                continue  # malformed answer still consumes a candidate slot
            spec = Specification(
                modality=Modality.STATIC,
                payload=_contract_payload(unit.name, contract),
                status=SpecStatus.CANDIDATE,
                candidate_index=index,
                provenance=Provenance(
                    request.temperature, response.provider_id, response.prompt_digest
                ),
            )
            cg_request = compose_fn_codegen_prompt(
                self._contract_text(unit, contract), unit.name,
                Language.C, self.library,
            )
            cg_response = self.provider.complete(cg_request)
            try:
                regenerated = extract_code_block(cg_response.text, Language.C)
            except ExtractionFailed:
                continue
            if self._swap_check(rel, unit, regenerated):
                return replace(spec, status=SpecStatus.SELF_CONSISTENT)
        return None

    # -- phase 5: translation ladder ---------------------------------------

    def _spec_block(
        self,
        glue: FfiGlue,
        specs: Mapping[Modality, Specification],
        modality: Modality | None,
    ) -> str:
        """The specification section of one translation prompt.

        The ABI glue appears in every stage, vanilla included: without the
        exported signature the candidate cannot link at all, so it is
        interface, not hint.
        """
        parts = [
            "Required exported signature (fill in the body, keep the "
            "attribute and signature):",
            "```rust",
            glue.rust_export,
            "```",
        ]
        if glue.extern_decls:
            parts += [
                "",
                "Project functions still in C; call them through these "
                "declarations instead of reimplementing them:",
                "```rust",
                glue.extern_decls.rstrip("\n"),
                "```",
            ]
        spec = specs.get(modality) if modality is not None else None
        if spec is not None and modality is Modality.STATIC:
            contract = spec.payload.contracts[0][1]
            parts += [
                "",
                "Contract for the original function:",
                f"Precondition: {contract.precondition}",
                f"Postcondition: {contract.postcondition}",
            ]
        elif spec is not None and modality is Modality.IO:
            parts += ["", "Calls observed while running the project's tests "
                          "(arguments -> return):"]
            for pair in spec.payload.pairs:
                args = pair.stdin.decode("utf-8").rstrip("\n")
                ret = pair.stdout.decode("utf-8")
                parts.append(f"  {args} -> {ret}")
        elif spec is not None and modality is Modality.DESC:
            parts += [
                "",
                "Documentation comment from the original source:",
                spec.payload.text,
            ]
        return "\n".join(parts)

    def _judge(
        self,
        unit: FunctionUnit,
        candidate: str,
        modality: Modality | None,
    ) -> StageRecord:
        """Mixed build + full e2e suite; compile errors get repair rounds."""
        current = candidate
        repair_calls = 0
        while True:
            tree_parent = Path(tempfile.mkdtemp(dir=self._scratch_dir(), prefix="mix-"))
            tree = tree_parent / "t"
            log = None
            try:
                copy_tree(self.manifest.root, tree)
                try:
                    binary = mixed_build(
                        self.manifest, tree,
                        self._swap_map(unit), self._link_set(unit, current),
                    )
                except CompileFailed as exc:
                    log = exc.log
                else:
                    outcome = run_e2e(
                        binary, self.manifest.e2e_tests, self.limits,
                        bit_exact=self.manifest.bit_exact,
                    )
                    if outcome.passed:
                        return StageRecord(
                            modality=modality, candidate=current, passed=True,
                            repair_calls=repair_calls,
                        )
                    return StageRecord(
                        modality=modality, candidate=current, passed=False,
                        failure=_classify(outcome, self.manifest),
                        repair_calls=repair_calls,
                    )
            finally:
                shutil.rmtree(tree_parent, ignore_errors=True)
            if repair_calls >= self.repair_rounds:
                return StageRecord(
                    modality=modality, candidate=current, passed=False,
                    failure=FailureKind.COMPILE, repair_calls=repair_calls,
                )
            request = compose_repair_prompt(current, log, self.target, self.library)
            response = self.provider.complete(request)
            repair_calls += 1
            try:
                current = extract_code_block(response.text, self.target)
            except ExtractionFailed:
                return StageRecord(
                    modality=modality, candidate=current, passed=False,
                    failure=FailureKind.COMPILE, repair_calls=repair_calls,
                )

    def _swap_map(self, unit: FunctionUnit) -> dict[str, list[FunctionUnit]]:
        """Source file -> units leaving C, for the accepted set plus `unit`."""
        names = set(self._accepted) | {unit.name}
        out: dict[str, list[FunctionUnit]] = {}
        for name in names:
            rel, u = self._units[name]
            out.setdefault(rel, []).append(u)
        return out

    def _link_set(self, unit: FunctionUnit, candidate: str) -> dict[str, str]:
        return {**self._accepted, unit.name: candidate}

    def _translate(
        self,
        unit: FunctionUnit,
        glue: FfiGlue,
        specs: Mapping[Modality, Specification],
    ) -> StageResult:
        plan = modality_order(specs.keys())[: self.k_max]
        records = []
        for i, modality in enumerate(plan):
            temperature = FIRST_STAGE_TEMPERATURE if i == 0 else LATER_STAGE_TEMPERATURE
            request = compose_fn_translation_prompt(
                unit, Language.C, self.target,
                self._spec_block(glue, specs, modality), temperature, self.library,
            )
            response = self.provider.complete(request)
            try:
                candidate = extract_code_block(response.text, self.target)
            except ExtractionFailed:
                records.append(StageRecord(
                    modality=modality, candidate="", passed=False,
                    failure=FailureKind.COMPILE,
                ))
                continue
            record = self._judge(unit, candidate, modality)
            records.append(record)
            if record.passed:
                break
        return StageResult(program_id=unit.name, stages=tuple(records))

    # -- the whole pipeline -----------------------------------------------

    def run(self) -> ProjectResult:
        tracked = list(self.manifest.entry_sources) + list(self.manifest.headers)
        digest_before = tree_digest(self.manifest.root, tracked)
        try:
            return self._run_phases()
        finally:
            if tree_digest(self.manifest.root, tracked) != digest_before:
                raise ProjectStateError(
                    "project tree was modified during the run; restore it "
                    "from version control before running again"
                )
            if self._owns_scratch and self._scratch is not None:
                shutil.rmtree(self._scratch, ignore_errors=True)
                self._scratch = None

    def _run_phases(self) -> ProjectResult:
        baseline = self._pristine_check()
        selected = self._decompose()
        ordered = translation_order(selected)

        desc = (
            self._desc_specs(ordered)
            if Modality.DESC in self.modalities else {}
        )
        if Modality.IO in self.modalities:
            traced, instrumented = self._traced_specs(ordered, baseline)
        else:
            traced, instrumented = {}, InstrumentReport((), (), ())

        static: dict[str, Specification] = {}
        statics_wanted = Modality.STATIC in self.modalities
        glue: dict[str, FfiGlue] = {}
        skipped: dict[str, str] = {}
        for unit in ordered:
            try:
                glue[unit.name] = generate_ffi_glue(unit, self._all_units())
            except NonRenderable as exc:
                skipped[unit.name] = str(exc)
                continue
            if statics_wanted:
                rel, _ = self._units[unit.name]
                spec = self._static_spec(rel, unit)
                if spec is not None:
                    static[unit.name] = spec

        outcomes: list[FunctionOutcome] = []
        attempted: list[StageResult] = []
        for unit in ordered:
            if unit.name in skipped:
                outcomes.append(FunctionOutcome(
                    name=unit.name, status=FunctionStatus.SKIPPED,
                    reason=skipped[unit.name],
                ))
                continue
            specs = {
                m: source[unit.name]
                for m, source in (
                    (Modality.STATIC, static),
                    (Modality.IO, traced),
                    (Modality.DESC, desc),
                )
                if unit.name in source
            }
            stages = self._translate(unit, glue[unit.name], specs)
            attempted.append(stages)
            winner = stages.first_passing()
            if winner is not None:
                if self.accumulate:
                    self._accepted[unit.name] = winner.candidate
                outcomes.append(FunctionOutcome(
                    name=unit.name, status=FunctionStatus.TRANSLATED_PASSING,
                    stages=stages, rust=winner.candidate,
                ))
            else:
                outcomes.append(FunctionOutcome(
                    name=unit.name, status=FunctionStatus.TRANSLATED_FAILING,
                    stages=stages,
                ))

        notes = tuple(f"skipped {name}: {why}" for name, why in skipped.items())
        report = aggregate_pass_at_k(attempted, k_max=self.k_max, notes=notes)
        counts = {
            Modality.STATIC.value: len(static),
            Modality.IO.value: len(traced),
            Modality.DESC.value: len(desc),
        }
        return ProjectResult(
            functions=tuple(outcomes),
            report=report,
            instrumented=instrumented,
            spec_counts=counts,
        )

    def _scratch_dir(self) -> Path:
        if self._scratch is None:
            self._scratch = Path(tempfile.mkdtemp(prefix="spectra-project-"))
        return Path(self._scratch)


def _contract_payload(name: str, contract: FunctionContract) -> StaticSpec:
    # function-level contracts have no program io format; both fields stay
    # empty and rendering always goes through the runner's own block builder
    return StaticSpec(input_format="", output_format="",
                      contracts=((name, contract),))


def _classify(outcome, manifest: ProjectManifest) -> FailureKind:
    expected = {t.test_id: t.expected_exit for t in manifest.e2e_tests}
    failing = [r for r in outcome.runs if not r.ok]
    if any(r.exit_code is None for r in failing):
        return FailureKind.TIMEOUT
    if any(r.exit_code != expected[r.test_id] for r in failing):
        return FailureKind.RUNTIME
    return FailureKind.WRONG_OUTPUT
