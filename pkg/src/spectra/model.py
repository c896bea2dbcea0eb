"""Core domain model: languages, programs, specs, stage results, accounting.

Value semantics throughout.  Every type here is a frozen dataclass or an Enum;
two values compare equal iff their fields do, and nothing mutates after
construction.  Pipeline modules communicate exclusively through these types.

Invariants enforced here:
  * a translation pair must be one of C->Rust, C->Go, JavaScript->TypeScript
  * modality_order(available) is always a prefix-closed subsequence of
    [STATIC, IO, DESC, None]; the vanilla stage (None) is always last
  * pass@k counts a program as solved iff any of its first k stage verdicts
    passed; k is clamped to the number of stages actually run
  * improvement percentages round half away from zero and are computed with
    exact rational arithmetic, never floats
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import UnsupportedPair, UsageError


class Language(Enum):
    C = "c"
    RUST = "rust"
    GO = "go"
    JAVASCRIPT = "javascript"
    TYPESCRIPT = "typescript"

    @classmethod
    def parse(cls, text: str) -> "Language":
        t = text.strip().lower()
        aliases = {
            "c": cls.C,
            "rust": cls.RUST,
            "rs": cls.RUST,
            "go": cls.GO,
            "golang": cls.GO,
            "javascript": cls.JAVASCRIPT,
            "js": cls.JAVASCRIPT,
            "typescript": cls.TYPESCRIPT,
            "ts": cls.TYPESCRIPT,
        }
        if t not in aliases:
            raise UsageError(f"unknown language: {text!r}")
        return aliases[t]


# The only pairs the pipeline will translate.  Anything else is rejected when
# the run is configured, not when the first prompt goes out.
SUPPORTED_PAIRS: frozenset[tuple[Language, Language]] = frozenset(
    {
        (Language.C, Language.RUST),
        (Language.C, Language.GO),
        (Language.JAVASCRIPT, Language.TYPESCRIPT),
    }
)


def require_supported_pair(source: Language, target: Language) -> None:
    if (source, target) not in SUPPORTED_PAIRS:
        raise UnsupportedPair(
            f"unsupported translation pair {source.value} -> {target.value}; "
            "supported: c->rust, c->go, javascript->typescript"
        )


class Modality(Enum):
    """Spec modalities, in the order translation stages consume them."""

    STATIC = "static"
    IO = "io"
    DESC = "desc"

    @classmethod
    def parse(cls, text: str) -> "Modality":
        t = text.strip().lower()
        for m in cls:
            if m.value == t:
                return m
        raise UsageError(f"unknown modality: {text!r} (expected static, io or desc)")


# Fixed stage ordering.  None is the vanilla stage: translate with no spec.
MODALITY_RANK: tuple[Modality, ...] = (Modality.STATIC, Modality.IO, Modality.DESC)


def modality_order(available: Iterable[Modality]) -> list[Modality | None]:
    """Stage plan for a program given which spec modalities exist for it.

    Missing modalities are omitted rather than padded, and the vanilla stage
    always comes last: {STATIC, DESC} -> [STATIC, DESC, None].
    """
    have = set(available)
    plan: list[Modality | None] = [m for m in MODALITY_RANK if m in have]
    plan.append(None)
    return plan


class SpecStatus(Enum):
    CANDIDATE = "candidate"  # parsed from a model response, not yet validated
    SELF_CONSISTENT = "self_consistent"  # survived back-translation or exact io check
    PATCHED = "patched"  # io pairs corrected with observed program output
    REJECTED = "rejected"  # failed validation; kept only for audit


class FailureKind(Enum):
    NONE = "none"
    COMPILE = "compile"
    RUNTIME = "runtime"
    WRONG_OUTPUT = "wrong_output"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class TestCase:
    """One stdin/expected-stdout pair for a whole program."""

    test_id: str
    stdin: bytes
    expected_stdout: bytes


@dataclass(frozen=True)
class FunctionUnit:
    """One function extracted from a source file.

    byte_range covers the full definition (signature through closing brace)
    as offsets into the owning program's source text.  callees are names
    defined in the same program; externals are called names that are not.
    """

    name: str
    signature: str  # text up to but not including the body's opening brace
    body: str  # full definition text, signature included
    docstring: str | None = None  # comment block immediately above, verbatim
    byte_range: tuple[int, int] = (0, 0)
    callees: frozenset[str] = frozenset()
    externals: frozenset[str] = frozenset()


@dataclass(frozen=True)
class SourceProgram:
    """A translation unit: source text plus the tests that define correctness."""

    program_id: str
    language: Language
    source: str
    functions: tuple[FunctionUnit, ...]
    tests: tuple[TestCase, ...] = ()

    def __post_init__(self) -> None:
        if not self.source.strip():
            raise UsageError(f"program {self.program_id}: empty source")
        if not self.functions:
            raise UsageError(f"program {self.program_id}: no function units")
        ids = [t.test_id for t in self.tests]
        if len(ids) != len(set(ids)):
            raise UsageError(f"program {self.program_id}: duplicate test ids")

    def function_named(self, name: str) -> FunctionUnit:
        for fn in self.functions:
            if fn.name == name:
                return fn
        raise UsageError(f"program {self.program_id}: no function named {name}")


@dataclass(frozen=True)
class FunctionContract:
    precondition: str
    postcondition: str


@dataclass(frozen=True)
class StaticSpec:
    """Input/output format plus one pre/postcondition pair per function."""

    input_format: str
    output_format: str
    contracts: tuple[tuple[str, FunctionContract], ...]  # (function name, contract)

    def contract_for(self, name: str) -> FunctionContract | None:
        for fn_name, contract in self.contracts:
            if fn_name == name:
                return contract
        return None


class PairOrigin(Enum):
    MODEL = "model"  # emitted by the spec-generation model, kept as written
    PATCHED = "patched"  # output replaced by what the original program printed
    TRACED = "traced"  # observed by runtime instrumentation


@dataclass(frozen=True)
class IoPair:
    stdin: bytes
    stdout: bytes
    origin: PairOrigin = PairOrigin.MODEL


@dataclass(frozen=True)
class IoSpec:
    pairs: tuple[IoPair, ...]

    def __post_init__(self) -> None:
        if not self.pairs:
            raise UsageError("io spec must carry at least one pair")


class DescSource(Enum):
    MODEL = "model"
    DOCSTRING = "docstring"


@dataclass(frozen=True)
class DescSpec:
    text: str
    source: DescSource = DescSource.MODEL

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise UsageError("description spec must be non-empty")


@dataclass(frozen=True)
class Provenance:
    """How a spec came to exist; enough to audit or replay its generation."""

    temperature: float
    provider_id: str
    prompt_digest: str


@dataclass(frozen=True)
class Specification:
    modality: Modality
    payload: StaticSpec | IoSpec | DescSpec
    status: SpecStatus
    candidate_index: int  # 1-based position within its generation budget
    provenance: Provenance

    def __post_init__(self) -> None:
        expected = {
            Modality.STATIC: StaticSpec,
            Modality.IO: IoSpec,
            Modality.DESC: DescSpec,
        }[self.modality]
        if not isinstance(self.payload, expected):
            raise UsageError(
                f"{self.modality.value} spec cannot carry {type(self.payload).__name__}"
            )
        if self.candidate_index < 1:
            raise UsageError("candidate_index is 1-based")


# Ranking used when several validated specs exist for the same modality:
# prefer fully self-consistent specs over patched ones.
_STATUS_RANK = {
    SpecStatus.SELF_CONSISTENT: 0,
    SpecStatus.PATCHED: 1,
    SpecStatus.CANDIDATE: 2,
    SpecStatus.REJECTED: 3,
}


def best_spec(specs: Iterable[Specification]) -> Specification | None:
    """Pick the most trustworthy spec: by status rank, then earliest candidate."""
    usable = [s for s in specs if s.status is not SpecStatus.REJECTED]
    if not usable:
        return None
    return min(usable, key=lambda s: (_STATUS_RANK[s.status], s.candidate_index))


@dataclass(frozen=True)
class StageRecord:
    """One translation stage: which spec drove it and how the candidate fared."""

    modality: Modality | None  # None = vanilla stage, no spec in the prompt
    candidate: str  # target-language source as extracted
    passed: bool
    failure: FailureKind = FailureKind.NONE
    repair_calls: int = 0  # compiler-feedback regenerations consumed
    skipped: tuple[Modality, ...] = ()  # modalities dropped for prompt-size budget
    all_specs: bool = False  # prompt carried every available spec at once

    def __post_init__(self) -> None:
        if self.passed and self.failure is not FailureKind.NONE:
            raise UsageError("a passing stage cannot carry a failure kind")
        if not self.passed and self.failure is FailureKind.NONE:
            raise UsageError("a failing stage must say how it failed")


@dataclass(frozen=True)
class StageResult:
    """All stages attempted for one program, in execution order."""

    program_id: str
    stages: tuple[StageRecord, ...]

    def passed_within(self, k: int) -> bool:
        """Pass@k indicator: did any of the first k stages pass?

        k beyond the number of stages run is clamped, so a program whose plan
        had only two stages contributes its stage-2 verdict to pass@3.
        """
        if k < 1:
            raise UsageError("k must be >= 1")
        return any(s.passed for s in self.stages[:k])

    def first_passing(self) -> StageRecord | None:
        for s in self.stages:
            if s.passed:
                return s
        return None


@dataclass(frozen=True)
class PassAtKReport:
    """Solved counts for k = 1..k_max, with an optional baseline column.

    correct[i] is the number of programs solved within i+1 stages.  Counts are
    monotone in k by construction (a later stage can only add solves).
    """

    total: int
    correct: tuple[int, ...]
    baseline: tuple[int, ...] | None = None
    notes: tuple[str, ...] = ()  # e.g. programs excluded as incomplete

    def __post_init__(self) -> None:
        if self.total < 0 or not self.correct:
            raise UsageError("report needs total >= 0 and at least one k")
        for i, c in enumerate(self.correct):
            if not 0 <= c <= self.total:
                raise UsageError(f"correct[{i}]={c} outside [0, {self.total}]")
            if i and c < self.correct[i - 1]:
                raise UsageError("pass@k counts must be monotone in k")
        if self.baseline is not None and len(self.baseline) != len(self.correct):
            raise UsageError("baseline column must cover the same k range")

    @property
    def k_max(self) -> int:
        return len(self.correct)

    def improvement(self, k: int) -> int | None:
        """Rounded percent improvement over baseline at k, None if no baseline."""
        if self.baseline is None:
            return None
        return improvement_percent(self.baseline[k - 1], self.correct[k - 1])

    def improvement_text(self, k: int) -> str | None:
        if self.baseline is None:
            return None
        return format_improvement(self.baseline[k - 1], self.correct[k - 1])


def compute_pass_at_k(result: StageResult, k_max: int = 3) -> tuple[bool, ...]:
    """Per-program pass@k indicators for k = 1..k_max."""
    return tuple(result.passed_within(k) for k in range(1, k_max + 1))


def aggregate_pass_at_k(
    results: Sequence[StageResult],
    k_max: int = 3,
    baseline: Sequence[StageResult] | None = None,
    notes: Iterable[str] = (),
) -> PassAtKReport:
    """Sum per-program indicators into a corpus report.

    When a baseline run is supplied it must cover the same programs; the
    report then carries both columns so improvement percentages are defined.
    """
    if baseline is not None:
        ours = {r.program_id for r in results}
        theirs = {r.program_id for r in baseline}
        if ours != theirs:
            missing = sorted(ours ^ theirs)
            raise UsageError(f"baseline covers different programs: {missing[:5]}")
    correct = tuple(
        sum(1 for r in results if r.passed_within(k)) for k in range(1, k_max + 1)
    )
    base = None
    if baseline is not None:
        base = tuple(
            sum(1 for r in baseline if r.passed_within(k)) for k in range(1, k_max + 1)
        )
    return PassAtKReport(
        total=len(results), correct=correct, baseline=base, notes=tuple(notes)
    )


def _round_half_away(x: Fraction) -> int:
    if x >= 0:
        return math.floor(x + Fraction(1, 2))
    return math.ceil(x - Fraction(1, 2))


def improvement_percent(baseline: int, treated: int) -> int:
    """100 * (treated - baseline) / baseline, rounded half away from zero.

    Exact rational arithmetic: improvement_percent(176, 196) is 11, not 11.36
    truncated by accident, and improvement_percent(295, 294) is 0 (the raw
    value -0.339 rounds to zero; use format_improvement for sub-percent text).
    """
    if baseline <= 0:
        raise UsageError("improvement undefined for baseline <= 0")
    return _round_half_away(Fraction(100 * (treated - baseline), baseline))


def format_improvement(baseline: int, treated: int) -> str:
    """Render improvement for a report cell.

    Values whose magnitude is under one percent keep a single decimal place
    so small regressions stay visible: (295, 294) -> "-0.3%", not "0%".
    """
    if baseline <= 0:
        raise UsageError("improvement undefined for baseline <= 0")
    raw = Fraction(100 * (treated - baseline), baseline)
    if raw != 0 and abs(raw) < 1:
        tenths = _round_half_away(raw * 10)
        return f"{tenths / 10:.1f}%"
    return f"{improvement_percent(baseline, treated)}%"


@dataclass(frozen=True)
class SpecSet:
    """Validated specs for one program, at most one per modality."""

    by_modality: tuple[tuple[Modality, Specification], ...]

    @classmethod
    def of(cls, specs: Mapping[Modality, Specification]) -> "SpecSet":
        ordered = tuple(
            (m, specs[m]) for m in MODALITY_RANK if m in specs
        )
        return cls(by_modality=ordered)

    def get(self, modality: Modality) -> Specification | None:
        for m, s in self.by_modality:
            if m is modality:
                return s
        return None

    def available(self) -> list[Modality]:
        return [m for m, _ in self.by_modality]

    def stage_plan(self) -> list[Modality | None]:
        return modality_order(self.available())
