"""Result tables and solve attribution across runs.

Two consumers: the CLI prints the text forms, tests and tooling read the
dict forms.  Attribution partitions a corpus by which labeled runs solved
each program; the regions are disjoint and always sum to the corpus size,
so adding a run can move programs between regions but never lose any.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import UsageError
from .model import PassAtKReport, StageResult


def render_report(report: PassAtKReport, title: str = "") -> str:
    """Fixed-width table, one row per k.

    With a baseline the columns read baseline, treated, improvement, in
    that order; without one there is a single solved column.
    """
    lines = []
    if title:
        lines.append(title)
    lines.append(f"programs: {report.total}")
    if report.baseline is not None:
        lines.append(f"{'':>8}  {'baseline':>8}  {'treated':>8}  {'improvement':>11}")
        for k in range(1, report.k_max + 1):
            lines.append(
                f"{'pass@' + str(k):>8}  {report.baseline[k - 1]:>8}  "
                f"{report.correct[k - 1]:>8}  {report.improvement_text(k):>11}"
            )
    else:
        lines.append(f"{'':>8}  {'solved':>8}")
        for k in range(1, report.k_max + 1):
            lines.append(f"{'pass@' + str(k):>8}  {report.correct[k - 1]:>8}")
    for note in report.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines)


def report_json(report: PassAtKReport) -> dict:
    per_k = {}
    for k in range(1, report.k_max + 1):
        row: dict = {"solved": report.correct[k - 1]}
        if report.baseline is not None:
            row["baseline"] = report.baseline[k - 1]
            row["improvement_percent"] = report.improvement(k)
            row["improvement_text"] = report.improvement_text(k)
        per_k[str(k)] = row
    return {"total": report.total, "pass_at": per_k, "notes": list(report.notes)}


@dataclass(frozen=True)
class Attribution:
    """Disjoint solver regions over one corpus.

    regions maps a sorted tuple of run labels to the number of programs
    solved by exactly that set of runs; the empty tuple counts programs no
    run solved.
    """

    k: int
    total: int
    labels: tuple[str, ...]
    regions: Mapping[tuple[str, ...], int]

    def __post_init__(self) -> None:
        if sum(self.regions.values()) != self.total:
            raise UsageError("attribution regions must partition the corpus")

    def solved_by(self, label: str) -> int:
        """Programs the labeled run solved, regardless of who else did."""
        return sum(n for region, n in self.regions.items() if label in region)

    def only(self, label: str) -> int:
        """Programs only the labeled run solved."""
        return self.regions.get((label,), 0)

    def unsolved(self) -> int:
        return self.regions.get((), 0)


def attribute(
    runs: Mapping[str, Sequence[StageResult]], k: int = 1
) -> Attribution:
    """Partition programs by the exact set of runs that solved them at k.

    Every run must cover the same program ids; differing corpora would make
    the regions meaningless.
    """
    if not runs:
        raise UsageError("attribution needs at least one labeled run")
    if k < 1:
        raise UsageError("k must be >= 1")
    by_label = {label: {r.program_id: r for r in results} for label, results in runs.items()}
    corpora = {label: frozenset(results) for label, results in by_label.items()}
    reference = next(iter(corpora.values()))
    for label, ids in corpora.items():
        if ids != reference:
            odd = sorted(ids ^ reference)
            raise UsageError(
                f"run {label!r} covers different programs: {odd[:5]}"
            )
    regions: dict[tuple[str, ...], int] = {}
    for program_id in reference:
        solvers = tuple(
            sorted(
                label
                for label, results in by_label.items()
                if results[program_id].passed_within(k)
            )
        )
        regions[solvers] = regions.get(solvers, 0) + 1
    return Attribution(
        k=k,
        total=len(reference),
        labels=tuple(sorted(runs)),
        regions=regions,
    )


def render_attribution(attribution: Attribution) -> str:
    lines = [
        f"programs: {attribution.total} (pass@{attribution.k})",
    ]
    for region in sorted(attribution.regions, key=lambda r: (-len(r), r)):
        name = " + ".join(region) if region else "none"
        lines.append(f"{name + ' only' if len(region) == 1 else name}: "
                     f"{attribution.regions[region]}")
    for label in attribution.labels:
        lines.append(f"{label} total: {attribution.solved_by(label)}")
    return "\n".join(lines)
