"""On-disk stores for specifications and run results.

Layout under a store root:

    specs/<program_id>/<modality>/<candidate_index>.json
    runs/<run_id>/config.json      what the run was asked to do
    runs/<run_id>/results.jsonl    one StageResult per line
    runs/<run_id>/requests.jsonl   provider accounting (digest, tag, temp)
    runs/<run_id>/report.json      final pass@k table, written on success

Spec payload bytes (io pair stdin/stdout) travel as base64 so the files
stay valid JSON regardless of what the original programs read and write.
Loading a spec picks the best candidate saved for that modality: validated
beats patched beats raw candidate, earlier index breaks ties.
"""
from __future__ import annotations

import base64
import json
import re
import threading
from pathlib import Path
from typing import Iterator

from .errors import UsageError
from .model import (
    DescSource,
    DescSpec,
    FailureKind,
    FunctionContract,
    IoPair,
    IoSpec,
    Modality,
    PairOrigin,
    PassAtKReport,
    Provenance,
    SpecSet,
    SpecStatus,
    Specification,
    StageRecord,
    StageResult,
    StaticSpec,
    best_spec,
)
from .provider.base import ChatRequest

SPEC_SCHEMA = "spectra-spec-v1"
RUN_SCHEMA = "spectra-run-v1"


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def _unb64(text: str) -> bytes:
    return base64.b64decode(text.encode("ascii"))


def spec_to_dict(spec: Specification) -> dict:
    if spec.modality is Modality.STATIC:
        payload = {
            "input_format": spec.payload.input_format,
            "output_format": spec.payload.output_format,
            "contracts": [
                [name, {"precondition": c.precondition, "postcondition": c.postcondition}]
                for name, c in spec.payload.contracts
            ],
        }
    elif spec.modality is Modality.IO:
        payload = {
            "pairs": [
                {
                    "stdin": _b64(p.stdin),
                    "stdout": _b64(p.stdout),
                    "origin": p.origin.value,
                }
                for p in spec.payload.pairs
            ]
        }
    else:
        payload = {"text": spec.payload.text, "source": spec.payload.source.value}
    return {
        "schema": SPEC_SCHEMA,
        "modality": spec.modality.value,
        "status": spec.status.value,
        "candidate_index": spec.candidate_index,
        "payload": payload,
        "provenance": {
            "temperature": spec.provenance.temperature,
            "provider_id": spec.provenance.provider_id,
            "prompt_digest": spec.provenance.prompt_digest,
        },
    }


def spec_from_dict(data: dict) -> Specification:
    if data.get("schema") != SPEC_SCHEMA:
        raise UsageError(f"not a spec record: schema={data.get('schema')!r}")
    modality = Modality(data["modality"])
    raw = data["payload"]
    if modality is Modality.STATIC:
        payload = StaticSpec(
            input_format=raw["input_format"],
            output_format=raw["output_format"],
            contracts=tuple(
                (name, FunctionContract(c["precondition"], c["postcondition"]))
                for name, c in raw["contracts"]
            ),
        )
    elif modality is Modality.IO:
        payload = IoSpec(
            pairs=tuple(
                IoPair(
                    stdin=_unb64(p["stdin"]),
                    stdout=_unb64(p["stdout"]),
                    origin=PairOrigin(p["origin"]),
                )
                for p in raw["pairs"]
            )
        )
    else:
        payload = DescSpec(text=raw["text"], source=DescSource(raw["source"]))
    prov = data["provenance"]
    return Specification(
        modality=modality,
        payload=payload,
        status=SpecStatus(data["status"]),
        candidate_index=data["candidate_index"],
        provenance=Provenance(
            temperature=prov["temperature"],
            provider_id=prov["provider_id"],
            prompt_digest=prov["prompt_digest"],
        ),
    )


def result_to_dict(result: StageResult) -> dict:
    return {
        "program_id": result.program_id,
        "stages": [
            {
                "modality": s.modality.value if s.modality else None,
                "candidate": s.candidate,
                "passed": s.passed,
                "failure": s.failure.value,
                "repair_calls": s.repair_calls,
                "skipped": [m.value for m in s.skipped],
                "all_specs": s.all_specs,
            }
            for s in result.stages
        ],
    }


def result_from_dict(data: dict) -> StageResult:
    return StageResult(
        program_id=data["program_id"],
        stages=tuple(
            StageRecord(
                modality=Modality(s["modality"]) if s["modality"] else None,
                candidate=s["candidate"],
                passed=s["passed"],
                failure=FailureKind(s["failure"]),
                repair_calls=s["repair_calls"],
                skipped=tuple(Modality(m) for m in s["skipped"]),
                all_specs=s["all_specs"],
            )
            for s in data["stages"]
        ),
    )


def report_to_dict(report: PassAtKReport) -> dict:
    return {
        "total": report.total,
        "correct": list(report.correct),
        "baseline": list(report.baseline) if report.baseline is not None else None,
        "notes": list(report.notes),
    }


def report_from_dict(data: dict) -> PassAtKReport:
    return PassAtKReport(
        total=data["total"],
        correct=tuple(data["correct"]),
        baseline=tuple(data["baseline"]) if data["baseline"] is not None else None,
        notes=tuple(data["notes"]),
    )


class SpecStore:
    """Candidate and accepted specs for each program, one file per candidate."""

    def __init__(self, root: Path):
        self.root = Path(root)

    def _spec_dir(self, program_id: str, modality: Modality) -> Path:
        return self.root / "specs" / program_id / modality.value

    def save(self, program_id: str, spec: Specification) -> Path:
        directory = self._spec_dir(program_id, spec.modality)
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / f"{spec.candidate_index}.json"
        path.write_text(
            json.dumps(spec_to_dict(spec), indent=2) + "\n", encoding="utf-8"
        )
        return path

    def candidates(self, program_id: str, modality: Modality) -> list[Specification]:
        directory = self._spec_dir(program_id, modality)
        if not directory.is_dir():
            return []
        specs = []
        for path in sorted(directory.glob("*.json"), key=lambda p: int(p.stem)):
            specs.append(spec_from_dict(json.loads(path.read_text(encoding="utf-8"))))
        return specs

    def load(self, program_id: str, modality: Modality) -> Specification | None:
        """Best usable spec saved for this modality, or None."""
        return best_spec(self.candidates(program_id, modality))

    def load_set(self, program_id: str) -> SpecSet:
        found = {}
        for modality in Modality:
            spec = self.load(program_id, modality)
            if spec is not None:
                found[modality] = spec
        return SpecSet.of(found)

    def programs(self) -> list[str]:
        specs_root = self.root / "specs"
        if not specs_root.is_dir():
            return []
        return sorted(p.name for p in specs_root.iterdir() if p.is_dir())


_RUN_ID = re.compile(r"^([a-z][a-z0-9-]*)-(\d{3,})$")


class RunStore:
    """Sequentially numbered run directories plus their artifacts."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self._lock = threading.Lock()

    def _runs_root(self) -> Path:
        return self.root / "runs"

    def list_runs(self) -> list[str]:
        root = self._runs_root()
        if not root.is_dir():
            return []
        return sorted(p.name for p in root.iterdir() if _RUN_ID.match(p.name))

    def new_run(self, kind: str, config: dict) -> "RunHandle":
        if not re.match(r"^[a-z][a-z0-9-]*$", kind):
            raise UsageError(f"run kind must be a lowercase slug, got {kind!r}")
        with self._lock:
            taken = [
                int(m.group(2))
                for name in self.list_runs()
                if (m := _RUN_ID.match(name)) and m.group(1) == kind
            ]
            run_id = f"{kind}-{(max(taken, default=0) + 1):03d}"
            directory = self._runs_root() / run_id
            directory.mkdir(parents=True)
        (directory / "config.json").write_text(
            json.dumps({"schema": RUN_SCHEMA, "kind": kind, **config}, indent=2)
            + "\n",
            encoding="utf-8",
        )
        return RunHandle(run_id, directory)

    def run_dir(self, run_id: str) -> Path:
        directory = self._runs_root() / run_id
        if not directory.is_dir():
            raise UsageError(f"no such run: {run_id}")
        return directory

    def load_results(self, run_id: str) -> list[StageResult]:
        path = self.run_dir(run_id) / "results.jsonl"
        if not path.is_file():
            return []
        return [
            result_from_dict(json.loads(line))
            for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]

    def load_report(self, run_id: str) -> PassAtKReport:
        path = self.run_dir(run_id) / "report.json"
        if not path.is_file():
            raise UsageError(f"run {run_id} has no report (did it finish?)")
        return report_from_dict(json.loads(path.read_text(encoding="utf-8")))

    def load_config(self, run_id: str) -> dict:
        path = self.run_dir(run_id) / "config.json"
        return json.loads(path.read_text(encoding="utf-8"))


class RunHandle:
    """Appender for one run directory; safe to share across worker threads."""

    def __init__(self, run_id: str, directory: Path):
        self.run_id = run_id
        self.directory = directory
        self._lock = threading.Lock()

    def append_result(self, result: StageResult) -> None:
        line = json.dumps(result_to_dict(result))
        with self._lock:
            with open(self.directory / "results.jsonl", "a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    def append_request(self, request: ChatRequest, provider_id: str) -> None:
        line = json.dumps(
            {
                "digest": request.digest(),
                "tag": request.tag.value,
                "temperature": request.temperature,
                "prompt_chars": request.prompt_chars(),
                "provider": provider_id,
            }
        )
        with self._lock:
            with open(self.directory / "requests.jsonl", "a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    def requests(self) -> Iterator[dict]:
        path = self.directory / "requests.jsonl"
        if not path.is_file():
            return iter(())
        return (
            json.loads(line)
            for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        )

    def write_report(self, report: PassAtKReport) -> None:
        (self.directory / "report.json").write_text(
            json.dumps(report_to_dict(report), indent=2) + "\n", encoding="utf-8"
        )
