"""Project manifest: what to build, how to build it, how to judge it.

A manifest is a JSON file next to the project root:

    {
      "schema": "spectra-project-v1",
      "entry_sources": ["main.c"],
      "headers": [],
      "build_command": ["gcc", "-O1", "-w", "-o", "mini", "main.c"],
      "binary": "mini",
      "cc": "gcc",
      "cflags": ["-O1", "-w"],
      "ldflags": [],
      "bit_exact": true,
      "function_allowlist": ["line_width"],
      "e2e_tests": [
        {"id": "t1", "args": ["-n"], "stdin": "a\nb\n",
         "expected_stdout": "     1\ta\n     2\tb\n", "expected_exit": 0}
      ]
    }

build_command runs with the project copy as cwd and must produce `binary`
there.  cc/cflags/ldflags drive the mixed C+Rust build, which compiles the
same sources minus swapped-out functions; keep them consistent with
build_command or the two builds will diverge.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..errors import UsageError

SCHEMA = "spectra-project-v1"


@dataclass(frozen=True)
class EndToEndTest:
    test_id: str
    args: tuple[str, ...] = ()
    stdin: bytes = b""
    expected_stdout: bytes = b""
    expected_exit: int = 0


@dataclass(frozen=True)
class ProjectManifest:
    root: Path
    entry_sources: tuple[str, ...]
    build_command: tuple[str, ...]
    binary: str
    e2e_tests: tuple[EndToEndTest, ...]
    headers: tuple[str, ...] = ()
    cc: str = "gcc"
    cflags: tuple[str, ...] = ("-O1", "-w")
    ldflags: tuple[str, ...] = ()
    bit_exact: bool = True
    function_allowlist: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if not self.entry_sources:
            raise UsageError("manifest needs at least one entry source")
        if not self.build_command:
            raise UsageError("manifest needs a build command")
        if not self.e2e_tests:
            raise UsageError("manifest needs at least one end-to-end test")
        ids = [t.test_id for t in self.e2e_tests]
        if len(ids) != len(set(ids)):
            raise UsageError("duplicate e2e test ids")

    @classmethod
    def load(cls, path: Path) -> "ProjectManifest":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read manifest {path}: {exc}") from exc
        if data.get("schema") != SCHEMA:
            raise UsageError(
                f"manifest {path} has schema {data.get('schema')!r}, expected {SCHEMA}"
            )
        tests = tuple(
            EndToEndTest(
                test_id=t["id"],
                args=tuple(t.get("args", ())),
                stdin=t.get("stdin", "").encode("utf-8"),
                expected_stdout=t.get("expected_stdout", "").encode("utf-8"),
                expected_exit=int(t.get("expected_exit", 0)),
            )
            for t in data.get("e2e_tests", ())
        )
        allow = data.get("function_allowlist")
        return cls(
            root=path.parent.resolve(),
            entry_sources=tuple(data.get("entry_sources", ())),
            build_command=tuple(data.get("build_command", ())),
            binary=data.get("binary", ""),
            e2e_tests=tests,
            headers=tuple(data.get("headers", ())),
            cc=data.get("cc", "gcc"),
            cflags=tuple(data.get("cflags", ("-O1", "-w"))),
            ldflags=tuple(data.get("ldflags", ())),
            bit_exact=bool(data.get("bit_exact", True)),
            function_allowlist=tuple(allow) if allow is not None else None,
        )

    def source_paths(self, root: Path | None = None) -> list[Path]:
        base = Path(root) if root is not None else self.root
        return [base / rel for rel in self.entry_sources]
