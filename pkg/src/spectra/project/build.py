"""Build drivers: pristine project builds, function splicing, mixed C+Rust
links, and end-to-end test execution.

The mixed build never mutates the input tree.  It gets a fresh copy, splices
the swapped functions out of their files (definition replaced by a bare
prototype), compiles the Rust translations into one staticlib, compiles each
C file, and links with cc so the C runtime setup stays in charge.  Every
translated function lives in its own Rust module inside the combined crate;
#[no_mangle] exports ignore module paths, and the wrapping keeps one
translation's use statements and extern blocks from colliding with
another's.
"""
from __future__ import annotations

import os
import re
import shutil
import signal
import subprocess
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from ..errors import CompileFailed, EnvironmentProblem, UsageError
from ..model import FunctionUnit
from ..sandbox import RunLimits, normalize
from .ffi import c_prototype
from .manifest import EndToEndTest, ProjectManifest

RUSTC = ("rustc", "--edition", "2021", "-O", "--crate-type=staticlib")
LINK_LIBS = ("-lpthread", "-ldl", "-lm")  # what Rust's std needs at link time


def run_command(
    argv: Sequence[str],
    cwd: Path,
    timeout: float,
    stdin: bytes = b"",
    env: dict[str, str] | None = None,
) -> tuple[int | None, bytes, bytes]:
    """Run one command in its own process group; exit code None on timeout."""
    full_env = dict(os.environ)
    if env:
        full_env.update(env)
    try:
        proc = subprocess.Popen(
            list(argv),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            cwd=str(cwd),
            env=full_env,
            start_new_session=True,
        )
    except FileNotFoundError as exc:
        raise EnvironmentProblem(f"command not found: {argv[0]}") from exc
    try:
        out, err = proc.communicate(input=stdin, timeout=timeout)
        return proc.returncode, out, err
    except subprocess.TimeoutExpired:
        try:
            os.killpg(proc.pid, signal.SIGKILL)
        except ProcessLookupError:
            pass
        out, err = proc.communicate()
        return None, out, err


def run_build_command(manifest: ProjectManifest, cwd: Path, timeout: float = 120.0) -> Path:
    """Run the manifest's own build command; returns the binary path."""
    code, out, err = run_command(manifest.build_command, cwd=cwd, timeout=timeout)
    if code != 0:
        log = (out + b"\n" + err).decode("utf-8", errors="replace").strip()
        if code is None:
            log += "\n[build timed out]"
        raise CompileFailed(log)
    binary = cwd / manifest.binary
    if not binary.is_file():
        raise CompileFailed(
            f"build command succeeded but {manifest.binary} was not produced"
        )
    return binary


@dataclass(frozen=True)
class E2eRun:
    test_id: str
    ok: bool
    exit_code: int | None
    stdout: bytes
    stderr: bytes


@dataclass(frozen=True)
class E2eOutcome:
    runs: tuple[E2eRun, ...]

    @property
    def passed(self) -> bool:
        return bool(self.runs) and all(r.ok for r in self.runs)

    def failures(self) -> list[str]:
        return [r.test_id for r in self.runs if not r.ok]


def run_e2e(
    binary: Path,
    tests: Sequence[EndToEndTest],
    limits: RunLimits,
    bit_exact: bool = True,
    env: dict[str, str] | None = None,
) -> E2eOutcome:
    """Run every end-to-end test against a built binary."""
    runs = []
    for test in tests:
        code, out, err = run_command(
            [str(binary), *test.args],
            cwd=binary.parent,
            timeout=limits.wall_timeout,
            stdin=test.stdin,
            env=env,
        )
        if bit_exact:
            output_ok = out == test.expected_stdout
        else:
            output_ok = normalize(out) == normalize(test.expected_stdout)
        ok = code == test.expected_exit and output_ok
        runs.append(
            E2eRun(test_id=test.test_id, ok=ok, exit_code=code, stdout=out, stderr=err)
        )
    return E2eOutcome(runs=tuple(runs))


def splice_functions(text: str, units: Sequence[FunctionUnit]) -> str:
    """Replace each unit's definition with a bare prototype.

    Later offsets are rewritten first so earlier byte ranges stay valid.
    """
    for unit in sorted(units, key=lambda u: u.byte_range[0], reverse=True):
        start, end = unit.byte_range
        if text[start:end] != unit.body:
            raise UsageError(
                f"cannot splice {unit.name}: file changed since decomposition"
            )
        text = text[:start] + c_prototype(unit.signature) + text[end:]
    return text


def splice_replace(text: str, unit: FunctionUnit, replacement: str) -> str:
    """Swap one function's definition for new source text (same language)."""
    start, end = unit.byte_range
    if text[start:end] != unit.body:
        raise UsageError(
            f"cannot replace {unit.name}: file changed since decomposition"
        )
    return text[:start] + replacement + text[end:]


_INNER_ATTR = re.compile(r"^\s*#!\[[^\]]*\]\s*$", re.MULTILINE)


def combine_rust(translations: Mapping[str, str]) -> str:
    """One crate from many per-function translations.

    Each translation is wrapped in its own module so imports and extern
    blocks cannot collide; crate-level inner attributes are stripped because
    they are illegal inside a module.
    """
    parts = ["#![allow(unused)]"]
    for name in sorted(translations):
        body = _INNER_ATTR.sub("", translations[name]).strip()
        parts.append(f"mod sp_{name} {{\n{body}\n}}")
    return "\n\n".join(parts) + "\n"


def mixed_build(
    manifest: ProjectManifest,
    tree: Path,
    swapped: Mapping[str, Sequence[FunctionUnit]],  # source rel-path -> units out
    translations: Mapping[str, str],  # function name -> rust source
    timeout: float = 180.0,
) -> Path:
    """Build the project with some functions living in Rust.

    tree must be a disposable copy of the project; sources are rewritten in
    place there.  Returns the linked binary's path; raises CompileFailed
    with the offending compiler's log.
    """
    if not translations:
        raise UsageError("mixed build needs at least one translation")
    tree = Path(tree)

    for rel, units in swapped.items():
        path = tree / rel
        text = path.read_text(encoding="utf-8")
        path.write_text(splice_functions(text, units), encoding="utf-8")

    crate = tree / "__sp_translations.rs"
    crate.write_text(combine_rust(translations), encoding="utf-8")
    lib = tree / "libsp_translations.a"
    code, out, err = run_command(
        [*RUSTC, str(crate), "-o", str(lib)], cwd=tree, timeout=timeout
    )
    if code != 0:
        raise CompileFailed(
            (out + b"\n" + err).decode("utf-8", errors="replace").strip()
        )

    objects: list[str] = []
    for rel in manifest.entry_sources:
        obj = str((tree / rel).with_suffix(".o"))
        code, out, err = run_command(
            [manifest.cc, *manifest.cflags, "-c", str(tree / rel), "-o", obj],
            cwd=tree,
            timeout=timeout,
        )
        if code != 0:
            raise CompileFailed(
                (out + b"\n" + err).decode("utf-8", errors="replace").strip()
            )
        objects.append(obj)

    binary = tree / (manifest.binary + "_mixed")
    code, out, err = run_command(
        [
            manifest.cc, *objects, str(lib),
            *LINK_LIBS, *manifest.ldflags, "-o", str(binary),
        ],
        cwd=tree,
        timeout=timeout,
    )
    if code != 0:
        raise CompileFailed(
            (out + b"\n" + err).decode("utf-8", errors="replace").strip()
        )
    return binary


def copy_tree(source: Path, dest: Path) -> Path:
    dest = Path(dest)
    if dest.exists():
        raise UsageError(f"copy destination already exists: {dest}")
    shutil.copytree(source, dest)
    return dest


def tree_digest(root: Path, names: Sequence[str]) -> str:
    """Content hash over the named files; guards restoration invariants."""
    import hashlib

    h = hashlib.sha256()
    for rel in sorted(names):
        h.update(rel.encode("utf-8"))
        h.update(b"\x00")
        h.update((Path(root) / rel).read_bytes())
        h.update(b"\x01")
    return h.hexdigest()
