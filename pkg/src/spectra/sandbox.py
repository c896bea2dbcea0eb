"""Compile-and-run harness for candidate programs.

Every candidate builds and runs inside its own scratch directory with a wall
timeout, an address-space cap for native binaries, and an output cap, so a
hostile or broken candidate cannot wedge a corpus run.  Group kill on timeout
takes out grandchildren too.

Verdict semantics are strict: a process that exits nonzero is a runtime
error even if its stdout happens to match, and output comparison runs both
sides through normalize(), which forgives trailing whitespace and trailing
blank lines but nothing else.  Missing toolchains surface as ToolchainMissing
with a remediation hint at probe time, not as a confusing compile error mid
run.

The harness is thread safe; concurrent evaluations share nothing but the
probe cache.
"""
from __future__ import annotations

import os
import shutil
import signal
import subprocess
import tempfile
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import CompileFailed, ToolchainMissing, UsageError
from .model import FailureKind, Language, TestCase


def normalize(raw: bytes) -> bytes:
    """Canonical form for output comparison.

    Decodes permissively, strips trailing whitespace from every line, drops
    trailing blank lines, and re-encodes with exactly one final newline.
    Interior blank lines and all leading whitespace are preserved: this
    forgives formatting slop, not content differences.
    """
    text = raw.decode("utf-8", errors="replace")
    lines = [line.rstrip() for line in text.split("\n")]
    while lines and lines[-1] == "":
        lines.pop()
    return ("\n".join(lines) + "\n").encode("utf-8")


@dataclass(frozen=True)
class RunLimits:
    wall_timeout: float = 10.0  # seconds per test execution
    compile_timeout: float = 60.0  # seconds per build step
    max_output_bytes: int = 1 << 20  # stdout/stderr each capped at 1 MiB
    max_memory_bytes: int = 512 << 20  # RLIMIT_AS for native binaries

    def __post_init__(self) -> None:
        if self.wall_timeout <= 0 or self.compile_timeout <= 0:
            raise UsageError("timeouts must be positive")
        if self.max_output_bytes < 1 or self.max_memory_bytes < 1:
            raise UsageError("limits must be positive")


@dataclass(frozen=True)
class Toolchain:
    """How to build and run one language.

    argv entries may contain the placeholders {src}, {out} and {workdir}.
    An empty compile argv means the language is interpreted.  memory_limited
    is off for VM runtimes (node preallocates address space far beyond any
    sane RLIMIT_AS).
    """

    language: Language
    source_name: str
    compile_argv: tuple[str, ...]
    run_argv: tuple[str, ...]
    probe_argv: tuple[str, ...]
    hint: str
    memory_limited: bool = True


def default_toolchains() -> dict[Language, Toolchain]:
    return {
        Language.C: Toolchain(
            language=Language.C,
            source_name="main.c",
            compile_argv=("gcc", "-O1", "-w", "{src}", "-o", "{out}"),
            run_argv=("{out}",),
            probe_argv=("gcc", "--version"),
            hint="install gcc (apt install gcc)",
        ),
        Language.RUST: Toolchain(
            language=Language.RUST,
            source_name="main.rs",
            compile_argv=(
                "rustc", "--edition", "2021", "-O", "{src}", "-o", "{out}",
            ),
            run_argv=("{out}",),
            probe_argv=("rustc", "--version"),
            hint="install rust (rustup.rs)",
        ),
        Language.GO: Toolchain(
            language=Language.GO,
            source_name="main.go",
            compile_argv=("go", "build", "-o", "{out}", "{src}"),
            run_argv=("{out}",),
            probe_argv=("go", "version"),
            hint="install go (go.dev/dl)",
        ),
        Language.JAVASCRIPT: Toolchain(
            language=Language.JAVASCRIPT,
            source_name="main.js",
            compile_argv=(),
            run_argv=("node", "{src}"),
            probe_argv=("node", "--version"),
            hint="install node (nodejs.org)",
            memory_limited=False,
        ),
        Language.TYPESCRIPT: Toolchain(
            language=Language.TYPESCRIPT,
            source_name="main.ts",
            compile_argv=(
                "tsc", "{src}",
                "--outDir", "{workdir}/tsout",
                "--module", "commonjs",
                "--target", "es2020",
                "--skipLibCheck",
            ),
            run_argv=("node", "{workdir}/tsout/main.js"),
            probe_argv=("tsc", "--version"),
            hint="install typescript (npm install -g typescript)",
            memory_limited=False,
        ),
    }


class Verdict(Enum):
    PASS = "pass"
    WRONG_OUTPUT = "wrong_output"
    RUNTIME_ERROR = "runtime_error"
    TIMEOUT = "timeout"


_VERDICT_TO_FAILURE = {
    Verdict.WRONG_OUTPUT: FailureKind.WRONG_OUTPUT,
    Verdict.RUNTIME_ERROR: FailureKind.RUNTIME,
    Verdict.TIMEOUT: FailureKind.TIMEOUT,
}


@dataclass(frozen=True)
class RunRecord:
    test_id: str
    verdict: Verdict
    exit_code: int | None  # None when the process was killed on timeout
    stdout: bytes
    stderr: bytes
    duration: float
    stdout_truncated: bool = False


@dataclass(frozen=True)
class ExecOutcome:
    """Result of building one candidate and running it over a test suite."""

    compile_ok: bool
    compile_log: str
    runs: tuple[RunRecord, ...] = ()

    @property
    def passed(self) -> bool:
        return self.compile_ok and bool(self.runs) and all(
            r.verdict is Verdict.PASS for r in self.runs
        )

    @property
    def failure(self) -> FailureKind:
        """Dominant failure for stage accounting; NONE when passed."""
        if not self.compile_ok:
            return FailureKind.COMPILE
        for r in self.runs:
            if r.verdict is not Verdict.PASS:
                return _VERDICT_TO_FAILURE[r.verdict]
        return FailureKind.NONE if self.runs else FailureKind.RUNTIME


@dataclass(frozen=True)
class BuildArtifact:
    language: Language
    workdir: Path
    run_argv: tuple[str, ...]
    memory_limited: bool


class _CappedReader(threading.Thread):
    """Drains a pipe, keeping at most cap bytes; never blocks the child."""

    def __init__(self, stream, cap: int):
        super().__init__(daemon=True)
        self._stream = stream
        self._cap = cap
        self.data = b""
        self.truncated = False

    def run(self) -> None:
        try:
            while True:
                chunk = self._stream.read(65536)
                if not chunk:
                    break
                if len(self.data) < self._cap:
                    room = self._cap - len(self.data)
                    if len(chunk) > room:
                        self.data += chunk[:room]
                        self.truncated = True
                    else:
                        self.data += chunk
                else:
                    self.truncated = True
        finally:
            self._stream.close()


def _limit_preexec(max_memory: int | None):
    def apply() -> None:
        if max_memory is not None:
            import resource

            resource.setrlimit(resource.RLIMIT_AS, (max_memory, max_memory))

    return apply


def _run_capped(
    argv: tuple[str, ...],
    stdin: bytes,
    cwd: Path,
    timeout: float,
    output_cap: int,
    max_memory: int | None,
    env: dict[str, str] | None = None,
) -> tuple[int | None, bytes, bytes, float, bool]:
    """Run one process group under the wall clock; returns
    (exit_code, stdout, stderr, duration, stdout_truncated)."""
    started = time.monotonic()
    proc = subprocess.Popen(
        argv,
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        cwd=str(cwd),
        env=env,
        start_new_session=True,  # own process group: timeout kills grandchildren
        preexec_fn=_limit_preexec(max_memory),
    )
    out_reader = _CappedReader(proc.stdout, output_cap)
    err_reader = _CappedReader(proc.stderr, output_cap)
    out_reader.start()
    err_reader.start()
    timed_out = False
    try:
        proc.stdin.write(stdin)
        proc.stdin.close()
    except (BrokenPipeError, OSError):
        pass  # child exited before reading all input; its exit code decides
    try:
        proc.wait(timeout=timeout)
    except subprocess.TimeoutExpired:
        timed_out = True
        try:
            os.killpg(proc.pid, signal.SIGKILL)
        except ProcessLookupError:
            pass
        proc.wait()
    out_reader.join()
    err_reader.join()
    duration = time.monotonic() - started
    exit_code = None if timed_out else proc.returncode
    return exit_code, out_reader.data, err_reader.data, duration, out_reader.truncated


def _substitute(argv: tuple[str, ...], src: Path, out: Path, workdir: Path) -> tuple[str, ...]:
    return tuple(
        a.replace("{src}", str(src))
        .replace("{out}", str(out))
        .replace("{workdir}", str(workdir))
        for a in argv
    )


class Sandbox:
    def __init__(
        self,
        limits: RunLimits | None = None,
        toolchains: dict[Language, Toolchain] | None = None,
        scratch_root: Path | None = None,
        keep_scratch: bool = False,
        bit_exact: bool = False,
    ):
        self.limits = limits or RunLimits()
        self.toolchains = dict(default_toolchains())
        if toolchains:
            self.toolchains.update(toolchains)
        self.scratch_root = Path(scratch_root) if scratch_root else None
        if self.scratch_root:
            self.scratch_root.mkdir(parents=True, exist_ok=True)
        self.keep_scratch = keep_scratch
        self.bit_exact = bit_exact
        self._probe_lock = threading.Lock()
        self._probed: dict[Language, bool] = {}

    # -- environment --------------------------------------------------

    def probe(self, language: Language) -> bool:
        """True when the toolchain answers its version probe; cached."""
        with self._probe_lock:
            if language in self._probed:
                return self._probed[language]
        tc = self._toolchain(language)
        ok = shutil.which(tc.probe_argv[0]) is not None
        if ok:
            try:
                res = subprocess.run(
                    tc.probe_argv,
                    stdout=subprocess.DEVNULL,
                    stderr=subprocess.DEVNULL,
                    timeout=30,
                )
                ok = res.returncode == 0
            except (OSError, subprocess.TimeoutExpired):
                ok = False
        ok = ok and self._extra_probe(tc)
        with self._probe_lock:
            self._probed[language] = ok
        return ok

    def require(self, language: Language) -> Toolchain:
        tc = self._toolchain(language)
        if not self.probe(language):
            raise ToolchainMissing(language.value, " ".join(tc.probe_argv), tc.hint)
        return tc

    def _toolchain(self, language: Language) -> Toolchain:
        try:
            return self.toolchains[language]
        except KeyError:
            raise UsageError(f"no toolchain configured for {language.value}") from None

    def _extra_probe(self, tc: Toolchain) -> bool:
        if tc.language is Language.TYPESCRIPT:
            return self._node_type_roots() is not None
        return True

    _type_roots_cache: Path | None = None
    _type_roots_failed = False

    def _node_type_roots(self) -> Path | None:
        """Locate a @types directory containing node typings; tsc needs them
        to type stdin/stdout code.  Checked once per process."""
        cls = Sandbox
        if cls._type_roots_cache is not None:
            return cls._type_roots_cache
        if cls._type_roots_failed:
            return None
        try:
            res = subprocess.run(
                ["npm", "root", "-g"], capture_output=True, text=True, timeout=30
            )
            root = Path(res.stdout.strip()) / "@types"
            if (root / "node").is_dir():
                cls._type_roots_cache = root
                return root
        except (OSError, subprocess.TimeoutExpired, ValueError):
            pass
        cls._type_roots_failed = True
        return None

    # -- build and run -------------------------------------------------

    def build(self, source: str, language: Language) -> BuildArtifact:
        """Write the candidate into a fresh scratch dir and compile it.

        Raises CompileFailed with the full compiler log on nonzero exit, and
        ToolchainMissing when the compiler is absent.  Interpreted languages
        skip the compile step but still get the scratch dir.
        """
        tc = self.require(language)
        workdir = Path(
            tempfile.mkdtemp(
                prefix=f"spectra-{language.value}-",
                dir=str(self.scratch_root) if self.scratch_root else None,
            )
        )
        src = workdir / tc.source_name
        src.write_text(source, encoding="utf-8")
        out = workdir / "prog"
        compile_argv = _substitute(tc.compile_argv, src, out, workdir)
        if tc.language is Language.TYPESCRIPT:
            roots = self._node_type_roots()
            compile_argv = compile_argv + ("--typeRoots", str(roots), "--types", "node")
        if compile_argv:
            code, out_b, err_b, _, _ = _run_capped(
                compile_argv,
                stdin=b"",
                cwd=workdir,
                timeout=self.limits.compile_timeout,
                output_cap=self.limits.max_output_bytes,
                max_memory=None,  # compilers get unlimited memory
            )
            if code != 0:
                log = (out_b + b"\n" + err_b).decode("utf-8", errors="replace")
                if code is None:
                    log += "\n[compiler timed out]"
                self._cleanup(workdir)
                raise CompileFailed(log.strip())
        return BuildArtifact(
            language=language,
            workdir=workdir,
            run_argv=_substitute(tc.run_argv, src, out, workdir),
            memory_limited=tc.memory_limited,
        )

    def run_one(
        self,
        artifact: BuildArtifact,
        test: TestCase,
        env: dict[str, str] | None = None,
    ) -> RunRecord:
        """Execute one test against a built candidate and judge its output."""
        max_memory = (
            self.limits.max_memory_bytes if artifact.memory_limited else None
        )
        run_env = dict(os.environ)
        if env:
            run_env.update(env)
        exit_code, stdout, stderr, duration, truncated = _run_capped(
            artifact.run_argv,
            stdin=test.stdin,
            cwd=artifact.workdir,
            timeout=self.limits.wall_timeout,
            output_cap=self.limits.max_output_bytes,
            max_memory=max_memory,
            env=run_env,
        )
        if exit_code is None:
            verdict = Verdict.TIMEOUT
        elif exit_code != 0:
            # nonzero exit is a failure even when stdout happens to match
            verdict = Verdict.RUNTIME_ERROR
        elif self._outputs_match(stdout, test.expected_stdout):
            verdict = Verdict.PASS
        else:
            verdict = Verdict.WRONG_OUTPUT
        return RunRecord(
            test_id=test.test_id,
            verdict=verdict,
            exit_code=exit_code,
            stdout=stdout,
            stderr=stderr,
            duration=duration,
            stdout_truncated=truncated,
        )

    def _outputs_match(self, actual: bytes, expected: bytes) -> bool:
        if self.bit_exact:
            return actual == expected
        return normalize(actual) == normalize(expected)

    def evaluate(
        self, source: str, language: Language, tests: tuple[TestCase, ...]
    ) -> ExecOutcome:
        """Build once, run every test, clean up (unless keep_scratch)."""
        if not tests:
            raise UsageError("evaluate needs at least one test")
        try:
            artifact = self.build(source, language)
        except CompileFailed as exc:
            return ExecOutcome(compile_ok=False, compile_log=exc.log)
        try:
            runs = tuple(self.run_one(artifact, t) for t in tests)
        finally:
            self._cleanup(artifact.workdir)
        return ExecOutcome(compile_ok=True, compile_log="", runs=runs)

    def cleanup(self, artifact: BuildArtifact) -> None:
        self._cleanup(artifact.workdir)

    def _cleanup(self, workdir: Path) -> None:
        if not self.keep_scratch:
            shutil.rmtree(workdir, ignore_errors=True)
