import concurrent.futures

import pytest

from helpers import C_DOUBLE, C_TRIPLE, DOUBLE_TESTS, JS_DOUBLE, RUST_DOUBLE
from spectra.errors import CompileFailed, ToolchainMissing, UsageError
from spectra.model import FailureKind, Language, TestCase
from spectra.sandbox import (
    RunLimits,
    Sandbox,
    Toolchain,
    Verdict,
    normalize,
)

C_EXIT_THREE = """\
#include <stdio.h>
int main(void) {
    printf("8\\n");
    return 3;
}
"""

C_HANG = """\
int main(void) {
    for (;;) {}
    return 0;
}
"""

C_SPEW = """\
#include <stdio.h>
int main(void) {
    for (long i = 0; i < 3000000; i++)
        printf("xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx\\n");
    return 0;
}
"""


# -- normalization --------------------------------------------------------


def test_normalize_forgives_trailing_slop():
    assert normalize(b"8") == b"8\n"
    assert normalize(b"8 \n") == b"8\n"
    assert normalize(b"8\n\n\n") == b"8\n"
    assert normalize(b"a\t \nb  \n") == b"a\nb\n"


def test_normalize_preserves_content():
    assert normalize(b"a\n\nb\n") == b"a\n\nb\n"  # interior blank line kept
    assert normalize(b"  a\n") == b"  a\n"  # leading whitespace kept
    assert normalize(b"8") != normalize(b"9")


def test_run_limits_validation():
    with pytest.raises(UsageError):
        RunLimits(wall_timeout=0)
    with pytest.raises(UsageError):
        RunLimits(max_output_bytes=0)


# -- building and running -------------------------------------------------


def test_c_program_passes_its_suite(sandbox, require_c):
    outcome = sandbox.evaluate(C_DOUBLE, Language.C, DOUBLE_TESTS)
    assert outcome.passed
    assert outcome.failure is FailureKind.NONE
    assert all(r.verdict is Verdict.PASS for r in outcome.runs)
    assert all(r.exit_code == 0 for r in outcome.runs)


def test_wrong_program_fails_with_wrong_output(sandbox, require_c):
    outcome = sandbox.evaluate(C_TRIPLE, Language.C, DOUBLE_TESTS)
    assert not outcome.passed
    assert outcome.failure is FailureKind.WRONG_OUTPUT
    # the zero-input case still matches (0*2 == 0*3)
    verdicts = {r.test_id: r.verdict for r in outcome.runs}
    assert verdicts["t2"] is Verdict.PASS
    assert verdicts["t1"] is Verdict.WRONG_OUTPUT


def test_compile_failure_reports_log(sandbox, require_c):
    outcome = sandbox.evaluate("int main(void) { syntax error", Language.C, DOUBLE_TESTS)
    assert not outcome.compile_ok
    assert not outcome.passed
    assert outcome.failure is FailureKind.COMPILE
    assert outcome.runs == ()
    assert "error" in outcome.compile_log.lower()


def test_nonzero_exit_with_matching_stdout_is_runtime_error(sandbox, require_c):
    # exiting with an error code loses even when the bytes look right
    tests = (TestCase("t", b"", b"8\n"),)
    outcome = sandbox.evaluate(C_EXIT_THREE, Language.C, tests)
    assert not outcome.passed
    assert outcome.failure is FailureKind.RUNTIME
    record = outcome.runs[0]
    assert record.exit_code == 3
    assert normalize(record.stdout) == b"8\n"


def test_timeout_kills_and_reports(require_c):
    quick = Sandbox(limits=RunLimits(wall_timeout=1.0))
    outcome = quick.evaluate(C_HANG, Language.C, (TestCase("t", b"", b"x\n"),))
    assert outcome.failure is FailureKind.TIMEOUT
    record = outcome.runs[0]
    assert record.verdict is Verdict.TIMEOUT
    assert record.exit_code is None
    assert record.duration >= 1.0


def test_output_cap_truncates_spew(require_c):
    capped = Sandbox(limits=RunLimits(max_output_bytes=4096))
    outcome = capped.evaluate(C_SPEW, Language.C, (TestCase("t", b"", b"x\n"),))
    record = outcome.runs[0]
    assert record.stdout_truncated
    assert len(record.stdout) <= 4096
    assert record.verdict is Verdict.WRONG_OUTPUT


def test_bit_exact_mode_disables_normalization(require_c):
    strict = Sandbox(bit_exact=True)
    missing_newline = (TestCase("t", b"4\n", b"8"),)
    outcome = strict.evaluate(C_DOUBLE, Language.C, missing_newline)
    assert not outcome.passed  # prints "8\n", expected exactly "8"
    loose = Sandbox()
    assert loose.evaluate(C_DOUBLE, Language.C, missing_newline).passed


def test_evaluate_requires_tests(sandbox):
    with pytest.raises(UsageError):
        sandbox.evaluate(C_DOUBLE, Language.C, ())


def test_build_rejects_empty_source(sandbox, require_c):
    with pytest.raises(CompileFailed):
        sandbox.build("   ", Language.C)


def test_rust_round_trip(sandbox, require_rust):
    outcome = sandbox.evaluate(RUST_DOUBLE, Language.RUST, DOUBLE_TESTS)
    assert outcome.passed


def test_javascript_runs_without_compile(sandbox, require_node):
    outcome = sandbox.evaluate(JS_DOUBLE, Language.JAVASCRIPT, DOUBLE_TESTS)
    assert outcome.passed


def test_typescript_compiles_then_runs(sandbox, require_ts):
    ts = (
        "const text: string = require('fs').readFileSync(0, 'utf8').trim();\n"
        "console.log(parseInt(text, 10) * 2);\n"
    )
    outcome = sandbox.evaluate(ts, Language.TYPESCRIPT, DOUBLE_TESTS)
    assert outcome.passed
    bad = "const n: number = \"not a number\";\n"
    broken = sandbox.evaluate(bad, Language.TYPESCRIPT, DOUBLE_TESTS)
    assert broken.failure is FailureKind.COMPILE


def test_missing_toolchain_yields_hint():
    fake = Toolchain(
        language=Language.C,
        source_name="main.c",
        compile_argv=("no-such-compiler-zz", "{src}"),
        run_argv=("{out}",),
        probe_argv=("no-such-compiler-zz", "--version"),
        hint="install the thing",
    )
    box = Sandbox(toolchains={Language.C: fake})
    assert box.probe(Language.C) is False
    with pytest.raises(ToolchainMissing) as exc_info:
        box.require(Language.C)
    assert exc_info.value.hint == "install the thing"
    with pytest.raises(ToolchainMissing):
        box.build(C_DOUBLE, Language.C)


def test_concurrent_evaluation_matches_serial(sandbox, require_c):
    sources = [C_DOUBLE, C_TRIPLE, C_EXIT_THREE, C_DOUBLE] * 2
    tests = (TestCase("t", b"4\n", b"8\n"),)
    serial = [sandbox.evaluate(s, Language.C, tests).failure for s in sources]
    with concurrent.futures.ThreadPoolExecutor(max_workers=8) as pool:
        futures = [pool.submit(sandbox.evaluate, s, Language.C, tests) for s in sources]
        parallel = [f.result().failure for f in futures]
    assert parallel == serial
    assert serial == [
        FailureKind.NONE,
        FailureKind.WRONG_OUTPUT,
        FailureKind.RUNTIME,
        FailureKind.NONE,
    ] * 2


def test_scratch_dirs_cleaned_up(tmp_path, require_c):
    box = Sandbox(scratch_root=tmp_path / "scratch")
    box.evaluate(C_DOUBLE, Language.C, (TestCase("t", b"4\n", b"8\n"),))
    leftovers = list((tmp_path / "scratch").iterdir())
    assert leftovers == []


def test_keep_scratch_retains_workdir(tmp_path, require_c):
    box = Sandbox(scratch_root=tmp_path / "scratch", keep_scratch=True)
    box.evaluate(C_DOUBLE, Language.C, (TestCase("t", b"4\n", b"8\n"),))
    assert list((tmp_path / "scratch").iterdir())
