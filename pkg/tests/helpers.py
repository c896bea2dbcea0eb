"""Shared builders for the test suite.

Programs here are real: C sources compile with the local gcc and the
JavaScript one runs under node.  Tests that need a model answer script it
through ScriptedProvider (order-based) or ReplayProvider (digest-based);
record_response pre-seeds a replay directory for a request that has not
been made yet.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from spectra.corpus import program_from_source
from spectra.model import (
    DescSpec,
    FailureKind,
    FunctionContract,
    IoPair,
    IoSpec,
    Language,
    Modality,
    Provenance,
    SourceProgram,
    SpecStatus,
    Specification,
    StaticSpec,
    TestCase,
)
from spectra.provider.base import ChatRequest
from spectra.provider.replay import ReplayProvider

PROVENANCE = Provenance(temperature=0.0, provider_id="test", prompt_digest="d0")

# Reads one int from stdin, prints its double.  Rejects garbage input with a
# nonzero exit and aborts on negatives, giving io-validation tests a way to
# provoke runtime failures on demand.
C_DOUBLE = """\
#include <stdio.h>
#include <stdlib.h>

int main(void) {
    int n;
    if (scanf("%d", &n) != 1)
        return 1;
    if (n < 0)
        abort();
    printf("%d\\n", n * 2);
    return 0;
}
"""

# Same interface, wrong arithmetic: prints n * 3.
C_TRIPLE = C_DOUBLE.replace("n * 2", "n * 3")

RUST_DOUBLE = """\
use std::io::Read;

fn main() {
    let mut text = String::new();
    std::io::stdin().read_to_string(&mut text).unwrap();
    let n: i64 = text.trim().parse().unwrap();
    println!("{}", n * 2);
}
"""

JS_DOUBLE = """\
const text = require("fs").readFileSync(0, "utf8").trim();
console.log(parseInt(text, 10) * 2);
"""

DOUBLE_TESTS = (
    TestCase("t1", b"4\n", b"8\n"),
    TestCase("t2", b"0\n", b"0\n"),
    TestCase("t3", b"21\n", b"42\n"),
)


def c_program(
    program_id: str = "double",
    source: str = C_DOUBLE,
    tests: tuple[TestCase, ...] = DOUBLE_TESTS,
) -> SourceProgram:
    return program_from_source(program_id, Language.C, source, tests)


def js_program(
    program_id: str = "double-js",
    source: str = JS_DOUBLE,
    tests: tuple[TestCase, ...] = DOUBLE_TESTS,
) -> SourceProgram:
    return program_from_source(program_id, Language.JAVASCRIPT, source, tests)


def static_spec(
    program: SourceProgram | None = None,
    input_format: str = "one integer n on stdin",
    output_format: str = "one integer on its own line",
) -> StaticSpec:
    names = [f.name for f in program.functions] if program else ["main"]
    contract = FunctionContract(
        precondition="stdin holds a single parseable integer",
        postcondition="prints 2*n followed by a newline",
    )
    return StaticSpec(
        input_format=input_format,
        output_format=output_format,
        contracts=tuple((n, contract) for n in names),
    )


def io_spec(*pairs: tuple[bytes, bytes]) -> IoSpec:
    chosen = pairs or ((b"4\n", b"8\n"),)
    return IoSpec(pairs=tuple(IoPair(stdin=i, stdout=o) for i, o in chosen))


def desc_spec(text: str = "Reads an integer and prints its double.") -> DescSpec:
    return DescSpec(text=text)


def spec_of(
    modality: Modality,
    payload=None,
    status: SpecStatus = SpecStatus.SELF_CONSISTENT,
    candidate_index: int = 1,
) -> Specification:
    if payload is None:
        payload = {
            Modality.STATIC: static_spec,
            Modality.IO: io_spec,
            Modality.DESC: desc_spec,
        }[modality]()
    return Specification(
        modality=modality,
        payload=payload,
        status=status,
        candidate_index=candidate_index,
        provenance=PROVENANCE,
    )


def fenced(language: str, body: str) -> str:
    return f"```{language}\n{body}\n```"


def record_response(directory: Path, request: ChatRequest, text: str) -> Path:
    """Pre-seed a replay fixture for a request about to be made."""
    directory.mkdir(parents=True, exist_ok=True)
    return ReplayProvider(directory).record(request, text)


@dataclass
class FakeOutcome:
    """Duck-typed stand-in for sandbox.ExecOutcome in pipeline unit tests."""

    passed: bool
    failure: FailureKind = FailureKind.NONE
    compile_log: str = ""


class StubSandbox:
    """Judges candidates by a caller-supplied function of the source text."""

    def __init__(self, judge):
        self.judge = judge
        self.calls: list[tuple[str, Language]] = []

    def evaluate(self, source: str, language: Language, tests) -> FakeOutcome:
        self.calls.append((source, language))
        return self.judge(source)


def always_pass(_source: str) -> FakeOutcome:
    return FakeOutcome(passed=True)


def always_wrong(_source: str) -> FakeOutcome:
    return FakeOutcome(passed=False, failure=FailureKind.WRONG_OUTPUT)


# -- minicat fixture scripting ------------------------------------------

# Hand-checked Rust ports of the minicat helpers; they link against the
# remaining C (or each other) through the same symbols the C code exports.
MINICAT_RUST = {
    "line_width": """\
use core::ffi::c_char;

#[no_mangle]
pub extern "C" fn line_width(s: *const c_char) -> i32 {
    let mut n = 0usize;
    unsafe {
        while *s.add(n) != 0 && *s.add(n) != b'\\n' as c_char {
            n += 1;
        }
    }
    n as i32
}""",
    "is_blank": """\
extern "C" {
    fn line_width(s: *const core::ffi::c_char) -> i32;
}

#[no_mangle]
pub extern "C" fn is_blank(s: *const core::ffi::c_char) -> i32 {
    unsafe {
        let w = line_width(s);
        for i in 0..w {
            let c = *s.add(i as usize) as u8;
            if c != b' ' && c != b'\\t' {
                return 0;
            }
        }
    }
    1
}""",
    "emit_line": """\
extern "C" {
    fn line_width(s: *const core::ffi::c_char) -> i32;
    fn putchar(c: i32) -> i32;
}

#[no_mangle]
pub extern "C" fn emit_line(s: *const core::ffi::c_char, number: i32, lineno: i32) -> i32 {
    unsafe {
        let w = line_width(s);
        if number != 0 {
            let text = lineno.to_string();
            for _ in text.len()..6 {
                putchar(b' ' as i32);
            }
            for b in text.bytes() {
                putchar(b as i32);
            }
            putchar(b'\\t' as i32);
        }
        for i in 0..w {
            putchar(*s.add(i as usize) as u8 as i32);
        }
        putchar(b'\\n' as i32);
    }
    lineno + 1
}""",
}

MINICAT_ORDER = ("line_width", "is_blank", "emit_line")


def fn_contract_text(name: str, pre: str = "p", post: str = "q") -> str:
    return f"Function: {name}\nPrecondition: {pre}\nPostcondition: {post}\n"


def minicat_responses(fixtures_dir: Path) -> list[str]:
    """Scripted answers that drive minicat to a full 3-function migration.

    Per function: a contract, then a C regeneration (the original body
    verbatim, which trivially keeps the test suite green), then after all
    spec work one Rust translation each, in leaves-first order.
    """
    from spectra.csource import analyze

    source = (fixtures_dir / "minicat" / "src" / "main.c").read_text(
        encoding="utf-8"
    )
    units = {u.name: u for u in analyze(source)}
    responses = []
    for name in MINICAT_ORDER:
        responses.append(fn_contract_text(name))
        responses.append(fenced("c", units[name].body))
    for name in MINICAT_ORDER:
        responses.append(fenced("rust", MINICAT_RUST[name]))
    return responses
