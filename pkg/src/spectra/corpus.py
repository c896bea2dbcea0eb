"""Problem-directory corpus loading.

A corpus is a directory of problems; each problem is a directory holding
exactly one source file named main.<ext> and a tests/ subdirectory of
stdin/expected-stdout pairs:

    corpus/
      p042/
        main.c
        tests/
          1.in
          1.out
          2.in
          2.out

The problem id is the directory name.  Test ids are the file stems, ordered
numerically when every stem is a number and lexically otherwise.  C sources
are decomposed into function units so contracts can attach per function;
other languages are carried as a single whole-program unit.
"""
from __future__ import annotations

from pathlib import Path

from .csource import analyze
from .errors import UsageError
from .model import FunctionUnit, Language, SourceProgram, TestCase

_EXTENSIONS = {
    ".c": Language.C,
    ".js": Language.JAVASCRIPT,
    ".rs": Language.RUST,
    ".go": Language.GO,
    ".ts": Language.TYPESCRIPT,
}


def _whole_program_unit(program_id: str, source: str) -> FunctionUnit:
    return FunctionUnit(
        name=program_id,
        signature="",
        body=source,
        byte_range=(0, len(source)),
    )


def program_from_source(
    program_id: str,
    language: Language,
    source: str,
    tests: tuple[TestCase, ...] = (),
) -> SourceProgram:
    """Build a SourceProgram directly from text (fixtures, ad-hoc runs)."""
    if language is Language.C:
        functions = tuple(analyze(source))
        if not functions:
            functions = (_whole_program_unit(program_id, source),)
    else:
        functions = (_whole_program_unit(program_id, source),)
    return SourceProgram(
        program_id=program_id,
        language=language,
        source=source,
        functions=functions,
        tests=tests,
    )


def load_tests(tests_dir: Path) -> tuple[TestCase, ...]:
    """Pair up N.in/N.out files; every .in must have its .out and vice versa."""
    if not tests_dir.is_dir():
        return ()
    ins = {p.stem: p for p in tests_dir.glob("*.in")}
    outs = {p.stem: p for p in tests_dir.glob("*.out")}
    if ins.keys() != outs.keys():
        odd = sorted(ins.keys() ^ outs.keys())
        raise UsageError(f"{tests_dir}: unpaired test files: {odd}")
    stems = sorted(ins)
    if stems and all(s.isdigit() for s in stems):
        stems.sort(key=int)
    return tuple(
        TestCase(
            test_id=stem,
            stdin=ins[stem].read_bytes(),
            expected_stdout=outs[stem].read_bytes(),
        )
        for stem in stems
    )


def load_program(problem_dir: Path) -> SourceProgram:
    problem_dir = Path(problem_dir)
    sources = sorted(
        p for p in problem_dir.glob("main.*") if p.suffix in _EXTENSIONS
    )
    if len(sources) != 1:
        raise UsageError(
            f"{problem_dir}: expected exactly one main.<ext> source, "
            f"found {len(sources)}"
        )
    source_path = sources[0]
    return program_from_source(
        program_id=problem_dir.name,
        language=_EXTENSIONS[source_path.suffix],
        source=source_path.read_text(encoding="utf-8"),
        tests=load_tests(problem_dir / "tests"),
    )


def load_corpus(root: Path) -> list[SourceProgram]:
    """Every problem directory under root, in name order."""
    root = Path(root)
    if not root.is_dir():
        raise UsageError(f"corpus directory not found: {root}")
    programs = []
    for child in sorted(root.iterdir()):
        if child.is_dir() and any(child.glob("main.*")):
            programs.append(load_program(child))
    if not programs:
        raise UsageError(f"no problems found under {root}")
    return programs
