"""Parsing trace files into per-function io specs.

A trace line is `v1|fn|idx|a=1;s=hi|ret=3` (see instrument.py for the
writer).  Two things happen at parse time beyond field splitting:

  * %XX escapes in values are decoded;
  * raw pointer addresses are canonicalized to ptr#N tokens in first-seen
    order per trace file, and every pair touching one is flagged
    non-comparable.  Addresses differ run to run, so they can anchor
    identity ("same pointer as arg 1") but never equality across runs.

Pairs are deduplicated per test, then sampled round-robin across tests up
to the cap, so one busy e2e test cannot crowd the others out of a
function's examples.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from ..errors import SpectraError
from ..model import IoPair, IoSpec, PairOrigin
from .instrument import TRACE_SCHEMA

TRACE_CAP = 20  # max pairs kept per function


class TraceParseError(SpectraError):
    pass


@dataclass(frozen=True)
class IoTracePair:
    """One observed call: rendered arguments in, rendered return out."""

    function: str
    call_index: int
    args: tuple[tuple[str, str], ...]  # (name, rendered value)
    ret: str
    non_comparable: bool = False  # pointer addresses appear in args or ret

    def args_text(self) -> str:
        return ";".join(f"{name}={value}" for name, value in self.args)


_ESCAPE = re.compile(r"%([0-9A-Fa-f]{2})")
_ADDRESS = re.compile(r"\b0x[0-9a-fA-F]+\b")


def _unescape(value: str) -> str:
    return _ESCAPE.sub(lambda m: chr(int(m.group(1), 16)), value)


class _PointerNames:
    """Stable ptr#N tokens for addresses, first-seen order per trace file."""

    def __init__(self) -> None:
        self._names: dict[str, str] = {}

    def canonicalize(self, value: str) -> tuple[str, bool]:
        found = False

        def swap(m: re.Match) -> str:
            nonlocal found
            found = True
            addr = m.group(0)
            if addr not in self._names:
                self._names[addr] = f"ptr#{len(self._names) + 1}"
            return self._names[addr]

        return _ADDRESS.sub(swap, value), found


def parse_trace_file(path: Path) -> list[IoTracePair]:
    """All pairs from one trace file, in emission order."""
    pointers = _PointerNames()
    pairs: list[IoTracePair] = []
    text = Path(path).read_text(encoding="utf-8", errors="replace")
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        cells = line.split("|")
        if len(cells) != 5 or cells[0] != TRACE_SCHEMA:
            raise TraceParseError(f"{path}:{line_no}: malformed trace line")
        _, fn, idx_text, args_cell, ret_cell = cells
        if not ret_cell.startswith("ret="):
            raise TraceParseError(f"{path}:{line_no}: missing ret cell")
        try:
            idx = int(idx_text)
        except ValueError as exc:
            raise TraceParseError(f"{path}:{line_no}: bad call index") from exc
        non_comparable = False
        args: list[tuple[str, str]] = []
        if args_cell:
            for item in args_cell.split(";"):
                name, _, raw = item.partition("=")
                value, has_ptr = pointers.canonicalize(_unescape(raw))
                non_comparable = non_comparable or has_ptr
                args.append((name, value))
        ret, has_ptr = pointers.canonicalize(_unescape(ret_cell[len("ret="):]))
        non_comparable = non_comparable or has_ptr
        pairs.append(
            IoTracePair(
                function=fn,
                call_index=idx,
                args=tuple(args),
                ret=ret,
                non_comparable=non_comparable,
            )
        )
    return pairs


def _dedupe(pairs: Iterable[IoTracePair]) -> list[IoTracePair]:
    seen: set[tuple] = set()
    kept = []
    for p in pairs:
        key = (p.function, p.args, p.ret)
        if key in seen:
            continue
        seen.add(key)
        kept.append(p)
    return kept


def sample_pairs(
    per_test: Mapping[str, list[IoTracePair]], cap: int = TRACE_CAP
) -> dict[str, list[IoTracePair]]:
    """Merge per-test traces into per-function samples, capped.

    Round-robin across tests in name order: take each test's first new pair,
    then each test's second, until the cap fills.  Duplicates (same args and
    return) are dropped globally before sampling.
    """
    if cap < 1:
        raise TraceParseError("cap must be >= 1")
    by_fn_test: dict[str, dict[str, list[IoTracePair]]] = {}
    for test_id in sorted(per_test):
        for pair in _dedupe(per_test[test_id]):
            by_fn_test.setdefault(pair.function, {}).setdefault(test_id, []).append(pair)

    sampled: dict[str, list[IoTracePair]] = {}
    for fn, tests in by_fn_test.items():
        chosen: list[IoTracePair] = []
        seen: set[tuple] = set()
        queues = [list(tests[t]) for t in sorted(tests)]
        while queues and len(chosen) < cap:
            next_round = []
            for queue in queues:
                while queue:
                    pair = queue.pop(0)
                    key = (pair.args, pair.ret)
                    if key in seen:
                        continue
                    seen.add(key)
                    chosen.append(pair)
                    break
                if queue:
                    next_round.append(queue)
                if len(chosen) >= cap:
                    break
            queues = next_round
        sampled[fn] = chosen
    return sampled


def pairs_to_iospec(pairs: Iterable[IoTracePair]) -> IoSpec:
    """Traced call pairs as an io spec: args text in, return text out."""
    io_pairs = tuple(
        IoPair(
            stdin=(p.args_text() + "\n").encode("utf-8"),
            stdout=p.ret.encode("utf-8"),
            origin=PairOrigin.TRACED,
        )
        for p in pairs
    )
    return IoSpec(pairs=io_pairs)
