"""Turning model responses back into structured values.

extract_code_block follows one rule: the last fenced block wins, preferring
blocks whose fence tag names the expected language, and a fenceless response
is taken whole.  Spec parsing is heading-driven and deliberately tolerant of
markdown bold/bullets around headings, because models decorate; it is strict
about substance (a static spec must name real functions, an io spec must
yield at least one pair).

Inline `Input: x` values are treated as one line of stdin and therefore gain
a trailing newline; block-form inputs are taken verbatim.  Programs that read
lines never see an unterminated final line this way, matching how judge-style
test data is stored.
"""
from __future__ import annotations

import re

from ..errors import ExtractionFailed, SpecParseFailed
from ..model import (
    DescSource,
    DescSpec,
    FunctionContract,
    IoPair,
    IoSpec,
    Language,
    Modality,
    PairOrigin,
    Provenance,
    SourceProgram,
    SpecStatus,
    Specification,
    StaticSpec,
)
from .base import ChatRequest, ModelResponse

_FENCE = re.compile(r"```([A-Za-z0-9+#._-]*)[ \t]*\n(.*?)```", re.DOTALL)

_LANG_TAGS = {
    Language.C: {"c"},
    Language.RUST: {"rust", "rs"},
    Language.GO: {"go", "golang"},
    Language.JAVASCRIPT: {"javascript", "js", "node"},
    Language.TYPESCRIPT: {"typescript", "ts"},
}


def extract_code_block(text: str, language: Language) -> str:
    """Pull the code to compile out of a model response.

    Preference order: last fenced block tagged with the language, then last
    fenced block of any tag, then the whole response stripped.  Raises
    ExtractionFailed when the winning choice is empty.
    """
    blocks = [(m.group(1).strip().lower(), m.group(2)) for m in _FENCE.finditer(text)]
    tags = _LANG_TAGS[language]
    tagged = [body for tag, body in blocks if tag in tags]
    if tagged:
        code = tagged[-1]
    elif blocks:
        code = blocks[-1][1]
    else:
        code = text
    code = code.strip("\n").rstrip()
    if not code.strip():
        raise ExtractionFailed(
            f"no {language.value} code found in response ({len(text)} chars)"
        )
    return code


# Headings may arrive as "Input Format:", "**Input Format:**", "- Input
# format :" and so on; strip decoration before matching.
_DECOR = re.compile(r"^[\s>*#`~-]+|[\s*`~]+$")


def _undecorate(line: str) -> str:
    return _DECOR.sub("", line)


_HEADINGS = {
    "input format": "input_format",
    "output format": "output_format",
    "function": "function",
    "precondition": "precondition",
    "postcondition": "postcondition",
}


# Bold may close on either side of the colon ("**Input:** x"), so decoration
# is also allowed between the heading word and the colon, and stripped from
# the front of the inline value.
_INNER_DECOR = re.compile(r"^[\s*`~]+")


def _match_heading(line: str) -> tuple[str, str] | None:
    """Return (kind, remainder-after-colon) when the line opens a section."""
    plain = _undecorate(line)
    m = re.match(r"(?i)([a-z ]+?)[\s*`~]*:\s*(.*)$", plain)
    if not m:
        return None
    kind = m.group(1).strip().lower()
    if kind in _HEADINGS:
        return _HEADINGS[kind], _INNER_DECOR.sub("", m.group(2)).strip()
    return None


def parse_static_spec(text: str, program: SourceProgram) -> StaticSpec:
    """Heading-driven static spec parser.

    Sections may span lines; a section ends where the next heading begins.
    Function sections must name functions the program actually defines.  A
    response with no Function sections is accepted only for single-function
    programs, attaching the contract to that function.
    """
    sections: list[tuple[str, str, list[str]]] = []  # (kind, head, lines)
    for raw in text.splitlines():
        matched = _match_heading(raw)
        if matched:
            kind, rest = matched
            sections.append((kind, rest, []))
        elif sections:
            sections[-1][2].append(raw)
        # prose before the first heading is ignored

    def body(head: str, lines: list[str]) -> str:
        joined = "\n".join([head] + lines) if head else "\n".join(lines)
        return joined.strip()

    input_format = output_format = None
    contracts: list[tuple[str, FunctionContract]] = []
    current_fn: str | None = None
    pre: str | None = None
    post: str | None = None
    defined = {fn.name for fn in program.functions}

    def flush_fn() -> None:
        nonlocal current_fn, pre, post
        if current_fn is None:
            return
        if pre is None or post is None:
            raise SpecParseFailed(
                f"function {current_fn}: missing "
                + ("precondition" if pre is None else "postcondition")
            )
        contracts.append((current_fn, FunctionContract(pre, post)))
        current_fn, pre, post = None, None, None

    floating: list[tuple[str, str]] = []  # pre/post outside a Function section
    for kind, head, lines in sections:
        content = body(head, lines)
        if kind == "input_format":
            input_format = content
        elif kind == "output_format":
            output_format = content
        elif kind == "function":
            flush_fn()
            name = re.sub(r"[`'\"()]+", "", head).strip()
            if name not in defined:
                raise SpecParseFailed(f"spec names unknown function {name!r}")
            current_fn = name
        elif kind == "precondition":
            if current_fn is None:
                floating.append(("pre", content))
            else:
                pre = content
        elif kind == "postcondition":
            if current_fn is None:
                floating.append(("post", content))
            else:
                post = content
    flush_fn()

    if not contracts and floating:
        # headingless single-function form (pre/post with no Function line)
        if len(program.functions) != 1:
            raise SpecParseFailed(
                "contracts lack Function headings but program defines "
                f"{len(program.functions)} functions"
            )
        pres = [c for k, c in floating if k == "pre"]
        posts = [c for k, c in floating if k == "post"]
        if not pres or not posts:
            raise SpecParseFailed("single-function spec missing pre or postcondition")
        contracts.append(
            (program.functions[0].name, FunctionContract(pres[0], posts[0]))
        )

    if input_format is None or output_format is None:
        raise SpecParseFailed("static spec must give Input Format and Output Format")
    if not contracts:
        raise SpecParseFailed("static spec carries no function contracts")
    return StaticSpec(
        input_format=input_format,
        output_format=output_format,
        contracts=tuple(contracts),
    )


def parse_fn_contract(text: str, function_name: str) -> FunctionContract:
    """Parse a single-function contract (Function:/Precondition:/Postcondition:).

    The Function heading is optional; when present it must name
    function_name.  Both condition sections are required.
    """
    sections: list[tuple[str, str, list[str]]] = []
    for raw in text.splitlines():
        matched = _match_heading(raw)
        if matched:
            kind, rest = matched
            sections.append((kind, rest, []))
        elif sections:
            sections[-1][2].append(raw)

    pre: str | None = None
    post: str | None = None
    for kind, head, lines in sections:
        content = "\n".join([head] + lines).strip() if head else "\n".join(lines).strip()
        if kind == "function":
            name = re.sub(r"[`'\"()]+", "", head).strip()
            if name != function_name:
                raise SpecParseFailed(
                    f"contract names {name!r}, expected {function_name!r}"
                )
        elif kind == "precondition" and pre is None:
            pre = content
        elif kind == "postcondition" and post is None:
            post = content
    if not pre or not post:
        raise SpecParseFailed(
            f"contract for {function_name} missing "
            + ("precondition" if not pre else "postcondition")
        )
    return FunctionContract(precondition=pre, postcondition=post)


def parse_io_pairs(text: str) -> IoSpec:
    """Parse Input:/Output: example pairs.

    Inline values sit on the heading line; block values occupy the following
    lines until the next heading.  Inputs are stdin and stdin lines are
    newline-terminated, so a missing trailing newline is added; outputs are
    compared through the normalizing comparator later and kept as written.
    """
    entries: list[tuple[str, str]] = []  # (kind, accumulated value)
    in_block = False
    for raw in text.splitlines():
        plain = _undecorate(raw)
        m = re.match(r"(?i)(input|output)[\s*`~]*:\s*(.*)$", plain)
        if m:
            kind, rest = m.group(1).lower(), _INNER_DECOR.sub("", m.group(2))
            entries.append((kind, rest))
            in_block = not rest.strip()
        elif in_block and entries:
            kind, val = entries[-1]
            entries[-1] = (kind, val + "\n" + raw if val else raw)

    pairs: list[IoPair] = []
    i = 0
    while i + 1 < len(entries):
        (kind_a, val_a), (kind_b, val_b) = entries[i], entries[i + 1]
        if kind_a == "input" and kind_b == "output":
            stdin = val_a if val_a.endswith("\n") else val_a + "\n"
            pairs.append(
                IoPair(
                    stdin=stdin.encode("utf-8"),
                    stdout=val_b.strip("\n").encode("utf-8"),
                    origin=PairOrigin.MODEL,
                )
            )
            i += 2
        else:
            i += 1
    if not pairs:
        raise SpecParseFailed("no Input/Output pairs found in response")
    return IoSpec(pairs=tuple(pairs))


def parse_desc(text: str) -> DescSpec:
    stripped = text.strip()
    if not stripped:
        raise SpecParseFailed("empty description")
    return DescSpec(text=stripped, source=DescSource.MODEL)


def extract_spec(
    request: ChatRequest,
    response: ModelResponse,
    modality: Modality,
    program: SourceProgram,
    candidate_index: int = 1,
) -> Specification:
    """Parse a spec-generation response into a Candidate specification.

    Provenance records the sampling temperature, provider and prompt digest
    so any stored spec can be traced back to the request that produced it.
    """
    if modality is Modality.STATIC:
        payload = parse_static_spec(response.text, program)
    elif modality is Modality.IO:
        payload = parse_io_pairs(response.text)
    else:
        payload = parse_desc(response.text)
    return Specification(
        modality=modality,
        payload=payload,
        status=SpecStatus.CANDIDATE,
        candidate_index=candidate_index,
        provenance=Provenance(
            temperature=request.temperature,
            provider_id=response.provider_id,
            prompt_digest=response.prompt_digest,
        ),
    )
