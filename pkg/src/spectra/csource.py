"""C source analysis without a compiler: masking, function extraction,
signature parsing, struct layouts.

Everything here works on text.  The trick that keeps it honest is masking:
comments, string/char literals and preprocessor lines are blanked out (same
length, newlines kept) before any structural scanning, so a brace inside a
string or a commented-out function can never confuse the scanner.  Offsets
into masked text are offsets into the original.

This deliberately does not parse C.  It recognizes the shape
`identifier (params) {` at top level, which covers the procedural style of
the programs this pipeline translates.  K&R parameter declarations and
function-pointer-returning definitions are out of scope and are reported,
not mangled.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .errors import SpectraError
from .model import FunctionUnit


class SignatureUnsupported(SpectraError):
    """Signature shape this analyzer refuses to guess about."""


@dataclass(frozen=True)
class Span:
    start: int
    end: int
    kind: str  # comment | string | char | preproc


_KEYWORDS = {
    "if", "else", "for", "while", "do", "switch", "case", "default",
    "return", "sizeof", "goto", "break", "continue", "typedef", "struct",
    "union", "enum", "static", "extern", "inline", "register", "const",
    "volatile", "restrict", "void", "int", "char", "short", "long",
    "float", "double", "signed", "unsigned", "_Bool", "_Alignof",
}


def mask_source(text: str) -> tuple[str, list[Span]]:
    """Blank out comments, literals and preprocessor lines.

    Returns (masked, spans).  masked has identical length and newlines;
    every masked byte becomes a space.  spans record what was masked where,
    in file order; docstring recovery reads comment spans from here.
    """
    out = list(text)
    spans: list[Span] = []
    i = 0
    n = len(text)
    line_start = True  # only whitespace seen since last newline

    def blank(a: int, b: int) -> None:
        for j in range(a, b):
            if out[j] != "\n":
                out[j] = " "

    while i < n:
        c = text[i]
        if line_start and c == "#":
            start = i
            while i < n:
                if text[i] == "\n" and text[i - 1] != "\\":
                    break
                i += 1
            end = min(i + 1, n)
            blank(start, end)
            spans.append(Span(start, end, "preproc"))
            i = end
            continue
        if c == "/" and i + 1 < n and text[i + 1] == "/":
            start = i
            while i < n and text[i] != "\n":
                i += 1
            blank(start, i)
            spans.append(Span(start, i, "comment"))
            continue
        if c == "/" and i + 1 < n and text[i + 1] == "*":
            start = i
            i += 2
            while i + 1 < n and not (text[i] == "*" and text[i + 1] == "/"):
                i += 1
            i = min(i + 2, n)
            blank(start, i)
            spans.append(Span(start, i, "comment"))
            continue
        if c == '"' or c == "'":
            quote = c
            start = i
            i += 1
            while i < n and text[i] != quote:
                i += 2 if text[i] == "\\" else 1
            i = min(i + 1, n)
            blank(start, i)
            spans.append(Span(start, i, "string" if quote == '"' else "char"))
            line_start = False
            continue
        if c == "\n":
            line_start = True
        elif not c.isspace():
            line_start = False
        i += 1
    return "".join(out), spans


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def _match_paren(masked: str, open_pos: int) -> int:
    """Index just past the parenthesis matching masked[open_pos]."""
    depth = 0
    for j in range(open_pos, len(masked)):
        if masked[j] == "(":
            depth += 1
        elif masked[j] == ")":
            depth -= 1
            if depth == 0:
                return j + 1
    raise SignatureUnsupported("unbalanced parentheses")


def _match_brace(masked: str, open_pos: int) -> int:
    depth = 0
    for j in range(open_pos, len(masked)):
        if masked[j] == "{":
            depth += 1
        elif masked[j] == "}":
            depth -= 1
            if depth == 0:
                return j + 1
    raise SignatureUnsupported("unbalanced braces")


def _docstring_above(text: str, spans: list[Span], sig_start: int) -> str | None:
    """Comment block whose end is separated from the signature only by
    whitespace; consecutive // lines merge into one block."""
    comments = [s for s in spans if s.kind == "comment" and s.end <= sig_start]
    if not comments:
        return None
    last = comments[-1]
    if text[last.end:sig_start].strip():
        return None
    block = [last]
    for prev in reversed(comments[:-1]):
        if text[prev.end:block[0].start].strip():
            break
        # only merge stacked line comments; a block comment stands alone
        if not text[prev.start:prev.end].startswith("//"):
            break
        if not text[block[0].start:block[0].end].startswith("//"):
            break
        block.insert(0, prev)
    raw = text[block[0].start:block[-1].end]
    return _strip_comment_markers(raw)


def _strip_comment_markers(raw: str) -> str:
    if raw.startswith("/*"):
        inner = raw[2:-2] if raw.endswith("*/") else raw[2:]
        lines = [re.sub(r"^\s*\*\s?", "", line) for line in inner.splitlines()]
        return "\n".join(lines).strip()
    lines = []
    for line in raw.splitlines():
        lines.append(re.sub(r"^\s*//\s?", "", line))
    return "\n".join(lines).strip()


def extract_functions(text: str) -> list[FunctionUnit]:
    """Find top-level function definitions, in file order.

    Docstrings and byte ranges are attached; callee/external sets are filled
    by attach_call_graph once all units of a program are known.
    """
    masked, spans = mask_source(text)
    units: list[FunctionUnit] = []
    pos = 0
    n = len(masked)
    while pos < n:
        open_paren = masked.find("(", pos)
        if open_paren < 0:
            break
        # identifier immediately left of the paren
        k = open_paren - 1
        while k >= 0 and masked[k].isspace():
            k -= 1
        end_ident = k + 1
        while k >= 0 and (masked[k].isalnum() or masked[k] == "_"):
            k -= 1
        name = masked[k + 1:end_ident]
        if not name or name in _KEYWORDS or not _IDENT.fullmatch(name):
            pos = open_paren + 1
            continue
        try:
            after_params = _match_paren(masked, open_paren)
        except SignatureUnsupported:
            break
        j = after_params
        while j < n and masked[j].isspace():
            j += 1
        if j >= n or masked[j] != "{":
            pos = open_paren + 1
            continue
        # reject calls and control flow: definition signatures start after
        # the previous top-level terminator
        sig_start = k
        while sig_start >= 0 and masked[sig_start] not in ";}{":
            sig_start -= 1
        sig_start += 1
        head = masked[sig_start:open_paren]
        if "(" in head or ")" in head or "=" in head:
            pos = open_paren + 1
            continue
        # trim in masked space so a docstring above (blanked there) is
        # skipped and the signature begins at the first code character
        sig_start += len(masked[sig_start:open_paren]) - len(
            masked[sig_start:open_paren].lstrip()
        )
        try:
            body_end = _match_brace(masked, j)
        except SignatureUnsupported:
            break
        signature = text[sig_start:j].rstrip()
        units.append(
            FunctionUnit(
                name=name,
                signature=signature,
                body=text[sig_start:body_end],
                docstring=_docstring_above(text, spans, sig_start),
                byte_range=(sig_start, body_end),
            )
        )
        pos = body_end
    return units


_CALL = re.compile(r"\b([A-Za-z_][A-Za-z0-9_]*)\s*\(")


def attach_call_graph(units: list[FunctionUnit], masked: str) -> list[FunctionUnit]:
    """Fill callees (defined in this program) and externals (everything else
    called).  Self-recursion is not listed; it adds no dependency edge."""
    from dataclasses import replace

    defined = {u.name for u in units}
    enriched = []
    for unit in units:
        start, end = unit.byte_range
        body_masked = masked[start:end]
        open_brace = body_masked.find("{")
        called = {
            m.group(1)
            for m in _CALL.finditer(body_masked[open_brace:])
            if m.group(1) not in _KEYWORDS
        }
        called.discard(unit.name)
        enriched.append(
            replace(
                unit,
                callees=frozenset(called & defined),
                externals=frozenset(called - defined),
            )
        )
    return enriched


def analyze(text: str) -> list[FunctionUnit]:
    """extract_functions plus call-graph attachment, one call."""
    masked, _ = mask_source(text)
    return attach_call_graph(extract_functions(text), masked)


# -- signatures and types ----------------------------------------------


class CKind(Enum):
    INT_SIGNED = "int_signed"
    INT_UNSIGNED = "int_unsigned"
    FLOAT = "float"
    BOOL = "bool"
    CHAR_PTR = "char_ptr"
    OTHER_PTR = "other_ptr"
    STRUCT_VALUE = "struct_value"
    VOID = "void"
    UNSUPPORTED = "unsupported"


@dataclass(frozen=True)
class CType:
    kind: CKind
    text: str  # normalized type text, qualifiers stripped
    struct_tag: str | None = None
    is_const: bool = False


_SIGNED_INTS = {
    "char", "signed char", "short", "short int", "int", "long", "long int",
    "long long", "long long int", "ssize_t", "ptrdiff_t", "intptr_t",
    "int8_t", "int16_t", "int32_t", "int64_t", "signed", "signed int",
    "signed long", "signed short", "signed long long", "time_t",
}
_UNSIGNED_INTS = {
    "unsigned char", "unsigned short", "unsigned", "unsigned int",
    "unsigned long", "unsigned long long", "unsigned long int",
    "unsigned long long int", "unsigned short int", "size_t", "uintptr_t",
    "uint8_t", "uint16_t", "uint32_t", "uint64_t",
}


def classify_type(type_text: str) -> CType:
    """Map a C type to the coarse kinds rendering and FFI care about."""
    tokens = type_text.replace("*", " * ").split()
    is_const = "const" in tokens
    tokens = [t for t in tokens if t not in ("const", "volatile", "restrict", "register")]
    stars = tokens.count("*")
    base_tokens = [t for t in tokens if t != "*"]
    base = " ".join(base_tokens)
    if stars:
        if stars == 1 and base in ("char", "signed char"):
            return CType(CKind.CHAR_PTR, f"{base} *", is_const=is_const)
        return CType(CKind.OTHER_PTR, f"{base} {'*' * stars}", is_const=is_const)
    if base == "void":
        return CType(CKind.VOID, "void")
    if not base_tokens:
        return CType(CKind.UNSUPPORTED, type_text.strip())
    if base_tokens[0] == "struct" and len(base_tokens) == 2:
        return CType(CKind.STRUCT_VALUE, base, struct_tag=base_tokens[1])
    if base_tokens[0] == "enum" and len(base_tokens) == 2:
        return CType(CKind.INT_SIGNED, base)
    if base in ("float", "double", "long double"):
        return CType(CKind.FLOAT, base)
    if base in ("_Bool", "bool"):
        return CType(CKind.BOOL, base)
    if base in _SIGNED_INTS:
        return CType(CKind.INT_SIGNED, base)
    if base in _UNSIGNED_INTS:
        return CType(CKind.INT_UNSIGNED, base)
    return CType(CKind.UNSUPPORTED, base)


@dataclass(frozen=True)
class CParam:
    name: str
    ctype: CType
    declared: str  # the parameter text as written


@dataclass(frozen=True)
class CSignature:
    name: str
    return_type: CType
    params: tuple[CParam, ...]
    variadic: bool
    storage: tuple[str, ...]  # static / inline / extern, as written


def _split_params(params_text: str) -> list[str]:
    parts: list[str] = []
    depth = 0
    current = []
    for ch in params_text:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(current).strip())
            current = []
        else:
            current.append(ch)
    tail = "".join(current).strip()
    if tail:
        parts.append(tail)
    return parts


def _parse_param(text: str) -> CParam:
    if "(" in text:
        raise SignatureUnsupported(f"function-pointer parameter: {text!r}")
    array = False
    m = re.search(r"\[[^\]]*\]\s*$", text)
    if m:
        array = True
        text = text[: m.start()].rstrip()
    tokens = text.replace("*", " * ").split()
    idents = [
        (i, t)
        for i, t in enumerate(tokens)
        if _IDENT.fullmatch(t) and t not in _KEYWORDS
        and not re.fullmatch(r"u?int\d+_t|size_t|ssize_t|ptrdiff_t|bool|time_t|u?intptr_t", t)
    ]
    if not idents:
        raise SignatureUnsupported(f"unnamed parameter: {text!r}")
    # struct/enum/union tags directly follow their keyword; the name is the
    # last free identifier
    free = [
        (i, t) for i, t in idents
        if i == 0 or tokens[i - 1] not in ("struct", "union", "enum")
    ]
    if not free:
        raise SignatureUnsupported(f"unnamed parameter: {text!r}")
    name_index, name = free[-1]
    type_text = " ".join(tokens[:name_index] + tokens[name_index + 1:])
    if array:
        type_text += " *"  # arrays decay to pointers at the call boundary
    if not type_text:
        type_text = "int"  # untyped K&R parameter, implicit int
    return CParam(name=name, ctype=classify_type(type_text), declared=text)


def parse_signature(signature: str) -> CSignature:
    """Parse `storage? type name(params)` into structured form.

    Raises SignatureUnsupported for shapes outside the analyzer's scope
    (function pointers, unnamed parameters, missing return type in K&R
    definitions other than implicit int).
    """
    sig = " ".join(signature.split())
    open_paren = sig.find("(")
    if open_paren < 0 or not sig.endswith(")"):
        raise SignatureUnsupported(f"not a function signature: {signature!r}")
    head = sig[:open_paren].strip()
    params_text = sig[open_paren + 1 : -1].strip()
    m = re.search(r"([A-Za-z_][A-Za-z0-9_]*)$", head)
    if not m:
        raise SignatureUnsupported(f"no function name in {signature!r}")
    name = m.group(1)
    ret_text = head[: m.start()].strip()
    storage = tuple(
        t for t in ret_text.split() if t in ("static", "inline", "extern")
    )
    ret_clean = " ".join(
        t for t in ret_text.split() if t not in ("static", "inline", "extern")
    )
    if not ret_clean:
        ret_clean = "int"  # implicit int, pre-C99 style
    variadic = False
    params: list[CParam] = []
    if params_text and params_text != "void":
        for part in _split_params(params_text):
            if part == "...":
                variadic = True
                continue
            params.append(_parse_param(part))
    return CSignature(
        name=name,
        return_type=classify_type(ret_clean),
        params=tuple(params),
        variadic=variadic,
        storage=storage,
    )


@dataclass(frozen=True)
class StructDef:
    tag: str
    fields: tuple[CParam, ...]


_STRUCT_HEAD = re.compile(r"\bstruct\s+([A-Za-z_][A-Za-z0-9_]*)\s*\{")


def parse_structs(text: str) -> dict[str, StructDef]:
    """Struct definitions with per-field types, one level deep.

    Fields the parameter parser cannot handle become UNSUPPORTED and render
    as placeholders; nested struct values are left unsupported on purpose
    (one level of fields is what the trace format prints).
    """
    masked, _ = mask_source(text)
    defs: dict[str, StructDef] = {}
    for m in _STRUCT_HEAD.finditer(masked):
        tag = m.group(1)
        open_brace = masked.find("{", m.end() - 1)
        try:
            end = _match_brace(masked, open_brace)
        except SignatureUnsupported:
            continue
        inner = text[open_brace + 1 : end - 1]
        fields: list[CParam] = []
        for decl in inner.split(";"):
            decl = decl.strip()
            if not decl:
                continue
            # `int a, b` declares two fields of the shared base type
            head_type = None
            for piece in _split_params(decl):
                try:
                    if head_type is None:
                        param = _parse_param(piece)
                        head_tokens = piece.replace("*", " * ").split()
                        head_type = " ".join(head_tokens[:-1])
                    else:
                        param = _parse_param(f"{head_type} {piece}")
                except SignatureUnsupported:
                    param = CParam(
                        name=piece.split()[-1] if piece.split() else "?",
                        ctype=CType(CKind.UNSUPPORTED, piece),
                        declared=piece,
                    )
                fields.append(param)
        defs[tag] = StructDef(tag=tag, fields=tuple(fields))
    return defs
