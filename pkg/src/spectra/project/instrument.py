"""Source-level instrumentation: wrap every function with a trace emitter.

Each instrumentable function F is renamed to F__sp_orig in place and a
wrapper with F's exact original signature is appended after it.  The wrapper
calls the original, then logs one line per call to the file named by
SPECTRA_TRACE_FILE (no-op when unset) and returns the original's value, so
program behaviour and stdout are untouched.  Logging happens after the call
returns: pointer arguments are rendered in their post-call state, which is
the state a caller can observe.

Trace line format (schema v1, one line per completed call):

    v1|<function>|<call index>|<arg>=<value>;<arg>=<value>|ret=<value>

Values escape % | ; = , { } CR LF and control bytes as %XX.  char pointers
render their first 100 characters; struct values render one level of fields
as {f=v,...}; other pointers render their address (canonicalized later by
the trace parser, since addresses are not comparable across runs); anything
unrenderable logs ? and is reported.  Variadic functions cannot forward
their arguments from a C wrapper, so they are skipped and reported.
"""
from __future__ import annotations

import re
import shutil
from dataclasses import dataclass
from pathlib import Path

from ..csource import (
    CKind,
    CSignature,
    CType,
    SignatureUnsupported,
    StructDef,
    extract_functions,
    parse_signature,
    parse_structs,
)
from ..errors import UsageError
from ..model import FunctionUnit
from .manifest import ProjectManifest

TRACE_ENV = "SPECTRA_TRACE_FILE"
TRACE_SCHEMA = "v1"
TRACE_HEADER_NAME = "__sp_trace.h"
ORIG_SUFFIX = "__sp_orig"

TRACE_HEADER = r"""#ifndef SP_TRACE_H
#define SP_TRACE_H
/* Trace emitter used by instrumented builds.  Writes one line per call to
   the file named by SPECTRA_TRACE_FILE; silent no-op when unset. */
#include <stdio.h>
#include <stdlib.h>

static FILE *__sp_stream(void) {
    static FILE *f;
    static int tried;
    if (!tried) {
        const char *path = getenv("SPECTRA_TRACE_FILE");
        if (path && *path) f = fopen(path, "a");
        tried = 1;
    }
    return f;
}

static void __sp_raw(const char *s) {
    FILE *f = __sp_stream();
    if (f) fputs(s, f);
}

static void __sp_esc(int c) {
    FILE *f = __sp_stream();
    if (!f) return;
    if (c == '%' || c == '|' || c == ';' || c == '=' || c == ',' ||
        c == '{' || c == '}' || c == '\n' || c == '\r' || c < 0x20)
        fprintf(f, "%%%02X", (unsigned char)c);
    else
        fputc(c, f);
}

static void __sp_val_str(const char *s) {
    int i;
    if (!__sp_stream()) return;
    if (!s) { __sp_raw("NULL"); return; }
    for (i = 0; i < 100 && s[i]; i++) __sp_esc((unsigned char)s[i]);
}

static void __sp_val_ll(long long v) {
    FILE *f = __sp_stream();
    if (f) fprintf(f, "%lld", v);
}

static void __sp_val_ull(unsigned long long v) {
    FILE *f = __sp_stream();
    if (f) fprintf(f, "%llu", v);
}

static void __sp_val_f(double v) {
    FILE *f = __sp_stream();
    if (f) fprintf(f, "%.17g", v);
}

static void __sp_val_ptr(const void *p) {
    FILE *f = __sp_stream();
    if (!f) return;
    if (!p) __sp_raw("NULL");
    else fprintf(f, "%p", p);
}

static void __sp_begin(const char *fn, long long idx) {
    FILE *f = __sp_stream();
    if (f) fprintf(f, "v1|%s|%lld|", fn, idx);
}

static void __sp_end(void) {
    FILE *f = __sp_stream();
    if (f) { fputc('\n', f); fflush(f); }
}
#endif
"""


@dataclass(frozen=True)
class InstrumentReport:
    instrumented: tuple[str, ...]
    skipped: tuple[tuple[str, str], ...]  # (function, reason)
    placeholders: tuple[tuple[str, str], ...]  # (function, argument) logged as ?

    def merged(self, other: "InstrumentReport") -> "InstrumentReport":
        return InstrumentReport(
            instrumented=self.instrumented + other.instrumented,
            skipped=self.skipped + other.skipped,
            placeholders=self.placeholders + other.placeholders,
        )


def _render_value(expr: str, ctype: CType, structs: dict[str, StructDef],
                  fn: str, label: str, placeholders: list[tuple[str, str]],
                  depth: int = 0) -> list[str]:
    """C statements that print the value of `expr` of type `ctype`."""
    kind = ctype.kind
    if kind in (CKind.INT_SIGNED, CKind.BOOL):
        return [f"__sp_val_ll((long long)({expr}));"]
    if kind is CKind.INT_UNSIGNED:
        return [f"__sp_val_ull((unsigned long long)({expr}));"]
    if kind is CKind.FLOAT:
        return [f"__sp_val_f((double)({expr}));"]
    if kind is CKind.CHAR_PTR:
        return [f"__sp_val_str({expr});"]
    if kind is CKind.OTHER_PTR:
        return [f"__sp_val_ptr((const void *)({expr}));"]
    if kind is CKind.STRUCT_VALUE and depth == 0:
        sdef = structs.get(ctype.struct_tag or "")
        if sdef is None:
            placeholders.append((fn, label))
            return ['__sp_raw("?");']
        lines = ['__sp_raw("{");']
        for i, fld in enumerate(sdef.fields):
            if i:
                lines.append('__sp_raw(",");')
            lines.append(f'__sp_raw("{fld.name}=");')
            lines.extend(
                _render_value(
                    f"({expr}).{fld.name}", fld.ctype, structs,
                    fn, f"{label}.{fld.name}", placeholders, depth=1,
                )
            )
        lines.append('__sp_raw("}");')
        return lines
    placeholders.append((fn, label))
    return ['__sp_raw("?");']


def _wrapper_text(unit: FunctionUnit, sig: CSignature,
                  structs: dict[str, StructDef],
                  placeholders: list[tuple[str, str]]) -> str:
    args = ", ".join(p.name for p in sig.params)
    ret = sig.return_type
    body: list[str] = [
        "    static long long __sp_n = 0;",
        "    long long __sp_i = __sp_n++;",
    ]
    if ret.kind is CKind.VOID:
        body.append(f"    {unit.name}{ORIG_SUFFIX}({args});")
    else:
        body.append(f"    {ret.text} __sp_r = {unit.name}{ORIG_SUFFIX}({args});")
    body.append(f'    __sp_begin("{unit.name}", __sp_i);')
    for i, param in enumerate(sig.params):
        sep = ";" if i else ""
        body.append(f'    __sp_raw("{sep}{param.name}=");')
        body.extend(
            "    " + stmt
            for stmt in _render_value(
                param.name, param.ctype, structs, unit.name, param.name, placeholders
            )
        )
    body.append('    __sp_raw("|ret=");')
    if ret.kind is CKind.VOID:
        body.append('    __sp_raw("void");')
    else:
        body.extend(
            "    " + stmt
            for stmt in _render_value(
                "__sp_r", ret, structs, unit.name, "ret", placeholders
            )
        )
    body.append("    __sp_end();")
    if ret.kind is not CKind.VOID:
        body.append("    return __sp_r;")
    return unit.signature + " {\n" + "\n".join(body) + "\n}\n"


def instrument_source(text: str, structs: dict[str, StructDef] | None = None
                      ) -> tuple[str, InstrumentReport]:
    """Rewrite one C file so every tractable function logs its calls."""
    if structs is None:
        structs = parse_structs(text)
    units = extract_functions(text)
    instrumented: list[str] = []
    skipped: list[tuple[str, str]] = []
    placeholders: list[tuple[str, str]] = []
    # edits applied back to front so earlier offsets stay valid
    edits: list[tuple[int, int, str]] = []  # (start, end, replacement)
    for unit in units:
        try:
            sig = parse_signature(unit.signature)
        except SignatureUnsupported as exc:
            skipped.append((unit.name, str(exc)))
            continue
        if sig.variadic:
            skipped.append((unit.name, "variadic: cannot forward arguments"))
            continue
        start, end = unit.byte_range
        sig_text = text[start:start + len(unit.signature)]
        m = re.search(rf"\b{re.escape(unit.name)}\s*\(", sig_text)
        if m is None:
            skipped.append((unit.name, "cannot locate name token"))
            continue
        name_at = start + m.start()
        wrapper = _wrapper_text(unit, sig, structs, placeholders)
        # forward-declare the wrapper so self-recursive calls inside the
        # renamed original still resolve to it with the right type
        clean_params = all(
            p.ctype.kind is not CKind.UNSUPPORTED for p in sig.params
        )
        if clean_params:
            edits.append((start, start, unit.signature + ";\n"))
        edits.append((name_at, name_at + len(unit.name), unit.name + ORIG_SUFFIX))
        edits.append((end, end, "\n" + wrapper))
        instrumented.append(unit.name)
    new_text = text
    for start, end, replacement in sorted(edits, reverse=True):
        new_text = new_text[:start] + replacement + new_text[end:]
    new_text = f'#include "{TRACE_HEADER_NAME}"\n' + new_text
    return new_text, InstrumentReport(
        instrumented=tuple(instrumented),
        skipped=tuple(skipped),
        placeholders=tuple(placeholders),
    )


def instrument_tree(manifest: ProjectManifest, dest: Path) -> InstrumentReport:
    """Copy the project to dest with entry sources instrumented.

    Struct definitions are gathered across all entry sources and headers
    first, so a struct defined in one file renders correctly in another.
    """
    dest = Path(dest)
    if dest.exists():
        raise UsageError(f"instrument destination already exists: {dest}")
    shutil.copytree(manifest.root, dest)
    structs: dict[str, StructDef] = {}
    for rel in list(manifest.headers) + list(manifest.entry_sources):
        path = dest / rel
        if path.is_file():
            structs.update(parse_structs(path.read_text(encoding="utf-8")))
    report = InstrumentReport((), (), ())
    header_dirs = {dest}
    for rel in manifest.entry_sources:
        path = dest / rel
        text = path.read_text(encoding="utf-8")
        new_text, file_report = instrument_source(text, structs)
        path.write_text(new_text, encoding="utf-8")
        report = report.merged(file_report)
        header_dirs.add(path.parent)
    # the include is quoted, so the header must sit beside each source file
    for directory in header_dirs:
        (directory / TRACE_HEADER_NAME).write_text(TRACE_HEADER, encoding="utf-8")
    return report
