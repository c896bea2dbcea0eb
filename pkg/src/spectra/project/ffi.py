"""C-ABI glue for translating one function at a time into Rust.

For a function staying behind in a C project, three artifacts make the swap
linkable:

  * the exported signature skeleton the Rust translation must keep
    (#[no_mangle] extern "C", same symbol, C-compatible types);
  * extern "C" declarations for project functions it calls that remain in C;
  * a machine-readable binding description consumed by the mixed build.

Type mapping is conservative.  Scalars and char pointers map tightly; other
object pointers become *mut c_void (the Rust side treats them as opaque);
struct-by-value, unions and variadics are NonRenderable, which the caller
reports as a skipped function rather than guessing an ABI.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

from ..csource import CKind, CSignature, CType, SignatureUnsupported, parse_signature
from ..errors import SpectraError
from ..model import FunctionUnit


class NonRenderable(SpectraError):
    """The function's signature cannot cross the C ABI safely."""


_SIGNED_MAP = {
    "char": "core::ffi::c_char",
    "signed char": "i8",
    "short": "i16",
    "short int": "i16",
    "int": "i32",
    "signed": "i32",
    "signed int": "i32",
    "long": "i64",
    "long int": "i64",
    "long long": "i64",
    "long long int": "i64",
    "ssize_t": "isize",
    "ptrdiff_t": "isize",
    "intptr_t": "isize",
    "int8_t": "i8",
    "int16_t": "i16",
    "int32_t": "i32",
    "int64_t": "i64",
    "time_t": "i64",
}
_UNSIGNED_MAP = {
    "unsigned char": "u8",
    "unsigned short": "u16",
    "unsigned short int": "u16",
    "unsigned": "u32",
    "unsigned int": "u32",
    "unsigned long": "u64",
    "unsigned long int": "u64",
    "unsigned long long": "u64",
    "unsigned long long int": "u64",
    "size_t": "usize",
    "uintptr_t": "usize",
    "uint8_t": "u8",
    "uint16_t": "u16",
    "uint32_t": "u32",
    "uint64_t": "u64",
}


def rust_type(ctype: CType) -> str:
    kind = ctype.kind
    if kind is CKind.INT_SIGNED:
        mapped = _SIGNED_MAP.get(ctype.text)
        if mapped is None and ctype.text.startswith("enum "):
            return "i32"  # C enums have int representation
        if mapped is None:
            raise NonRenderable(f"no Rust mapping for {ctype.text!r}")
        return mapped
    if kind is CKind.INT_UNSIGNED:
        mapped = _UNSIGNED_MAP.get(ctype.text)
        if mapped is None:
            raise NonRenderable(f"no Rust mapping for {ctype.text!r}")
        return mapped
    if kind is CKind.FLOAT:
        if ctype.text == "float":
            return "f32"
        if ctype.text == "double":
            return "f64"
        raise NonRenderable("long double has no stable C ABI mapping")
    if kind is CKind.BOOL:
        return "bool"
    if kind is CKind.CHAR_PTR:
        qual = "const" if ctype.is_const else "mut"
        return f"*{qual} core::ffi::c_char"
    if kind is CKind.OTHER_PTR:
        return "*mut core::ffi::c_void"
    raise NonRenderable(f"{ctype.text!r} cannot cross the C ABI here")


FFI_SCHEMA = "spectra-ffi-v1"


@dataclass(frozen=True)
class FfiGlue:
    function: str
    rust_export: str  # #[no_mangle] skeleton the translation must fill in
    extern_decls: str  # extern "C" block for callees staying in C; may be ""
    c_prototype: str  # declaration spliced into C sources in place of the body
    binding_config: str  # JSON consumed by the mixed build driver


def _rust_signature(sig: CSignature) -> str:
    params = ", ".join(f"{p.name}: {rust_type(p.ctype)}" for p in sig.params)
    ret = ""
    if sig.return_type.kind is not CKind.VOID:
        ret = f" -> {rust_type(sig.return_type)}"
    return f"fn {sig.name}({params}){ret}"


def c_prototype(signature: str) -> str:
    """The declaration left behind in C when the definition moves to Rust.

    static/inline are dropped: the Rust symbol has external linkage and a
    static-qualified declaration would demand a local definition.
    """
    cleaned = " ".join(
        t for t in signature.split() if t not in ("static", "inline")
    )
    return cleaned + ";"


def generate_ffi_glue(
    unit: FunctionUnit, program_units: tuple[FunctionUnit, ...]
) -> FfiGlue:
    """Glue for swapping `unit` to Rust while program_units stay in C.

    Raises NonRenderable when the signature (or a needed callee's) cannot
    cross the ABI; callees with unrenderable signatures are listed in the
    binding config as skipped rather than silently omitted.
    """
    try:
        sig = parse_signature(unit.signature)
    except SignatureUnsupported as exc:
        raise NonRenderable(f"{unit.name}: {exc}") from exc
    if sig.variadic:
        raise NonRenderable(f"{unit.name}: variadic functions are not translated")
    rust_sig = _rust_signature(sig)  # raises NonRenderable on bad types

    by_name = {u.name: u for u in program_units}
    decls: list[str] = []
    skipped: list[str] = []
    for callee in sorted(unit.callees):
        callee_unit = by_name.get(callee)
        if callee_unit is None:
            continue
        try:
            callee_sig = parse_signature(callee_unit.signature)
            if callee_sig.variadic:
                raise NonRenderable("variadic")
            decls.append(f"    {_rust_signature(callee_sig)};")
        except (SignatureUnsupported, NonRenderable):
            skipped.append(callee)
    extern_block = ""
    if decls:
        extern_block = 'extern "C" {\n' + "\n".join(decls) + "\n}\n"

    export = f"#[no_mangle]\npub extern \"C\" {rust_sig} {{\n    todo!()\n}}"
    prototype = c_prototype(unit.signature)
    binding = json.dumps(
        {
            "schema": FFI_SCHEMA,
            "function": unit.name,
            "c_prototype": prototype,
            "rust_export": rust_sig,
            "extern_c": [c for c in sorted(unit.callees) if c not in skipped],
            "skipped_callees": skipped,
        },
        indent=2,
        sort_keys=True,
    )
    return FfiGlue(
        function=unit.name,
        rust_export=export,
        extern_decls=extern_block,
        c_prototype=prototype,
        binding_config=binding,
    )
