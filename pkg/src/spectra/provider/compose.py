"""Builders that turn pipeline steps into ChatRequests.

Temperature policy lives here and only here: spec generation samples at 0.6,
the first translation attempt for a program runs greedy at 0.0, every later
attempt runs at 0.3, and validation/repair regenerations run greedy.  Tests
assert the request log against these constants, so changing them is a policy
change, not a tweak.

The spec-to-source builder (compose_codegen_prompt) never receives program
source, by signature: regeneration must be driven by the spec alone or the
self-consistency check proves nothing.
"""
from __future__ import annotations

from typing import Sequence

from ..errors import UsageError
from ..model import (
    DescSpec,
    FunctionUnit,
    IoSpec,
    Language,
    Modality,
    SourceProgram,
    Specification,
    StaticSpec,
    require_supported_pair,
)
from .base import ChatRequest, RequestTag
from .templates import PromptLibrary

SPEC_GEN_TEMPERATURE = 0.6
CODE_GEN_TEMPERATURE = 0.0
FIRST_TRANSLATE_TEMPERATURE = 0.0
RETRY_TRANSLATE_TEMPERATURE = 0.3
REPAIR_TEMPERATURE = 0.0

# Compiler logs are clipped to this many bytes before prompting; heads carry
# the first (most actionable) errors, so clipping keeps the front.
REPAIR_LOG_CAP = 32768

_DISPLAY = {
    Language.C: "C",
    Language.RUST: "Rust",
    Language.GO: "Go",
    Language.JAVASCRIPT: "JavaScript",
    Language.TYPESCRIPT: "TypeScript",
}

# Spec generation reads source programs; only these are source languages.
_SPEC_SOURCES = (Language.C, Language.JAVASCRIPT)


def _user(text: str, temperature: float, tag: RequestTag) -> ChatRequest:
    return ChatRequest(
        messages=(("user", text),), temperature=temperature, tag=tag
    )


def _decode(raw: bytes) -> str:
    return raw.decode("utf-8", errors="replace")


def render_spec(spec: Specification) -> str:
    """Deterministic text form of a spec, as embedded in prompts.

    Same spec value, same rendering, always: replay digests depend on it.
    """
    payload = spec.payload
    if isinstance(payload, StaticSpec):
        lines = [
            "Static specification:",
            f"Input Format: {payload.input_format}",
            f"Output Format: {payload.output_format}",
        ]
        for name, contract in payload.contracts:
            lines.append("")
            lines.append(f"Function: {name}")
            lines.append(f"Precondition: {contract.precondition}")
            lines.append(f"Postcondition: {contract.postcondition}")
        return "\n".join(lines)
    if isinstance(payload, IoSpec):
        lines = ["Input/output examples:"]
        for pair in payload.pairs:
            lines.append("Input:")
            lines.append(_decode(pair.stdin).rstrip("\n"))
            lines.append("Output:")
            lines.append(_decode(pair.stdout).rstrip("\n"))
        return "\n".join(lines)
    if isinstance(payload, DescSpec):
        return f"Description:\n{payload.text.strip()}"
    raise UsageError(f"cannot render payload of type {type(payload).__name__}")


def _require_spec_source(program: SourceProgram) -> None:
    if program.language not in _SPEC_SOURCES:
        raise UsageError(
            f"spec generation reads source programs, not {program.language.value}"
        )


def compose_static_spec_prompt(
    program: SourceProgram, library: PromptLibrary
) -> ChatRequest:
    _require_spec_source(program)
    text = library.get("static_spec").render(
        language=_DISPLAY[program.language], source=program.source
    )
    return _user(text, SPEC_GEN_TEMPERATURE, RequestTag.SPEC_GEN)


def compose_io_spec_prompt(
    program: SourceProgram, count: int, library: PromptLibrary
) -> ChatRequest:
    _require_spec_source(program)
    if count < 1:
        raise UsageError("io spec prompt needs count >= 1")
    text = library.get("io_spec").render(
        language=_DISPLAY[program.language],
        source=program.source,
        count=str(count),
    )
    return _user(text, SPEC_GEN_TEMPERATURE, RequestTag.SPEC_GEN)


def compose_desc_spec_prompt(
    program: SourceProgram, library: PromptLibrary
) -> ChatRequest:
    _require_spec_source(program)
    text = library.get("desc_spec").render(
        language=_DISPLAY[program.language], source=program.source
    )
    return _user(text, SPEC_GEN_TEMPERATURE, RequestTag.SPEC_GEN)


def compose_fn_spec_prompt(
    unit: FunctionUnit, language: Language, library: PromptLibrary
) -> ChatRequest:
    source = unit.body
    if unit.docstring and language is Language.C:
        source = f"/* {unit.docstring} */\n{source}"
    text = library.get("fn_static_spec").render(
        language=_DISPLAY[language], source=source, function_name=unit.name
    )
    return _user(text, SPEC_GEN_TEMPERATURE, RequestTag.SPEC_GEN)


def compose_codegen_prompt(
    spec: Specification,
    language: Language,
    library: PromptLibrary,
    function_name: str | None = None,
    spec_suffix: str = "",
) -> ChatRequest:
    """Regenerate source from a spec alone (the self-consistency probe).

    Only static and description specs can drive regeneration; io specs are
    validated by execution, and asking for code from bare examples would
    check the model's guessing, not the spec's fidelity.  spec_suffix lets
    project mode pin the required signature without touching the source.
    """
    if spec.modality is Modality.IO:
        raise UsageError("io specs are validated by execution, not regeneration")
    spec_text = render_spec(spec)
    if spec_suffix:
        spec_text = f"{spec_text}\n{spec_suffix}"
    if function_name is None:
        text = library.get("codegen").render(
            language=_DISPLAY[language], spec=spec_text
        )
    else:
        text = library.get("fn_codegen").render(
            language=_DISPLAY[language],
            spec=spec_text,
            function_name=function_name,
        )
    return _user(text, CODE_GEN_TEMPERATURE, RequestTag.CODE_GEN)


def compose_fn_codegen_prompt(
    spec_text: str,
    function_name: str,
    language: Language,
    library: PromptLibrary,
) -> ChatRequest:
    """Regenerate one function from its rendered contract.

    spec_text carries the contract plus the required signature; the
    function's body never appears in it, only its interface.
    """
    if not spec_text.strip():
        raise UsageError("function regeneration needs a non-empty spec block")
    text = library.get("fn_codegen").render(
        language=_DISPLAY[language],
        spec=spec_text,
        function_name=function_name,
    )
    return _user(text, CODE_GEN_TEMPERATURE, RequestTag.CODE_GEN)


def compose_translation_prompt(
    program: SourceProgram,
    spec: Specification | None,
    target: Language,
    temperature: float,
    library: PromptLibrary,
    all_specs: Sequence[Specification] | None = None,
) -> ChatRequest:
    """Build one translation request.

    spec=None gives the vanilla prompt.  all_specs renders every provided
    spec into a single prompt (the everything-at-once arm); it excludes the
    single-spec form.
    """
    require_supported_pair(program.language, target)
    if all_specs is not None and spec is not None:
        raise UsageError("pass either one spec or all_specs, not both")
    if all_specs is not None and not all_specs:
        raise UsageError("all_specs must be non-empty when given")
    if all_specs is not None:
        block = "\n\n".join(render_spec(s) for s in all_specs)
    elif spec is not None:
        block = render_spec(spec)
    else:
        block = None

    if block is None:
        text = library.get("translate_plain").render(
            language=_DISPLAY[program.language],
            target_language=_DISPLAY[target],
            source=program.source,
        )
    else:
        text = library.get("translate_spec").render(
            language=_DISPLAY[program.language],
            target_language=_DISPLAY[target],
            source=program.source,
            spec=block,
        )
    return _user(text, temperature, RequestTag.TRANSLATE)


def compose_fn_translation_prompt(
    unit: FunctionUnit,
    language: Language,
    target: Language,
    spec_text: str,
    temperature: float,
    library: PromptLibrary,
) -> ChatRequest:
    """Translate one project function; spec_text carries contracts, traced
    examples, the required exported signature, and extern declarations, all
    pre-rendered by the project driver."""
    require_supported_pair(language, target)
    if not spec_text.strip():
        raise UsageError("function translation needs a non-empty spec block")
    text = library.get("fn_translate").render(
        language=_DISPLAY[language],
        target_language=_DISPLAY[target],
        source=unit.body,
        spec=spec_text,
        function_name=unit.name,
    )
    return _user(text, temperature, RequestTag.TRANSLATE)


def compose_repair_prompt(
    candidate: str,
    compiler_log: str,
    target: Language,
    library: PromptLibrary,
    log_cap: int = REPAIR_LOG_CAP,
) -> ChatRequest:
    if not compiler_log.strip():
        raise UsageError("repair prompt needs a non-empty compiler log")
    if log_cap < 1:
        raise UsageError("log cap must be positive")
    log = compiler_log
    if len(log.encode("utf-8")) > log_cap:
        clipped = log.encode("utf-8")[:log_cap].decode("utf-8", errors="ignore")
        log = clipped + "\n[log clipped]"
    text = library.get("repair").render(
        target_language=_DISPLAY[target], source=candidate, compiler_log=log
    )
    return _user(text, REPAIR_TEMPERATURE, RequestTag.REPAIR)
