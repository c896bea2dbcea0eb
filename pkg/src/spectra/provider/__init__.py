"""Model-provider abstraction: prompt composition, backends, response parsing.

Submodules:
    base       ChatRequest / ModelResponse / Provider protocol
    templates  prompt template loading and rendering
    compose    request builders for every pipeline step
    parse      code-block and spec extraction from responses
    replay     deterministic digest-keyed and scripted backends
    live       HTTP backend with retry
"""
from .base import ChatRequest, ModelResponse, Provider, RecordingProvider, RequestTag
from .compose import (
    compose_codegen_prompt,
    compose_desc_spec_prompt,
    compose_fn_spec_prompt,
    compose_io_spec_prompt,
    compose_repair_prompt,
    compose_static_spec_prompt,
    compose_translation_prompt,
    render_spec,
)
from .live import LiveProvider
from .parse import extract_code_block, extract_spec
from .replay import ReplayProvider, ScriptedProvider
from .templates import PromptLibrary, PromptTemplate

__all__ = [
    "ChatRequest",
    "ModelResponse",
    "Provider",
    "RecordingProvider",
    "RequestTag",
    "PromptLibrary",
    "PromptTemplate",
    "compose_static_spec_prompt",
    "compose_io_spec_prompt",
    "compose_desc_spec_prompt",
    "compose_fn_spec_prompt",
    "compose_codegen_prompt",
    "compose_translation_prompt",
    "compose_repair_prompt",
    "render_spec",
    "extract_code_block",
    "extract_spec",
    "ReplayProvider",
    "ScriptedProvider",
    "LiveProvider",
]
