"""Whole-project translation: decomposition, specs from docstrings and
runtime traces, swap-in validation, per-function FFI translation.

Submodules:
    manifest    project description (sources, build command, e2e tests)
    instrument  trace-emitting wrappers injected around each function
    traces      trace-file parsing into per-function io specs
    ffi         exported-signature and extern-declaration glue for Rust
    build       mixed C + Rust build driver and function splicing
    runner      the orchestrator tying the phases together
"""
from .manifest import EndToEndTest, ProjectManifest
from .runner import FunctionStatus, ProjectResult, ProjectRunner

__all__ = [
    "EndToEndTest",
    "ProjectManifest",
    "ProjectRunner",
    "ProjectResult",
    "FunctionStatus",
]
