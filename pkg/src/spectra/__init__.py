"""Specification-driven code translation.

The pipeline in one breath: generate a multi-modal specification for a
program (static contracts, io examples, a prose description), keep only the
parts that survive validation against the original program, then translate
stage by stage, spending one candidate per spec modality and judging every
candidate by compiling and running it against the original tests.

Top-level modules:
    model      core dataclasses, stage accounting, pass@k arithmetic
    corpus     problem-directory loading
    specgen    candidate generation loops and budgets
    specval    self-consistency and io validation
    translate  staged translation pipeline over programs and corpora
    sandbox    compile-and-run isolation for candidate programs
    csource    C decomposition (functions, signatures, structs)
    project    whole-project migration (instrument, trace, swap, link)
    provider   model access: prompts, parsing, replay, live transport
    store      on-disk spec and run persistence
    report     result tables and cross-run attribution
    config     defaults < config file < command-line flags
    cli        the `spectra` command
"""

__version__ = "0.1.0"

from .errors import SpectraError
from .model import (
    FailureKind,
    Language,
    Modality,
    PassAtKReport,
    SourceProgram,
    SpecSet,
    SpecStatus,
    Specification,
    StageRecord,
    StageResult,
    TestCase,
)

__all__ = [
    "__version__",
    "SpectraError",
    "FailureKind",
    "Language",
    "Modality",
    "PassAtKReport",
    "SourceProgram",
    "SpecSet",
    "SpecStatus",
    "Specification",
    "StageRecord",
    "StageResult",
    "TestCase",
]
