"""Exception hierarchy shared across the package.

Every error raised by spectra code derives from SpectraError so callers can
catch the whole family with one clause.  The CLI maps subtrees to exit codes:
usage problems exit 1, environment problems exit 2, incomplete runs exit 3.
"""
from __future__ import annotations


class SpectraError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(SpectraError):
    """Bad arguments, unsupported language pair, malformed config."""


class UnsupportedPair(UsageError):
    """Requested a translation pair outside the supported set."""


class SpecParseFailed(SpectraError):
    """A model response could not be parsed into the requested spec modality."""


class ExtractionFailed(SpectraError):
    """No usable code could be extracted from a model response."""


class ReplayMiss(SpectraError):
    """Replay provider had no canned response for a prompt digest."""

    def __init__(self, digest: str, call_index: int, directory: str):
        self.digest = digest
        self.call_index = call_index
        self.directory = directory
        super().__init__(
            f"no replay fixture for digest {digest} (call #{call_index}) "
            f"under {directory}; record one with ReplayProvider.record()"
        )


class ProviderError(SpectraError):
    """Live provider failed after exhausting retries, or returned garbage."""


class EnvironmentProblem(SpectraError):
    """Missing toolchain, missing API key, or other host-setup defect."""


class ToolchainMissing(EnvironmentProblem):
    """A required compiler or runtime is not installed."""

    def __init__(self, language: str, probe: str, hint: str):
        self.language = language
        self.probe = probe
        self.hint = hint
        super().__init__(
            f"toolchain for {language} not found (probe: {probe}). {hint}"
        )


class CompileFailed(SpectraError):
    """Candidate source failed to build; carries the compiler log."""

    def __init__(self, log: str):
        self.log = log
        super().__init__(f"compile failed:\n{log}")


class ProjectStateError(SpectraError):
    """Project working tree diverged from expectations (failed restore, dirty swap)."""


class RunIncomplete(SpectraError):
    """A corpus or project run aborted before producing verdicts for every unit."""
