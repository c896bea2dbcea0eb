"""Application configuration: defaults, config file, CLI overrides.

Precedence, lowest to highest: built-in defaults, then a JSON config file,
then explicit command-line flags.  Unknown keys in the file are an error so
a typo cannot silently fall back to a default.
"""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import UsageError
from .model import Language
from .provider.base import Provider
from .provider.live import LiveProvider
from .provider.replay import ReplayProvider
from .provider.templates import PromptLibrary
from .sandbox import RunLimits, Sandbox
from .specgen import GenBudget
from .translate import PipelineConfig, PipelineMode

CONFIG_ENV = "SPECTRA_CONFIG"


@dataclass(frozen=True)
class AppConfig:
    provider: str = "replay"  # replay (recorded responses) or live
    model: str = "default"  # live mode: model name sent with each request
    replay_dir: str = "recordings"
    store_dir: str = "spectra-store"
    mode: str = "spectra"
    target: str = "rust"
    k_max: int = 3
    repair_rounds: int = 0
    workers: int = 1
    max_prompt_chars: int = 0  # 0 = unlimited
    static_max: int = 6
    desc_max: int = 6
    io_max: int = 10
    io_pair_count: int = 10
    wall_timeout: float = 10.0
    compile_timeout: float = 60.0
    bit_exact: bool = False
    record: bool = False  # live mode: save responses into replay_dir

    def budget(self) -> GenBudget:
        return GenBudget(
            static_max=self.static_max,
            desc_max=self.desc_max,
            io_max=self.io_max,
            io_pair_count=self.io_pair_count,
        )

    def limits(self) -> RunLimits:
        return RunLimits(
            wall_timeout=self.wall_timeout, compile_timeout=self.compile_timeout
        )

    def pipeline(self) -> PipelineConfig:
        return PipelineConfig(
            mode=PipelineMode.parse(self.mode),
            target=Language.parse(self.target),
            k_max=self.k_max,
            repair_rounds=self.repair_rounds,
            max_prompt_chars=self.max_prompt_chars or None,
        )

    def make_sandbox(self) -> Sandbox:
        return Sandbox(limits=self.limits(), bit_exact=self.bit_exact)

    def make_provider(self) -> Provider:
        if self.provider == "replay":
            return ReplayProvider(Path(self.replay_dir))
        if self.provider == "live":
            provider = LiveProvider(model=self.model)
            if self.record:
                Path(self.replay_dir).mkdir(parents=True, exist_ok=True)
                return _RecordingLive(provider, ReplayProvider(Path(self.replay_dir)))
            return provider
        raise UsageError(
            f"unknown provider {self.provider!r} (expected replay or live)"
        )

    def make_library(self) -> PromptLibrary:
        return PromptLibrary.default()

    def as_dict(self) -> dict:
        return asdict(self)


class _RecordingLive:
    """Live provider that also appends every answer to a replay directory."""

    def __init__(self, inner: LiveProvider, recordings: ReplayProvider):
        self._inner = inner
        self._recordings = recordings
        self.provider_id = inner.provider_id

    def complete(self, request):
        response = self._inner.complete(request)
        self._recordings.record(request, response.text)
        return response


_FIELD_TYPES = {f.name: f.type for f in fields(AppConfig)}


def _coerce(name: str, value):
    """JSON and CLI values arrive loosely typed; pin them to the field type."""
    kind = _FIELD_TYPES[name]
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
        if kind == "bool":
            if isinstance(value, bool):
                return value
            if isinstance(value, str) and value.lower() in ("true", "false"):
                return value.lower() == "true"
            raise ValueError(value)
        return str(value)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"config key {name}: bad value {value!r}") from exc


def load_config(
    path: Path | None = None, overrides: dict | None = None
) -> AppConfig:
    """Defaults, then the file (explicit path, else $SPECTRA_CONFIG), then
    overrides with None values meaning "not given"."""
    config = AppConfig()
    if path is None and os.environ.get(CONFIG_ENV):
        path = Path(os.environ[CONFIG_ENV])
    if path is not None:
        if not Path(path).is_file():
            raise UsageError(f"config file not found: {path}")
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = sorted(set(data) - set(_FIELD_TYPES))
        if unknown:
            raise UsageError(f"unknown config keys: {unknown}")
        config = replace(
            config, **{k: _coerce(k, v) for k, v in data.items()}
        )
    if overrides:
        given = {k: v for k, v in overrides.items() if v is not None}
        unknown = sorted(set(given) - set(_FIELD_TYPES))
        if unknown:
            raise UsageError(f"unknown config overrides: {unknown}")
        config = replace(
            config, **{k: _coerce(k, v) for k, v in given.items()}
        )
    return config
