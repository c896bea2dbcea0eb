"""Deterministic provider backends for offline runs and tests.

ReplayProvider resolves each request's content digest to a canned response
file.  Repeated identical requests (same digest) walk a numbered sequence:
<digest>.txt answers the first call, <digest>.2.txt the second, and so on,
with the last file answering all later calls.  A missing fixture is a hard
error naming the digest, never a silent fallback: a replay run that would
need the network must fail loudly.

ScriptedProvider answers from an ordered queue regardless of content, which
suits tests that care about call order and accounting rather than prompts.
"""
from __future__ import annotations

import threading
from collections import Counter
from pathlib import Path

from ..errors import ProviderError, ReplayMiss
from .base import ChatRequest, ModelResponse


class ReplayProvider:
    provider_id = "replay"

    def __init__(self, directory: Path):
        self.directory = Path(directory)
        if not self.directory.is_dir():
            raise ProviderError(f"replay directory not found: {self.directory}")
        self._lock = threading.Lock()
        self._calls: Counter[str] = Counter()

    def _fixture_path(self, digest: str, call_index: int) -> Path:
        if call_index == 1:
            return self.directory / f"{digest}.txt"
        return self.directory / f"{digest}.{call_index}.txt"

    def complete(self, request: ChatRequest) -> ModelResponse:
        digest = request.digest()
        with self._lock:
            self._calls[digest] += 1
            call_index = self._calls[digest]
        path = self._fixture_path(digest, call_index)
        if not path.is_file():
            # later calls fall back to the highest recorded file in sequence
            for idx in range(call_index - 1, 0, -1):
                candidate = self._fixture_path(digest, idx)
                if candidate.is_file():
                    path = candidate
                    break
            else:
                raise ReplayMiss(digest, call_index, str(self.directory))
        return ModelResponse(
            text=path.read_text(encoding="utf-8"),
            provider_id=self.provider_id,
            prompt_digest=digest,
        )

    def record(self, request: ChatRequest, text: str) -> Path:
        """Store a fixture for this request; repeated records extend the
        sequence, mirroring how repeated calls consume it."""
        digest = request.digest()
        index = 1
        while self._fixture_path(digest, index).exists():
            index += 1
        path = self._fixture_path(digest, index)
        path.write_text(text, encoding="utf-8")
        return path


class ScriptedProvider:
    """Answers calls from a FIFO of response texts and records every request."""

    provider_id = "scripted"

    def __init__(self, responses: list[str] | None = None):
        self._lock = threading.Lock()
        self._queue: list[str] = list(responses or [])
        self.requests: list[ChatRequest] = []

    def push(self, *texts: str) -> None:
        with self._lock:
            self._queue.extend(texts)

    def complete(self, request: ChatRequest) -> ModelResponse:
        with self._lock:
            self.requests.append(request)
            if not self._queue:
                raise ProviderError(
                    f"scripted provider exhausted after {len(self.requests) - 1} "
                    f"responses (next tag: {request.tag.value})"
                )
            text = self._queue.pop(0)
        return ModelResponse(
            text=text,
            provider_id=self.provider_id,
            prompt_digest=request.digest(),
        )

    def remaining(self) -> int:
        with self._lock:
            return len(self._queue)
