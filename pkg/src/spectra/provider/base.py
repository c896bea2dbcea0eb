"""Request/response types and the provider protocol.

A ChatRequest is a pure value: the digest of its messages and sampling
temperature identifies it for replay, so two requests with identical content
always resolve to the same canned response file.  Tags classify requests by
pipeline role; accounting (candidate budgets, repair-round caps, temperature
policy) is asserted against the tagged request log, never inferred from
prompt text.
"""
from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass
from enum import Enum
from typing import Protocol, runtime_checkable


class RequestTag(Enum):
    SPEC_GEN = "spec_gen"  # generate a spec candidate from source
    CODE_GEN = "code_gen"  # regenerate source from a spec (validation)
    TRANSLATE = "translate"  # produce a target-language candidate
    REPAIR = "repair"  # regenerate after a compile failure


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[tuple[str, str], ...]  # (role, content); roles: system, user
    temperature: float
    tag: RequestTag
    max_tokens: int = 4096

    def __post_init__(self) -> None:
        for role, _ in self.messages:
            if role not in ("system", "user", "assistant"):
                raise ValueError(f"bad message role: {role!r}")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature out of range: {self.temperature}")

    def digest(self) -> str:
        """Content hash identifying this request for replay.

        Covers roles, message text, and temperature; excludes the tag, which
        is bookkeeping, not prompt content.
        """
        h = hashlib.sha256()
        for role, content in self.messages:
            h.update(role.encode("utf-8"))
            h.update(b"\x1f")
            h.update(content.encode("utf-8"))
            h.update(b"\x1e")
        h.update(f"temp={self.temperature:.4f}".encode("ascii"))
        return h.hexdigest()

    def prompt_chars(self) -> int:
        return sum(len(content) for _, content in self.messages)


@dataclass(frozen=True)
class ModelResponse:
    text: str
    provider_id: str
    prompt_digest: str


@runtime_checkable
class Provider(Protocol):
    """Anything that can answer a ChatRequest."""

    provider_id: str

    def complete(self, request: ChatRequest) -> ModelResponse: ...


class RecordingProvider:
    """Wraps another provider and logs every request/response pair.

    Thread safe; the log preserves call order across threads.  Used by run
    bookkeeping and by tests asserting temperature and budget policy.
    """

    def __init__(self, inner: Provider):
        self._inner = inner
        self._lock = threading.Lock()
        self.log: list[tuple[ChatRequest, ModelResponse]] = []

    @property
    def provider_id(self) -> str:
        return self._inner.provider_id

    def complete(self, request: ChatRequest) -> ModelResponse:
        response = self._inner.complete(request)
        with self._lock:
            self.log.append((request, response))
        return response

    def requests(self, tag: RequestTag | None = None) -> list[ChatRequest]:
        with self._lock:
            return [r for r, _ in self.log if tag is None or r.tag is tag]
