"""HTTP chat-completions backend.

Speaks the common chat-completions wire shape: POST {url}/chat/completions
with {model, messages, temperature, max_tokens}, reading the reply text from
choices[0].message.content.  The API key comes from SPECTRA_API_KEY and the
endpoint from SPECTRA_PROVIDER_URL (or explicit constructor arguments, which
win).  Transient failures retry up to five attempts with exponential backoff
and jitter; after that the run aborts rather than record a half-finished
corpus silently.
"""
from __future__ import annotations

import os
import random
import time

import requests

from ..errors import EnvironmentProblem, ProviderError
from .base import ChatRequest, ModelResponse

API_KEY_ENV = "SPECTRA_API_KEY"
PROVIDER_URL_ENV = "SPECTRA_PROVIDER_URL"

_MAX_ATTEMPTS = 5
_BACKOFF_BASE = 1.0  # seconds; attempt n sleeps base * 2^(n-1) * (1 + jitter)
_RETRYABLE_STATUS = {408, 429, 500, 502, 503, 504}


class LiveProvider:
    def __init__(
        self,
        model: str,
        url: str | None = None,
        api_key: str | None = None,
        timeout: float = 120.0,
        session: requests.Session | None = None,
        sleeper=time.sleep,
    ):
        self.model = model
        self.url = (url or os.environ.get(PROVIDER_URL_ENV, "")).rstrip("/")
        self.api_key = api_key or os.environ.get(API_KEY_ENV, "")
        if not self.url:
            raise EnvironmentProblem(
                f"no provider URL: set {PROVIDER_URL_ENV} or pass url="
            )
        if not self.api_key:
            raise EnvironmentProblem(f"no API key: set {API_KEY_ENV}")
        self.timeout = timeout
        self._session = session or requests.Session()
        self._sleep = sleeper
        self.provider_id = f"live:{model}"

    def complete(self, request: ChatRequest) -> ModelResponse:
        payload = {
            "model": self.model,
            "messages": [
                {"role": role, "content": content}
                for role, content in request.messages
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        headers = {"Authorization": f"Bearer {self.api_key}"}
        last_error = "no attempt made"
        for attempt in range(1, _MAX_ATTEMPTS + 1):
            try:
                resp = self._session.post(
                    f"{self.url}/chat/completions",
                    json=payload,
                    headers=headers,
                    timeout=self.timeout,
                )
            except requests.RequestException as exc:
                last_error = f"transport error: {exc}"
            else:
                if resp.status_code == 200:
                    return self._parse(resp, request)
                last_error = f"HTTP {resp.status_code}: {resp.text[:200]}"
                if resp.status_code not in _RETRYABLE_STATUS:
                    raise ProviderError(last_error)
            if attempt < _MAX_ATTEMPTS:
                delay = _BACKOFF_BASE * (2 ** (attempt - 1))
                self._sleep(delay * (1.0 + random.random()))
        raise ProviderError(
            f"provider failed after {_MAX_ATTEMPTS} attempts; last: {last_error}"
        )

    def _parse(self, resp: requests.Response, request: ChatRequest) -> ModelResponse:
        try:
            data = resp.json()
            text = data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"malformed provider response: {exc}") from exc
        if not isinstance(text, str) or not text:
            raise ProviderError("provider returned empty completion")
        return ModelResponse(
            text=text,
            provider_id=self.provider_id,
            prompt_digest=request.digest(),
        )
