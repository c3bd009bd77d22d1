"""HTTP and subprocess clients for external model services."""

from __future__ import annotations

import json
import os
import subprocess
from dataclasses import dataclass
from typing import Any, Sequence

import httpx
import numpy as np

from ..errors import EmbeddingProviderError, ProviderError, ProviderTransportError


def _post(url: str, body: dict, *, timeout: float, headers: dict | None = None) -> httpx.Response:
    try:
        resp = httpx.post(url, json=body, timeout=timeout, headers=headers or {})
    except httpx.TransportError as exc:  # includes timeouts
        raise ProviderTransportError(f"POST {url}: {exc}") from exc
    if resp.status_code >= 500 or resp.status_code == 429:
        raise ProviderTransportError(f"POST {url}: HTTP {resp.status_code}")
    if resp.status_code >= 400:
        raise ProviderError(f"POST {url}: HTTP {resp.status_code}: {resp.text[:200]}")
    return resp


@dataclass
class HttpCompletionProvider:
    """POST ``{model, messages, temperature, seed?}`` and read ``{text}``."""

    url: str
    model: str
    api_key: str | None = None
    timeout: float = 120.0

    @classmethod
    def from_env(cls, model: str, **kw) -> "HttpCompletionProvider":
        url = os.environ.get("POD_LLM_URL")
        if not url:
            raise ProviderError("POD_LLM_URL is not set")
        return cls(url=url, model=model, api_key=os.environ.get("POD_LLM_KEY"), **kw)

    def complete(self, messages: Sequence[dict], *, temperature: float | None = None, seed: int | None = None) -> str:
        body: dict[str, Any] = {"model": self.model, "messages": list(messages)}
        if temperature is not None:
            body["temperature"] = temperature
        if seed is not None:
            body["seed"] = seed
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        resp = _post(self.url, body, timeout=self.timeout, headers=headers)
        try:
            return resp.json()["text"]
        except (ValueError, KeyError, TypeError) as exc:
            raise ProviderError(f"malformed completion response: {exc}") from exc


@dataclass
class HttpAudioProvider:
    """Speech or text-to-audio backend: POST the JSON payload, receive WAV bytes."""

    url: str
    timeout: float = 300.0

    def _call(self, payload: dict[str, Any]) -> bytes:
        return _post(self.url, payload, timeout=self.timeout).content

    synthesize = _call
    generate = _call


@dataclass
class SubprocessAudioProvider:
    """Runs a command that reads the JSON payload on stdin and writes WAV to stdout."""

    argv: list[str]
    timeout: float = 300.0

    def _call(self, payload: dict[str, Any]) -> bytes:
        try:
            proc = subprocess.run(
                self.argv, input=json.dumps(payload).encode(), capture_output=True, timeout=self.timeout
            )
        except subprocess.TimeoutExpired as exc:
            raise ProviderTransportError(f"{self.argv[0]} timed out") from exc
        except OSError as exc:
            raise ProviderError(f"cannot run {self.argv[0]}: {exc}") from exc
        if proc.returncode != 0:
            raise ProviderError(f"{self.argv[0]} exited {proc.returncode}: {proc.stderr.decode(errors='replace')[:200]}")
        return proc.stdout

    synthesize = _call
    generate = _call


@dataclass
class HttpEmbeddingProvider:
    """POST ``{texts}`` and read ``{embeddings: [[...], ...]}``."""

    url: str
    embedder_id: str = "http"
    timeout: float = 60.0

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        try:
            resp = _post(self.url, {"texts": list(texts)}, timeout=self.timeout)
            arr = np.asarray(resp.json()["embeddings"], dtype=np.float64)
        except ProviderError as exc:
            raise EmbeddingProviderError(str(exc)) from exc
        except (ValueError, KeyError, TypeError) as exc:
            raise EmbeddingProviderError(f"malformed embedding response: {exc}") from exc
        if arr.ndim != 2 or len(arr) != len(texts):
            raise EmbeddingProviderError(f"expected {len(texts)} vectors, got shape {arr.shape}")
        return arr
