"""Provider protocols and the shared retry policy."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol, Sequence, TypeVar

import numpy as np

from ..errors import ProviderError, ProviderTransportError

log = logging.getLogger(__name__)

T = TypeVar("T")

Message = dict[str, str]

TRANSIENT = (ProviderTransportError, TimeoutError, ConnectionError)


class CompletionProvider(Protocol):
    def complete(
        self, messages: Sequence[Message], *, temperature: float | None = None, seed: int | None = None
    ) -> str: ...


class TtsProvider(Protocol):
    def synthesize(self, payload: dict[str, Any]) -> bytes:
        """Return WAV bytes for a ``{text, reference_audio, instruction?}`` payload."""
        ...


class TtaProvider(Protocol):
    def generate(self, payload: dict[str, Any]) -> bytes:
        """Return WAV bytes for a ``{description, duration_s, kind}`` payload."""
        ...


class EmbeddingProvider(Protocol):
    embedder_id: str

    def embed(self, texts: Sequence[str]) -> np.ndarray: ...


@dataclass
class RetryPolicy:
    """Retry transient transport failures with exponential backoff.

    Schema and validation errors are never retried here.
    """

    attempts: int = 3
    backoff_s: float = 1.0
    sleep: Callable[[float], None] = field(default=time.sleep, repr=False)

    def call(self, fn: Callable[[], T], what: str = "provider call") -> T:
        delay = self.backoff_s
        for attempt in range(1, self.attempts + 1):
            try:
                return fn()
            except TRANSIENT as exc:
                if attempt == self.attempts:
                    raise ProviderError(f"{what} failed after {attempt} attempts: {exc}") from exc
                log.warning("%s: transient failure (%s), retry %d in %.1fs", what, exc, attempt, delay)
                self.sleep(delay)
                delay *= 2
        raise AssertionError("unreachable")
