"""Embedding backends."""

from __future__ import annotations

import hashlib
from functools import lru_cache
from typing import Sequence

import numpy as np

from ..errors import EmbeddingProviderError


@lru_cache(maxsize=65536)
def _token_vector(token: str, dim: int, salt: str) -> np.ndarray:
    seed = int.from_bytes(hashlib.sha256(f"{salt}\x00{token}".encode()).digest()[:8], "little")
    vec = np.random.default_rng(seed).standard_normal(dim)
    vec.setflags(write=False)
    return vec


class HashProjectionEmbedder:
    """Deterministic bag-of-words embedding via hashed random projections.

    Each token maps to a fixed Gaussian vector derived from its SHA-256; a text
    embeds to the sum over its tokens. Texts sharing vocabulary land close in
    cosine terms, which is enough for structural tests of window diversity.
    """

    def __init__(self, dim: int = 64, salt: str = "podforge"):
        self.dim = dim
        self.salt = salt
        self.embedder_id = f"hash-projection/{dim}"

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        from ..eval.text import tokenize

        out = np.zeros((len(texts), self.dim))
        for row, text in enumerate(texts):
            toks = tokenize(text).tokens
            if not toks:
                raise EmbeddingProviderError("cannot embed empty text")
            for tok in toks:
                out[row] += _token_vector(tok, self.dim, self.salt)
        return out


class SentenceTransformerEmbedder:
    """BERT-family sentence embeddings through ``sentence-transformers``.

    Requires the model weights to be available locally or downloadable.
    """

    def __init__(self, model_name: str = "bert-base-nli-mean-tokens"):
        self.model_name = model_name
        self.embedder_id = f"sentence-transformers/{model_name}"
        self._model = None

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        try:
            if self._model is None:
                from sentence_transformers import SentenceTransformer

                self._model = SentenceTransformer(self.model_name)
            return np.asarray(self._model.encode(list(texts)), dtype=np.float64)
        except Exception as exc:  # model download / runtime failures
            raise EmbeddingProviderError(f"{self.model_name}: {exc}") from exc
