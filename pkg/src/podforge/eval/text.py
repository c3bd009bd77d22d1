"""Tokenization, sliding windows and stopword lists for the text metrics."""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Sequence

from ..errors import PreconditionError

TOKENIZER_ID = "nfc-lower-nopunct-ws/1"
DEFAULT_STOPWORDS_ID = "en/v1"
DEFAULT_WINDOW = 100
DEFAULT_STRIDE = 1

_STOPWORD_FILES = {"en/v1": "stopwords_en_v1.txt"}


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple[str, ...]
    source_text: str

    def __len__(self) -> int:
        return len(self.tokens)


def _strip_punct(text: str) -> str:
    return "".join(ch for ch in text if not unicodedata.category(ch).startswith("P"))


def tokenize(text: str) -> TokenSequence:
    """Lowercase, NFC-normalize, strip punctuation and split on whitespace.

    >>> tokenize("Hello, World!").tokens
    ('hello', 'world')
    """
    norm = unicodedata.normalize("NFC", text).lower()
    return TokenSequence(tuple(_strip_punct(norm).split()), text)


def as_tokens(tokens: TokenSequence | Sequence[str]) -> tuple[str, ...]:
    if isinstance(tokens, TokenSequence):
        return tokens.tokens
    return tuple(tokens)


@dataclass(frozen=True)
class WindowSeries:
    """Sliding windows over a token sequence.

    Texts no longer than ``window_size`` form a single window holding the whole
    sequence. Longer texts get every full-length slice starting at a multiple of
    ``stride``; a trailing remainder that does not fill a window is dropped.
    """

    window_size: int
    stride: int
    n_tokens: int
    offsets: tuple[int, ...] = field(repr=False)
    span: int

    @property
    def count(self) -> int:
        return len(self.offsets)

    def slices(self, tokens: Sequence[str]) -> list[tuple[str, ...]]:
        toks = as_tokens(tokens)
        return [tuple(toks[o:o + self.span]) for o in self.offsets]

    @property
    def config(self) -> tuple[int, int]:
        return (self.window_size, self.stride)


def make_windows(
    tokens: TokenSequence | Sequence[str],
    window_size: int = DEFAULT_WINDOW,
    stride: int = DEFAULT_STRIDE,
) -> WindowSeries:
    if window_size < 1 or stride < 1:
        raise PreconditionError("window_size and stride must be >= 1")
    n = len(as_tokens(tokens))
    if n <= window_size:
        return WindowSeries(window_size, stride, n, (0,), n)
    offsets = tuple(range(0, n - window_size + 1, stride))
    return WindowSeries(window_size, stride, n, offsets, window_size)


@lru_cache(maxsize=None)
def load_stopwords(list_id: str = DEFAULT_STOPWORDS_ID) -> frozenset[str]:
    """Load a shipped stopword list by id, or any text file by path."""
    if list_id in _STOPWORD_FILES:
        raw = resources.files("podforge.data").joinpath(_STOPWORD_FILES[list_id]).read_text("utf-8")
    else:
        raw = Path(list_id).read_text("utf-8")
    words: set[str] = set()
    for line in raw.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        words.update(tokenize(line).tokens)
    return frozenset(words)
