"""Reference-free text metrics over sliding windows.

All functions are pure: identical input and configuration give bit-identical
results. Counting loops run in the kernel backend picked by ``_backend``.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Iterable, Protocol, Sequence

import numpy as np

from ..errors import (
    AllStopwordsError,
    ConfigMismatchError,
    DegenerateWindowError,
    EmbeddingProviderError,
    PreconditionError,
)
from . import _backend
from .text import (
    DEFAULT_STOPWORDS_ID,
    DEFAULT_STRIDE,
    DEFAULT_WINDOW,
    TOKENIZER_ID,
    TokenSequence,
    WindowSeries,
    as_tokens,
    load_stopwords,
    make_windows,
    tokenize,
)

log = logging.getLogger(__name__)

METRIC_NAMES = ("distinct_1", "distinct_2", "info_dens", "semantic_div", "mattr")


class EmbeddingProvider(Protocol):
    embedder_id: str

    def embed(self, texts: Sequence[str]) -> np.ndarray: ...


def _kernels(backend: str | None):
    return _backend.kernels if backend is None else _backend.get(backend)


def _encode(items: Iterable) -> tuple[list[int], dict]:
    index: dict = {}
    codes = [index.setdefault(it, len(index)) for it in items]
    return codes, index


def _windows_for(tokens, windows: WindowSeries | None) -> WindowSeries:
    if windows is None:
        return make_windows(tokens)
    if windows.n_tokens != len(as_tokens(tokens)):
        raise PreconditionError("window series was built for a different token sequence")
    return windows


def _ratio_mean(toks: tuple[str, ...], n: int, ws: WindowSeries, backend: str | None) -> float:
    span = ws.span - n + 1
    if span < 1:
        raise DegenerateWindowError(f"window of {ws.span} tokens is shorter than n={n}")
    grams = toks if n == 1 else zip(*(toks[k:] for k in range(n)))
    codes, index = _encode(grams)
    total = _kernels(backend).distinct_sum(codes, len(index), span, ws.stride, ws.count)
    return total / ws.count


def distinct_n(
    tokens: TokenSequence | Sequence[str],
    n: int,
    windows: WindowSeries | None = None,
    *,
    backend: str | None = None,
) -> float:
    """Mean over windows of unique n-grams / total n-grams."""
    if n < 1:
        raise PreconditionError("n must be >= 1")
    toks = as_tokens(tokens)
    return _ratio_mean(toks, n, _windows_for(toks, windows), backend)


def mattr(
    tokens: TokenSequence | Sequence[str],
    windows: WindowSeries | None = None,
    *,
    backend: str | None = None,
) -> float:
    """Moving-average type-token ratio.

    Shares the unigram path with ``distinct_n(tokens, 1)`` so the two agree
    bit-for-bit under the same windows.
    """
    toks = as_tokens(tokens)
    return _ratio_mean(toks, 1, _windows_for(toks, windows), backend)


def info_density(
    tokens: TokenSequence | Sequence[str],
    stopwords: Iterable[str] | None = None,
    windows: WindowSeries | None = None,
    *,
    full_text: bool = False,
    backend: str | None = None,
) -> float:
    """Mean per-window Shannon entropy (bits) of the stopword-filtered tokens.

    Windows with no content token are skipped with a warning. With
    ``full_text=True`` the whole sequence is treated as one window.
    """
    toks = as_tokens(tokens)
    stop = load_stopwords() if stopwords is None else frozenset(stopwords)
    if full_text:
        ws = WindowSeries(len(toks), 1, len(toks), (0,), len(toks))
    else:
        ws = _windows_for(toks, windows)
    codes, index = _encode(toks)
    is_stop = np.zeros(max(len(index), 1), dtype=np.uint8)
    for tok, code in index.items():
        if tok in stop:
            is_stop[code] = 1
    total, valid = _kernels(backend).entropy_sum(codes, is_stop, len(index), ws.span, ws.stride, ws.count)
    if valid == 0:
        raise AllStopwordsError("every window consists solely of stopwords")
    if valid < ws.count:
        log.warning("info_density: skipped %d of %d all-stopword windows", ws.count - valid, ws.count)
    return total / valid


def semantic_windows(tokens: TokenSequence | Sequence[str], window_size: int = DEFAULT_WINDOW) -> list[tuple[str, ...]]:
    """Consecutive non-overlapping windows; a tail of at least half a window is kept."""
    if window_size < 1:
        raise PreconditionError("window_size must be >= 1")
    toks = as_tokens(tokens)
    out = [toks[i:i + window_size] for i in range(0, len(toks), window_size)]
    if out and 2 * len(out[-1]) < window_size:
        out.pop()
    return out


def mean_pairwise_cosine_distance(vectors: np.ndarray) -> float:
    vecs = np.asarray(vectors, dtype=np.float64)
    if vecs.ndim != 2 or len(vecs) < 2:
        raise PreconditionError("need at least two embedding vectors")
    if not np.all(np.isfinite(vecs)):
        raise EmbeddingProviderError("embedding contains non-finite components")
    norms = np.linalg.norm(vecs, axis=1)
    if np.any(norms == 0):
        raise EmbeddingProviderError("zero-norm embedding; cosine undefined")
    unit = vecs / norms[:, None]
    gram = np.clip(unit @ unit.T, -1.0, 1.0)
    iu = np.triu_indices(len(vecs), k=1)
    return float(np.mean(1.0 - gram[iu]))


def semantic_div_detail(
    text: str | TokenSequence | Sequence[str],
    embedder: EmbeddingProvider,
    window_size: int = DEFAULT_WINDOW,
) -> tuple[float, bool]:
    """Return ``(score, degenerate)``; degenerate texts (< 2 windows) score 0."""
    toks = tokenize(text).tokens if isinstance(text, str) else as_tokens(text)
    wins = semantic_windows(toks, window_size)
    if len(wins) < 2:
        log.warning("semantic_div: %d window(s); returning 0", len(wins))
        return 0.0, True
    vecs = np.asarray(embedder.embed([" ".join(w) for w in wins]), dtype=np.float64)
    if vecs.shape[0] != len(wins):
        raise EmbeddingProviderError(f"expected {len(wins)} embeddings, got {vecs.shape[0]}")
    return mean_pairwise_cosine_distance(vecs), False


def semantic_div(
    text: str | TokenSequence | Sequence[str],
    embedder: EmbeddingProvider,
    window_size: int = DEFAULT_WINDOW,
) -> float:
    return semantic_div_detail(text, embedder, window_size)[0]


@dataclass(frozen=True)
class MetricConfig:
    window_size: int = DEFAULT_WINDOW
    stride: int = DEFAULT_STRIDE
    tokenizer_id: str = TOKENIZER_ID
    stopwords_id: str = DEFAULT_STOPWORDS_ID
    embedder_id: str = "hash-projection/64"
    info_dens_mode: str = "windowed"
    text_source: str = "line-text-concat/no-speakers"


@dataclass
class MetricReport:
    distinct_1: float
    distinct_2: float
    info_dens: float
    semantic_div: float
    mattr: float
    config: MetricConfig = field(default_factory=MetricConfig)
    semantic_degenerate: bool = False

    def values(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in METRIC_NAMES}

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "MetricReport":
        data = dict(data)
        data["config"] = MetricConfig(**data.get("config", {}))
        return cls(**data)


def compute_report(
    text: str,
    embedder: EmbeddingProvider,
    config: MetricConfig | None = None,
    *,
    backend: str | None = None,
) -> MetricReport:
    cfg = config or MetricConfig(embedder_id=embedder.embedder_id)
    if cfg.embedder_id != embedder.embedder_id:
        raise ConfigMismatchError(f"config names embedder {cfg.embedder_id!r}, got {embedder.embedder_id!r}")
    toks = tokenize(text).tokens
    ws = make_windows(toks, cfg.window_size, cfg.stride)
    sem, degenerate = semantic_div_detail(toks, embedder, cfg.window_size)
    return MetricReport(
        distinct_1=distinct_n(toks, 1, ws, backend=backend),
        distinct_2=distinct_n(toks, 2, ws, backend=backend),
        info_dens=info_density(
            toks, load_stopwords(cfg.stopwords_id), ws,
            full_text=cfg.info_dens_mode == "full_text", backend=backend,
        ),
        semantic_div=sem,
        mattr=mattr(toks, ws, backend=backend),
        config=cfg,
        semantic_degenerate=degenerate,
    )


def diff_score(ours: MetricReport, baseline: MetricReport) -> dict[str, float]:
    """Per-metric ``ours - baseline``; configs must match exactly."""
    if ours.config != baseline.config:
        raise ConfigMismatchError(f"metric configs differ: {ours.config} vs {baseline.config}")
    return {k: getattr(ours, k) - getattr(baseline, k) for k in METRIC_NAMES}


def mean_report(reports: Sequence[MetricReport]) -> MetricReport:
    """Average several reports sharing one config."""
    if not reports:
        raise PreconditionError("no reports to average")
    cfg = reports[0].config
    for r in reports[1:]:
        if r.config != cfg:
            raise ConfigMismatchError("cannot average reports with different configs")
    vals = {k: float(np.mean([getattr(r, k) for r in reports])) for k in METRIC_NAMES}
    return MetricReport(**vals, config=cfg, semantic_degenerate=any(r.semantic_degenerate for r in reports))


__all__ = [
    "METRIC_NAMES", "MetricConfig", "MetricReport", "compute_report", "diff_score",
    "distinct_n", "info_density", "mattr", "mean_pairwise_cosine_distance", "mean_report",
    "semantic_div", "semantic_div_detail", "semantic_windows",
]
