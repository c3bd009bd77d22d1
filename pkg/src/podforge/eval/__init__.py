"""Reference-free dialogue metrics and pairwise LLM judging."""

from ._backend import BACKEND
from .judge import DIMENSIONS, JudgeVerdict, judge_pair
from .metrics import (
    METRIC_NAMES,
    MetricConfig,
    MetricReport,
    compute_report,
    diff_score,
    distinct_n,
    info_density,
    mattr,
    semantic_div,
)
from .text import TokenSequence, WindowSeries, make_windows, tokenize

__all__ = [
    "BACKEND", "DIMENSIONS", "JudgeVerdict", "judge_pair", "METRIC_NAMES", "MetricConfig", "MetricReport",
    "compute_report", "diff_score", "distinct_n", "info_density", "mattr", "semantic_div",
    "TokenSequence", "WindowSeries", "make_windows", "tokenize",
]
