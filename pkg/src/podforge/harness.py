"""Experiment harness: system-vs-baseline comparison and the ablation grid."""

from __future__ import annotations

import copy
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from .config import RunConfig
from .errors import PodforgeError
from .eval.judge import DIMENSIONS, JudgeVerdict, judge_pair
from .eval.metrics import METRIC_NAMES, MetricConfig, MetricReport, compute_report, diff_score, mean_report
from .pipeline import METRICS_FILE, SCRIPT_FILE, Pipeline, metric_config, script_text
from .script_engine import Category, ConversationScript, Topic

log = logging.getLogger(__name__)

METRIC_LABELS = {
    "distinct_1": "Distinct_1",
    "distinct_2": "Distinct_2",
    "info_dens": "Info-Dens",
    "semantic_div": "Semantic-Div",
    "mattr": "MATTR",
}
JUDGE_LABELS = {
    "coherence": "Coherence",
    "engagingness": "Engagingness",
    "diversity": "Diversity",
    "informativeness": "Informativeness",
    "speaker_diversity": "Speaker-diversity",
    "overall": "Overall",
}


# -- ablation ----------------------------------------------------------------


@dataclass(frozen=True)
class AblationCell:
    label: str
    n_guests: int
    use_outline: bool
    mode: str


ABLATION_GRID = tuple(
    [AblationCell(f"#Guest = {n}", n, True, "multi_agent") for n in range(1, 6)]
    + [
        AblationCell("#Guest = 2 (w/o outline)", 2, False, "multi_agent"),
        AblationCell("#Guest = 2 (Single Agent)", 2, True, "single_agent"),
    ]
)


@dataclass
class AblationRow:
    cell: AblationCell
    metrics: dict[str, float | None]
    n_ok: int
    failures: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "label": self.cell.label,
            "n_guests": self.cell.n_guests,
            "use_outline": self.cell.use_outline,
            "mode": self.cell.mode,
            "metrics": self.metrics,
            "n_ok": self.n_ok,
            "failures": self.failures,
        }


def run_ablation(
    topics: Sequence[Topic],
    base: RunConfig,
    runs_root: str | Path,
    make_pipeline: Callable[[RunConfig], Pipeline] = Pipeline,
    grid: Sequence[AblationCell] = ABLATION_GRID,
) -> list[AblationRow]:
    """Script stage plus metrics for every (cell, topic); a failing cell is recorded, not fatal."""
    rows = []
    for cell in grid:
        cfg = copy.deepcopy(base)
        cfg.n_guests, cfg.use_outline, cfg.mode = cell.n_guests, cell.use_outline, cell.mode
        pipe = make_pipeline(cfg)
        root = Path(runs_root) / "ablation"

        def one(topic: Topic) -> MetricReport:
            run = pipe.run_script(root, topic)
            script = pipe.stage_script(run, topic)
            return pipe.stage_metrics(run, script)

        reports, failures = [], []
        with ThreadPoolExecutor(max_workers=max(1, cfg.parallelism)) as pool:
            futures = [(t, pool.submit(one, t)) for t in topics]
            for topic, fut in futures:
                try:
                    reports.append(fut.result())
                except PodforgeError as exc:
                    log.error("ablation %s / %s failed: %s", cell.label, topic.id, exc)
                    failures.append({"topic": topic.id, "error": str(exc)})
        metrics = mean_report(reports).values() if reports else {k: None for k in METRIC_NAMES}
        rows.append(AblationRow(cell, metrics, len(reports), failures))
    return rows


def format_ablation_table(rows: Sequence[AblationRow]) -> str:
    width = max(len(r.cell.label) for r in rows) + 2
    head = "Methods".ljust(width) + "".join(METRIC_LABELS[m].rjust(14) for m in METRIC_NAMES)
    out = [head, "-" * len(head)]
    for r in rows:
        cells = "".join(("n/a" if r.metrics[m] is None else f"{r.metrics[m]:.4f}").rjust(14) for m in METRIC_NAMES)
        out.append(r.cell.label.ljust(width) + cells)
    return "\n".join(out)


# -- system vs baseline --------------------------------------------------------


@dataclass
class RunRecord:
    path: Path
    topic: Topic
    script: ConversationScript
    report: MetricReport


def discover_runs(root: str | Path) -> list[Path]:
    root = Path(root)
    if (root / SCRIPT_FILE).is_file():
        return [root]
    return sorted(p.parent for p in root.rglob(SCRIPT_FILE))


def load_run(path: Path, embedder, mconfig: MetricConfig, recompute: bool = False) -> RunRecord:
    script = ConversationScript.from_dict(json.loads((path / SCRIPT_FILE).read_text("utf-8")))
    metrics_path = path / METRICS_FILE
    if metrics_path.is_file() and not recompute:
        report = MetricReport.from_dict(json.loads(metrics_path.read_text("utf-8"))["report"])
    else:
        report = compute_report(script_text(script), embedder, mconfig)
    return RunRecord(path, script.topic, script, report)


@dataclass
class PairResult:
    topic: Topic
    ours: RunRecord
    baseline: RunRecord
    delta: dict[str, float]
    verdict: JudgeVerdict | None

    def to_dict(self) -> dict:
        return {
            "topic": self.topic.to_dict(),
            "ours_run": str(self.ours.path),
            "baseline_run": str(self.baseline.path),
            "ours": self.ours.report.to_dict(),
            "baseline": self.baseline.report.to_dict(),
            "delta": self.delta,
            "judge": self.verdict.to_dict() if self.verdict else None,
        }


def compare(
    ours_dir: str | Path,
    baseline_dir: str | Path,
    cfg: RunConfig,
    embedder,
    judge=None,
    *,
    recompute: bool = False,
    retry=None,
) -> dict:
    """Pair runs by topic id, difference their metrics and (optionally) judge each pair."""
    mconfig = metric_config(cfg, embedder)
    ours = {r.topic.id: r for r in (load_run(p, embedder, mconfig, recompute) for p in discover_runs(ours_dir))}
    base = {r.topic.id: r for r in (load_run(p, embedder, mconfig, recompute) for p in discover_runs(baseline_dir))}
    shared = sorted(ours.keys() & base.keys())
    if not shared:
        raise PodforgeError("no topic appears in both run sets")
    for tid in sorted(ours.keys() ^ base.keys()):
        log.warning("topic %s has runs on one side only; skipped", tid)

    deltas = {tid: diff_score(ours[tid].report, base[tid].report) for tid in shared}
    verdicts: dict[str, JudgeVerdict | None] = dict.fromkeys(shared)
    if judge is not None:
        # pairs in parallel; each pair's two calls stay sequential inside judge_pair
        with ThreadPoolExecutor(max_workers=max(1, cfg.parallelism)) as pool:
            futures = {tid: pool.submit(judge_pair, ours[tid].script, base[tid].script, judge,
                                        retry=retry, seed=cfg.seed, templates_dir=cfg.templates_dir)
                       for tid in shared}
            verdicts = {tid: f.result() for tid, f in futures.items()}
    pairs = [PairResult(ours[t].topic, ours[t], base[t], deltas[t], verdicts[t]) for t in shared]

    by_cat: dict[str, dict[str, float]] = {}
    groups: dict[str, list[PairResult]] = {}
    for p in pairs:
        groups.setdefault(p.topic.category.value, []).append(p)
    groups["All"] = pairs
    for cat, group in groups.items():
        row = {m: sum(p.delta[m] for p in group) / len(group) for m in METRIC_NAMES}
        judged = [p.verdict for p in group if p.verdict is not None]
        if judged:
            row.update({d: sum(v.scores[d] for v in judged) / len(judged) for d in DIMENSIONS})
        row["n_pairs"] = len(group)
        by_cat[cat] = row

    report = {
        "metric_config": asdict(pairs[0].ours.report.config),
        "pairs": [p.to_dict() for p in pairs],
        "by_category": by_cat,
    }
    report["table"] = format_comparison_table(by_cat, judged=judge is not None)
    return report


def format_comparison_table(by_cat: dict[str, dict[str, float]], judged: bool) -> str:
    order = [c.value for c in Category if c.value in by_cat] + ["All"]
    width = 20
    head = "Metric".ljust(width) + "".join(c.rjust(16) for c in order)
    lines = [head, "-" * len(head), "Quantitative (ours - baseline)"]
    for m in METRIC_NAMES:
        lines.append(METRIC_LABELS[m].ljust(width) + "".join(f"{by_cat[c][m]:+.4f}".rjust(16) for c in order))
    if judged:
        lines.append("LLM-as-a-Judge (-3..3)")
        for d in DIMENSIONS:
            lines.append(JUDGE_LABELS[d].ljust(width) + "".join(
                (f"{by_cat[c][d]:+.4f}" if d in by_cat[c] else "n/a").rjust(16) for c in order))
    return "\n".join(lines)
