"""``podforge`` command line.

Exit codes: 0 success, 1 a pipeline stage failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from ..config import MODES, RunConfig, load_config
from ..errors import (
    ConfigError,
    ConfigMismatchError,
    FormatError,
    PodforgeError,
    PreconditionError,
    StageError,
)
from ..factory import make_embedder, make_llm, make_retry
from ..harness import compare, format_ablation_table, run_ablation
from ..pipeline import Pipeline
from ..topics import load_topics
from ..voice_pool import DEFAULT_THRESHOLD, build_voice_library, load_manifest, save_library

log = logging.getLogger("podforge")

EXIT_OK, EXIT_STAGE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--topics", required=True, help="topics file (line or JSON format)")
    p.add_argument("--config", help="YAML config file")
    p.add_argument("--mock", action="store_true", help="use canned LLM/TTS/TTA providers")
    p.add_argument("--runs-dir", default="runs", help="root for run directories (default: runs)")
    p.add_argument("--run-id", help="explicit run directory name (single topic only)")
    p.add_argument("--n-guests", type=int)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--no-outline", action="store_true", help="guests answer without an interview outline")
    p.add_argument("--seed", type=int)
    p.add_argument("--parallelism", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="podforge", description="Multi-agent podcast script and audio generation.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("script", help="generate conversation scripts only")
    _run_flags(p)

    p = sub.add_parser("generate", help="full pipeline: script, voices, audio plan, synthesis, mix")
    _run_flags(p)
    p.add_argument("--voice-library", help="voice library JSON")
    p.add_argument("--gap-ms", type=int)
    p.add_argument("--no-instruction", action="store_true", help="synthesize without style instructions")

    p = sub.add_parser("eval", help="compare two sets of runs")
    p.add_argument("--ours", required=True)
    p.add_argument("--baseline", required=True)
    p.add_argument("--out", required=True, help="report JSON path; a .txt table is written alongside")
    p.add_argument("--config")
    p.add_argument("--mock", action="store_true")
    p.add_argument("--judge", choices=("llm", "mock", "none"), default="llm")
    p.add_argument("--recompute", action="store_true", help="ignore stored metrics.json files")

    p = sub.add_parser("ablate", help="guest-count / outline / single-agent ablation grid")
    p.add_argument("--topics", required=True)
    p.add_argument("--config")
    p.add_argument("--mock", action="store_true")
    p.add_argument("--runs-dir", default="runs")
    p.add_argument("--out", help="report JSON path")
    p.add_argument("--seed", type=int)

    vp = sub.add_parser("voicepool", help="voice library tools")
    vsub = vp.add_subparsers(dest="voicepool_command", required=True)
    p = vsub.add_parser("build", help="deduplicate a captioned manifest into a library")
    p.add_argument("--in", dest="manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--config")
    p.add_argument("--embedder", choices=("hash", "bert", "http"), help="override the configured embedder")
    return parser


def _config(args: argparse.Namespace, **overrides) -> RunConfig:
    cfg = load_config(getattr(args, "config", None), **overrides)
    if getattr(args, "mock", False):
        cfg.use_mocks()
    return cfg


def _topics(path: str):
    if not Path(path).is_file():
        raise UsageError(f"topics file not found: {path}")
    topics = load_topics(path)
    if not topics:
        raise UsageError(f"no topics in {path}")
    return topics


def _run(args: argparse.Namespace, full: bool) -> int:
    topics = _topics(args.topics)
    overrides = dict(n_guests=args.n_guests, mode=args.mode, seed=args.seed, parallelism=args.parallelism)
    if args.no_outline:
        overrides["use_outline"] = False
    if full:
        overrides.update(voice_library=args.voice_library, gap_ms=args.gap_ms)
        if args.no_instruction:
            overrides["use_instruction"] = False
    cfg = _config(args, **overrides).validate(need_library=full)
    if args.run_id and len(topics) > 1:
        raise UsageError("--run-id needs a single-topic file")
    pipe = Pipeline(cfg)
    runner = pipe.run_generate if full else pipe.run_script

    def one(topic):
        run = runner(args.runs_dir, topic, args.run_id)
        print(f"{topic.id}\t{run.path}")
        return run

    failed = 0
    with ThreadPoolExecutor(max_workers=max(1, cfg.parallelism)) as pool:
        futures = [(t, pool.submit(one, t)) for t in topics]
        for topic, fut in futures:
            try:
                fut.result()
            except StageError as exc:
                failed += 1
                print(f"error: topic {topic.id}: {exc}", file=sys.stderr)
    return EXIT_STAGE if failed else EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    for d in (args.ours, args.baseline):
        if not Path(d).is_dir():
            raise UsageError(f"not a directory: {d}")
    cfg = _config(args)
    judge = None
    if args.judge == "mock":
        cfg.judge.backend = "mock"
    if args.judge != "none":
        judge = make_llm(cfg, "judge")
    try:
        report = compare(args.ours, args.baseline, cfg, make_embedder(cfg), judge,
                         recompute=args.recompute, retry=make_retry(cfg))
    except ConfigMismatchError:
        raise
    except PodforgeError as exc:
        raise StageError("eval", exc) from exc
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(report, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    out.with_suffix(".txt").write_text(report["table"] + "\n", encoding="utf-8")
    print(report["table"])
    return EXIT_OK


def cmd_ablate(args: argparse.Namespace) -> int:
    topics = _topics(args.topics)
    cfg = _config(args, seed=args.seed).validate()
    rows = run_ablation(topics, cfg, args.runs_dir)
    table = format_ablation_table(rows)
    print(table)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        doc = {"rows": [r.to_dict() for r in rows], "table": table}
        out.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
        out.with_suffix(".txt").write_text(table + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_voicepool_build(args: argparse.Namespace) -> int:
    if not Path(args.manifest).is_file():
        raise UsageError(f"manifest not found: {args.manifest}")
    cfg = load_config(args.config)
    if args.embedder:
        cfg.embedder.backend = args.embedder
    entries = load_manifest(args.manifest)
    try:
        lib = build_voice_library(entries, make_embedder(cfg), args.threshold)
    except PreconditionError as exc:
        raise UsageError(str(exc)) from exc
    except PodforgeError as exc:
        raise StageError("voicepool", exc) from exc
    save_library(lib, args.out)
    print(f"kept {len(lib)} of {len(entries)} voices -> {args.out}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "script":
            return _run(args, full=False)
        if args.command == "generate":
            return _run(args, full=True)
        if args.command == "eval":
            return cmd_eval(args)
        if args.command == "ablate":
            return cmd_ablate(args)
        return cmd_voicepool_build(args)
    except (UsageError, ConfigError, FormatError, ConfigMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
