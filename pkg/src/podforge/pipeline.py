"""Resumable end-to-end runs persisted to a run directory.

Each stage writes one artifact. A stage whose artifact already exists is
loaded instead of recomputed, and existing files are never rewritten, so
deleting a later artifact and re-running redoes only that stage.
"""

from __future__ import annotations

import json
import logging
import os
import re
import tempfile
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from .audio_plan import AudioScript, ItemKind, enrich_to_audio_script
from .config import RunConfig
from .errors import ConfigError, StageError
from .eval.metrics import MetricConfig, MetricReport, compute_report
from .factory import make_embedder, make_llm, make_retry, make_tta, make_tts
from .mixer import Timeline, layout, render
from .script_engine import (
    ConversationScript,
    EngineConfig,
    Topic,
    direct_baseline_script,
    run_episode,
    single_agent_script,
)
from .synthesis import AudioClip, read_wav, synthesize_audio, synthesize_speech, write_wav
from .voice_pool import RoleVoiceAssignment, VoiceLibrary, load_library, match_voices

log = logging.getLogger(__name__)

CONFIG_FILE = "config.json"
SCRIPT_FILE = "conversation_script.json"
ASSIGNMENT_FILE = "assignment.json"
AUDIO_SCRIPT_FILE = "audio_script.json"
TIMELINE_FILE = "timeline.json"
FINAL_FILE = "final.wav"
METRICS_FILE = "metrics.json"
LOG_FILE = "run.log"
CLIPS_DIR = "clips"


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "-", text).strip("-") or "run"


def script_text(script: ConversationScript) -> str:
    """Metric input: line texts in order, speaker names left out."""
    return " ".join(line.text for line in script.lines)


def metric_config(cfg: RunConfig, embedder) -> MetricConfig:
    return MetricConfig(
        window_size=cfg.window_size,
        stride=cfg.stride,
        stopwords_id=cfg.stopwords_id,
        embedder_id=embedder.embedder_id,
        info_dens_mode=cfg.info_dens_mode,
    )


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


@dataclass
class RunDir:
    path: Path
    config_hash: str
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @classmethod
    def open(cls, runs_root: str | Path, topic: Topic, cfg: RunConfig, run_id: str | None = None) -> "RunDir":
        h = cfg.snapshot_hash()
        run_id = run_id or f"{_slug(topic.id)}-{cfg.mode}-{h[:10]}"
        path = Path(runs_root) / run_id
        path.mkdir(parents=True, exist_ok=True)
        run = cls(path, h)
        cfg_path = path / CONFIG_FILE
        if cfg_path.exists():
            existing = json.loads(cfg_path.read_text("utf-8"))
            if existing.get("config_hash") != h:
                raise ConfigError(f"{path} was created with a different configuration")
        else:
            doc = {"run_id": run_id, "config_hash": h, "topic": topic.to_dict(), "config": cfg.snapshot()}
            run.write_once(CONFIG_FILE, json.dumps(doc, indent=2, ensure_ascii=False) + "\n")
        return run

    def file(self, name: str) -> Path:
        return self.path / name

    def has(self, name: str) -> bool:
        return self.file(name).exists()

    def write_once(self, name: str, content: str | bytes) -> bool:
        """Write ``name`` unless it exists; returns whether it was written."""
        target = self.file(name)
        if target.exists():
            return False
        target.parent.mkdir(parents=True, exist_ok=True)
        _atomic_write(target, content.encode("utf-8") if isinstance(content, str) else content)
        return True

    def read_json(self, name: str) -> Any:
        return json.loads(self.file(name).read_text("utf-8"))

    def log(self, stage: str, message: str) -> None:
        stamp = time.strftime("%Y-%m-%dT%H:%M:%S")
        with self._lock, open(self.file(LOG_FILE), "a", encoding="utf-8") as fh:
            fh.write(f"{stamp} [{stage}] {message}\n")

    def stage(self, name: str, fn: Callable[[], Any]) -> Any:
        try:
            return fn()
        except StageError:
            raise
        except Exception as exc:
            self.log(name, f"FAILED {type(exc).__name__}: {exc}")
            raise StageError(name, exc) from exc


def _with_hash(doc: dict, h: str) -> str:
    return json.dumps({**doc, "config_hash": h}, indent=2, ensure_ascii=False) + "\n"


class Pipeline:
    """Stage runner; providers default to those named in the config."""

    def __init__(self, cfg: RunConfig, *, llm=None, tts=None, tta=None, embedder=None):
        self.cfg = cfg
        self._llm, self._tts, self._tta, self._embedder = llm, tts, tta, embedder
        self.retry = make_retry(cfg)
        self._library: VoiceLibrary | None = None

    @property
    def llm(self):
        if self._llm is None:
            self._llm = make_llm(self.cfg)
        return self._llm

    @property
    def tts(self):
        if self._tts is None:
            self._tts = make_tts(self.cfg)
        return self._tts

    @property
    def tta(self):
        if self._tta is None:
            self._tta = make_tta(self.cfg)
        return self._tta

    @property
    def embedder(self):
        if self._embedder is None:
            self._embedder = make_embedder(self.cfg)
        return self._embedder

    @property
    def library(self) -> VoiceLibrary:
        if self._library is None:
            if not self.cfg.voice_library:
                raise ConfigError("voice_library is required for audio generation")
            self._library = load_library(self.cfg.voice_library)
        return self._library

    def engine_config(self) -> EngineConfig:
        c = self.cfg
        return EngineConfig(
            n_questions=c.n_questions, host_name=c.host_name, min_lines=c.min_lines,
            temperature=c.temperature, seed=c.seed, retry=self.retry, templates_dir=c.templates_dir,
        )

    # -- stages ---------------------------------------------------------------

    def stage_script(self, run: RunDir, topic: Topic) -> ConversationScript:
        if run.has(SCRIPT_FILE):
            return ConversationScript.from_dict(run.read_json(SCRIPT_FILE))

        def go() -> ConversationScript:
            c, ec = self.cfg, self.engine_config()
            if c.mode == "multi_agent":
                return run_episode(topic, c.n_guests, c.use_outline, self.llm, ec)
            if c.mode == "single_agent":
                return single_agent_script(topic, c.n_guests, self.llm, ec)
            return direct_baseline_script(topic, c.n_guests, self.llm, ec)

        script = run.stage("script", go)
        run.write_once(SCRIPT_FILE, _with_hash(script.to_dict(), run.config_hash))
        run.log("script", f"{len(script.lines)} lines, provenance {script.provenance.value}")
        return script

    def stage_assignment(self, run: RunDir, script: ConversationScript) -> RoleVoiceAssignment:
        if run.has(ASSIGNMENT_FILE):
            return RoleVoiceAssignment(dict(run.read_json(ASSIGNMENT_FILE)["assignment"]))
        c = self.cfg
        assignment = run.stage("voice_match", lambda: match_voices(
            self.library, script.guests, c.host_descriptor, script.outline, self.llm,
            host_name=script.host_name, topic=script.topic.text, retry=self.retry,
            temperature=c.temperature, seed=c.seed, templates_dir=c.templates_dir,
        ))
        run.write_once(ASSIGNMENT_FILE, _with_hash({"assignment": assignment.to_dict()}, run.config_hash))
        run.log("voice_match", json.dumps(assignment.to_dict()))
        return assignment

    def stage_audio_script(self, run: RunDir, script: ConversationScript, assignment) -> AudioScript:
        if run.has(AUDIO_SCRIPT_FILE):
            return AudioScript.from_dict(run.read_json(AUDIO_SCRIPT_FILE))
        c = self.cfg
        audio_script = run.stage("audio_script", lambda: enrich_to_audio_script(
            script, assignment, self.llm, retry=self.retry, temperature=c.temperature, seed=c.seed,
            templates_dir=c.templates_dir,
        ))
        run.write_once(AUDIO_SCRIPT_FILE, _with_hash(audio_script.to_dict(), run.config_hash))
        return audio_script

    def _clip(self, run: RunDir, idx: int, make: Callable[[], AudioClip]) -> AudioClip:
        name = f"{CLIPS_DIR}/item_{idx:04d}.wav"
        if not run.has(name):
            clip = make()
            (run.path / CLIPS_DIR).mkdir(exist_ok=True)
            tmp = run.file(name + ".part")
            write_wav(tmp, clip)
            if not run.has(name):
                os.replace(tmp, run.file(name))
            else:
                tmp.unlink()
        # always use the on-disk PCM so fresh and resumed runs mix identical samples
        return read_wav(run.file(name), idx)

    def stage_synthesis(self, run: RunDir, audio_script: AudioScript) -> dict[int, AudioClip]:
        c = self.cfg
        items = audio_script.items

        def speech(idx: int) -> AudioClip:
            item = items[idx]
            voice = self.library.get(audio_script.assignment[item.speaker])
            instruction = item.style_instruction if c.use_instruction else None
            return self._clip(run, idx, lambda: synthesize_speech(
                item.text_or_description, voice, instruction, self.tts,
                sample_rate=c.sample_rate, item_index=idx, retry=self.retry,
            ))

        def go() -> dict[int, AudioClip]:
            with ThreadPoolExecutor(max_workers=max(1, c.parallelism)) as pool:
                speech_idx = audio_script.speech_indices()
                clips = dict(zip(speech_idx, pool.map(speech, speech_idx)))
                lengths = [len(clips[i]) for i in speech_idx]
                gap = round(c.gap_ms * c.sample_rate / 1000)
                starts, pos = [], 0
                for n in lengths:
                    starts.append(pos)
                    pos += n + gap

                def background(idx: int) -> AudioClip:
                    item = items[idx]
                    first, last = item.span
                    dur = (starts[last] + lengths[last] - starts[first]) / c.sample_rate
                    kind = "Music" if item.kind is ItemKind.MUSIC else "SoundEffect"
                    return self._clip(run, idx, lambda: synthesize_audio(
                        item.text_or_description, dur, kind, self.tta,
                        sample_rate=c.sample_rate, item_index=idx, retry=self.retry,
                    ))

                bg_idx = audio_script.background_indices()
                clips.update(zip(bg_idx, pool.map(background, bg_idx)))
            return clips

        clips = run.stage("synthesis", go)
        run.log("synthesis", f"{len(clips)} clips")
        return clips

    def stage_mix(self, run: RunDir, audio_script: AudioScript, clips: dict[int, AudioClip]) -> Timeline:
        if run.has(TIMELINE_FILE):
            timeline = Timeline.from_dict(run.read_json(TIMELINE_FILE))
        else:
            timeline = run.stage("mix", lambda: layout(audio_script, clips, self.cfg.gap_ms, self.cfg.sample_rate))
            run.write_once(TIMELINE_FILE, timeline.to_json())
        if not run.has(FINAL_FILE):
            program = run.stage("mix", lambda: render(timeline, clips))
            tmp = run.file(FINAL_FILE + ".part")
            write_wav(tmp, program)
            os.replace(tmp, run.file(FINAL_FILE))
            run.log("mix", f"{timeline.total_samples} samples, limited={program.metadata.get('limited')}")
        return timeline

    def stage_metrics(self, run: RunDir, script: ConversationScript) -> MetricReport:
        if run.has(METRICS_FILE):
            return MetricReport.from_dict(run.read_json(METRICS_FILE)["report"])
        report = run.stage("metrics", lambda: compute_report(
            script_text(script), self.embedder, metric_config(self.cfg, self.embedder)
        ))
        run.write_once(METRICS_FILE, _with_hash({"report": report.to_dict()}, run.config_hash))
        return report

    # -- entry points -----------------------------------------------------------

    def run_script(self, runs_root: str | Path, topic: Topic, run_id: str | None = None) -> RunDir:
        run = RunDir.open(runs_root, topic, self.cfg, run_id)
        self.stage_script(run, topic)
        return run

    def run_generate(self, runs_root: str | Path, topic: Topic, run_id: str | None = None) -> RunDir:
        run = RunDir.open(runs_root, topic, self.cfg, run_id)
        script = self.stage_script(run, topic)
        assignment = self.stage_assignment(run, script)
        audio_script = self.stage_audio_script(run, script, assignment)
        clips = self.stage_synthesis(run, audio_script)
        self.stage_mix(run, audio_script, clips)
        self.stage_metrics(run, script)
        run.log("done", "all stages complete")
        return run
