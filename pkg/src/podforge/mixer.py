"""Sample-accurate assembly of speech and background clips into one program."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from typing import Mapping, Sequence

import numpy as np

from .audio_plan import AudioScript
from .errors import MissingClipError, PreconditionError, RateMismatchError
from .synthesis import AudioClip

log = logging.getLogger(__name__)

DEFAULT_GAP_MS = 300
CROSSFADE_MS = 10


@dataclass(frozen=True)
class Placement:
    clip_ref: int
    start_sample: int
    length: int
    gain_db: float = 0.0
    foreground: bool = True


@dataclass(frozen=True)
class Timeline:
    placements: tuple[Placement, ...]
    total_samples: int
    sample_rate_hz: int

    def validate(self) -> "Timeline":
        ends = [p.start_sample + p.length for p in self.placements]
        if any(p.start_sample < 0 or p.length < 0 for p in self.placements):
            raise PreconditionError("placements must have non-negative start and length")
        if self.total_samples != max(ends, default=0):
            raise PreconditionError("total_samples must equal the furthest placement end")
        prev_end = 0
        for p in self.placements:
            if p.foreground:
                if p.start_sample < prev_end:
                    raise PreconditionError("foreground placements overlap or are out of order")
                prev_end = p.start_sample + p.length
        return self

    def to_dict(self) -> dict:
        return {
            "sample_rate_hz": self.sample_rate_hz,
            "total_samples": self.total_samples,
            "placements": [asdict(p) for p in self.placements],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "Timeline":
        return cls(tuple(Placement(**p) for p in d["placements"]), d["total_samples"], d["sample_rate_hz"])


def db_to_gain(db: float) -> float:
    return 10.0 ** (db / 20.0)


def fit_length(x: np.ndarray, length: int, crossfade: int) -> np.ndarray:
    """Truncate, or loop with a linear crossfade at each seam, to exactly ``length`` samples."""
    x = np.asarray(x, dtype=np.float64)
    if length <= x.size:
        return x[:length].copy()
    cf = max(0, min(crossfade, x.size // 2))
    out = x.copy()
    fade_in = np.linspace(0.0, 1.0, cf + 2)[1:-1] if cf else np.empty(0)
    while out.size < length:
        if cf:
            seam = out[-cf:] * (1.0 - fade_in) + x[:cf] * fade_in
            out = np.concatenate([out[:-cf], seam, x[cf:]])
        else:
            out = np.concatenate([out, x])
    return out[:length]


def layout(
    audio_script: AudioScript,
    clips: Mapping[int, AudioClip],
    gap_ms: int = DEFAULT_GAP_MS,
    sample_rate: int | None = None,
) -> Timeline:
    """Speech back to back with ``gap_ms`` silence between lines; background items span their lines exactly."""
    rates = {c.sample_rate_hz for c in clips.values()}
    if sample_rate is not None:
        rates.add(sample_rate)
    if len(rates) > 1:
        raise RateMismatchError(f"clips at mixed sample rates {sorted(rates)}")
    if not rates:
        raise MissingClipError("no clips to lay out")
    rate = rates.pop()
    gap = round(gap_ms * rate / 1000)

    placements: list[Placement] = []
    line_bounds: list[tuple[int, int]] = []
    cursor = 0
    for idx in audio_script.speech_indices():
        if idx not in clips:
            raise MissingClipError(f"no clip for speech item {idx}")
        if line_bounds:
            cursor += gap
        n = len(clips[idx])
        placements.append(Placement(idx, cursor, n, audio_script.items[idx].gain_db, True))
        line_bounds.append((cursor, cursor + n))
        cursor += n

    for idx in audio_script.background_indices():
        item = audio_script.items[idx]
        if idx not in clips:
            log.warning("no clip for background item %d (%s); skipped", idx, item.text_or_description)
            continue
        first, last = item.span
        start, end = line_bounds[first][0], line_bounds[last][1]
        placements.append(Placement(idx, start, end - start, item.gain_db, False))

    total = max((p.start_sample + p.length for p in placements), default=0)
    return Timeline(tuple(placements), total, rate).validate()


def render(timeline: Timeline, clips: Mapping[int, AudioClip]) -> AudioClip:
    """Sum gain-scaled placements; apply a tanh soft clip only if the sum overflows."""
    timeline.validate()
    rate = timeline.sample_rate_hz
    crossfade = round(CROSSFADE_MS * rate / 1000)
    out = np.zeros(timeline.total_samples)
    for p in timeline.placements:
        clip = clips.get(p.clip_ref)
        if clip is None:
            raise MissingClipError(f"no clip for placement {p.clip_ref}")
        if clip.sample_rate_hz != rate:
            raise RateMismatchError(f"clip {p.clip_ref} at {clip.sample_rate_hz} Hz, timeline at {rate} Hz")
        seg = fit_length(clip.samples, p.length, crossfade)
        if p.gain_db != 0.0:
            seg = seg * db_to_gain(p.gain_db)
        out[p.start_sample:p.start_sample + p.length] += seg
    limited = bool(np.any(np.abs(out) > 1.0))
    if limited:
        log.warning("mix overflows full scale (peak %.3f); soft-clipping", float(np.max(np.abs(out))))
        out = np.tanh(out)
    return AudioClip(out, rate, -1, {"limited": limited})


def foreground_duration_law(durations: Sequence[int], gap_samples: int) -> int:
    """Expected program length in samples for the given speech clip lengths."""
    return sum(durations) + max(len(durations) - 1, 0) * gap_samples


__all__ = [
    "DEFAULT_GAP_MS", "Placement", "Timeline", "db_to_gain", "fit_length", "foreground_duration_law",
    "layout", "render",
]
