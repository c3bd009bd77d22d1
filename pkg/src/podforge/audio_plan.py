"""Audio script: the conversation plus background sound effects and music."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from enum import Enum


from .errors import PreconditionError, SchemaError, ValidationError
from .providers.base import CompletionProvider, RetryPolicy
from .script_engine import ConversationScript
from .structured import ask_structured, extract_json
from .templates import load_template
from .voice_pool import RoleVoiceAssignment

log = logging.getLogger(__name__)

DEFAULT_BACKGROUND_GAIN_DB = -18.0
MIN_GAIN_DB = -40.0
MAX_GAIN_DB = 0.0


class ItemKind(str, Enum):
    SPEECH = "Speech"
    SOUND_EFFECT = "SoundEffect"
    MUSIC = "Music"


class Layer(str, Enum):
    FOREGROUND = "Foreground"
    BACKGROUND = "Background"


@dataclass(frozen=True)
class AudioItem:
    kind: ItemKind
    text_or_description: str
    layer: Layer
    speaker: str | None = None
    style_instruction: str | None = None
    span: tuple[int, int] | None = None
    gain_db: float = 0.0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "text_or_description": self.text_or_description,
            "layer": self.layer.value,
            "speaker": self.speaker,
            "style_instruction": self.style_instruction,
            "span": list(self.span) if self.span is not None else None,
            "gain_db": self.gain_db,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AudioItem":
        return cls(
            kind=ItemKind(d["kind"]),
            text_or_description=d["text_or_description"],
            layer=Layer(d["layer"]),
            speaker=d.get("speaker"),
            style_instruction=d.get("style_instruction"),
            span=tuple(d["span"]) if d.get("span") is not None else None,
            gain_db=float(d.get("gain_db", 0.0)),
        )


@dataclass(frozen=True)
class AudioScript:
    """Speech items come first, one per script line in order; background items follow."""

    script: ConversationScript
    items: tuple[AudioItem, ...]
    assignment: RoleVoiceAssignment

    def speech_indices(self) -> list[int]:
        return [i for i, it in enumerate(self.items) if it.kind is ItemKind.SPEECH]

    def background_indices(self) -> list[int]:
        return [i for i, it in enumerate(self.items) if it.layer is Layer.BACKGROUND]

    def to_dict(self) -> dict:
        return {
            "script": self.script.to_dict(),
            "items": [it.to_dict() for it in self.items],
            "assignment": self.assignment.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "AudioScript":
        return cls(
            script=ConversationScript.from_dict(d["script"]),
            items=tuple(AudioItem.from_dict(x) for x in d["items"]),
            assignment=RoleVoiceAssignment(dict(d["assignment"])),
        )


@dataclass(frozen=True)
class Violation:
    index: int
    rule: str
    message: str = ""


def validate_audio_script(audio_script: AudioScript) -> list[Violation]:
    """All invariant breaches; an empty list means the audio script is renderable."""
    out: list[Violation] = []
    lines = audio_script.script.lines
    n_lines = len(lines)
    speech_seen = 0
    for idx, item in enumerate(audio_script.items):
        if item.kind is ItemKind.SPEECH:
            if item.layer is not Layer.FOREGROUND:
                out.append(Violation(idx, "speech_not_foreground"))
            if not item.speaker or not item.style_instruction:
                out.append(Violation(idx, "speech_missing_field", "speaker and style_instruction are required"))
            if speech_seen >= n_lines:
                out.append(Violation(idx, "speech_extra_item", "more speech items than script lines"))
            else:
                line = lines[speech_seen]
                if item.text_or_description != line.text:
                    out.append(Violation(idx, "speech_line_mismatch", f"text differs from line {speech_seen}"))
                if item.speaker != line.speaker:
                    out.append(Violation(idx, "speech_speaker_mismatch", f"speaker differs from line {speech_seen}"))
                if item.style_instruction != line.style_instruction:
                    out.append(Violation(idx, "speech_style_mismatch", f"style differs from line {speech_seen}"))
            if item.speaker and item.speaker not in audio_script.assignment:
                out.append(Violation(idx, "speaker_unassigned", f"no voice for {item.speaker!r}"))
            speech_seen += 1
        else:
            if item.layer is not Layer.BACKGROUND:
                out.append(Violation(idx, "nonspeech_not_background"))
            if item.span is None:
                out.append(Violation(idx, "background_missing_span"))
            else:
                start, end = item.span
                if start > end:
                    out.append(Violation(idx, "background_span_inverted", f"span {item.span}"))
                if start < 0 or end >= n_lines:
                    out.append(Violation(idx, "background_span_out_of_range", f"span {item.span}, {n_lines} lines"))
        if not MIN_GAIN_DB <= item.gain_db <= MAX_GAIN_DB:
            out.append(Violation(idx, "gain_out_of_range", f"{item.gain_db} dB"))
    if speech_seen < n_lines:
        out.append(Violation(len(audio_script.items), "speech_missing_lines", f"{speech_seen} of {n_lines} lines"))
    return out


def speech_items(script: ConversationScript) -> list[AudioItem]:
    return [
        AudioItem(ItemKind.SPEECH, line.text, Layer.FOREGROUND, line.speaker, line.style_instruction)
        for line in script.lines
    ]


def _clamp_background(raw: dict, n_lines: int) -> AudioItem:
    try:
        kind = ItemKind(str(raw.get("kind", "Music")))
    except ValueError as exc:
        raise SchemaError(f"unknown background kind {raw.get('kind')!r}") from exc
    if kind is ItemKind.SPEECH:
        raise SchemaError("background items cannot be speech")
    desc = str(raw.get("description") or "").strip()
    if not desc:
        raise SchemaError("background item without description")
    try:
        start, end = int(raw["start_line"]), int(raw["end_line"])
        gain = float(raw.get("gain_db", DEFAULT_BACKGROUND_GAIN_DB))
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad background item {raw!r}: {exc}") from exc
    if start > end:
        raise ValidationError(f"inverted span ({start}, {end}) for {desc!r}")
    c_start, c_end = max(start, 0), min(end, n_lines - 1)
    if (c_start, c_end) != (start, end):
        log.warning("background %r: span (%d, %d) clamped to (%d, %d)", desc, start, end, c_start, c_end)
    if c_start > c_end:
        raise ValidationError(f"span ({start}, {end}) lies outside the {n_lines}-line script")
    c_gain = min(max(gain, MIN_GAIN_DB), MAX_GAIN_DB)
    if c_gain != gain:
        log.warning("background %r: gain %.1f dB clamped to %.1f dB", desc, gain, c_gain)
    return AudioItem(kind, desc, Layer.BACKGROUND, span=(c_start, c_end), gain_db=c_gain)


def _parse_background(reply: str) -> list[dict]:
    data = extract_json(reply)
    items = data.get("background", []) if isinstance(data, dict) else None
    if not isinstance(items, list) or not all(isinstance(x, dict) for x in items):
        raise SchemaError("expected {'background': [ ... ]}")
    return items


def enrich_to_audio_script(
    script: ConversationScript,
    assignment: RoleVoiceAssignment,
    llm: CompletionProvider,
    *,
    retry: RetryPolicy | None = None,
    temperature: float | None = None,
    seed: int | None = None,
    templates_dir: str | None = None,
) -> AudioScript:
    """Keep the dialogue verbatim and add LLM-proposed background items, clamped to valid spans and gains."""
    missing = [s for s in script.speakers if s not in assignment]
    if missing:
        raise PreconditionError(f"assignment lacks voices for {missing}")
    numbered = [{"index": i, **line.to_dict()} for i, line in enumerate(script.lines)]
    prompt = load_template("audio_script", 1, templates_dir).render(
        script=json.dumps(numbered, ensure_ascii=False), n_lines=len(script.lines)
    )
    proposals = ask_structured(
        llm, prompt, _parse_background, retry=retry, temperature=temperature, seed=seed, what="audio_script"
    )
    background = [_clamp_background(p, len(script.lines)) for p in proposals]
    result = AudioScript(script, tuple(speech_items(script) + background), assignment)
    problems = validate_audio_script(result)
    if problems:
        raise ValidationError(f"audio script invalid: {problems}")
    return result
