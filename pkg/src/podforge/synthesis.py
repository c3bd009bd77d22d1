"""Client adapters for instruction-following TTS and text-to-audio backends.

Backends exchange WAV bytes only. Adapters decode, downmix, resample to the
pipeline rate and hand back ``AudioClip`` objects.
"""

from __future__ import annotations

import base64
import io
import logging
from dataclasses import dataclass, field
from math import gcd
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from .errors import AudioDecodeError, PreconditionError
from .providers.base import RetryPolicy, TtaProvider, TtsProvider

log = logging.getLogger(__name__)

PIPELINE_RATE = 24_000
DURATION_TOLERANCE = 0.05


@dataclass
class AudioClip:
    samples: np.ndarray
    sample_rate_hz: int
    source_item_index: int = -1
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise AudioDecodeError("audio clip must be a non-empty mono signal")
        if self.sample_rate_hz <= 0:
            raise AudioDecodeError("sample rate must be positive")
        if np.max(np.abs(self.samples)) > 1.0:
            raise AudioDecodeError("samples exceed [-1, 1]")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


def decode_wav(data: bytes) -> tuple[np.ndarray, int]:
    """Decode RIFF WAV bytes to a float mono signal in [-1, 1] and its rate."""
    try:
        rate, raw = wavfile.read(io.BytesIO(data))
    except Exception as exc:  # scipy raises ValueError / struct errors on junk
        raise AudioDecodeError(f"not a readable WAV stream: {exc}") from exc
    if raw.dtype == np.uint8:
        x = (raw.astype(np.float64) - 128.0) / 128.0
    elif raw.dtype == np.int16:
        x = raw.astype(np.float64) / 32768.0
    elif raw.dtype == np.int32:
        x = raw.astype(np.float64) / 2147483648.0
    elif raw.dtype.kind == "f":
        x = raw.astype(np.float64)
    else:
        raise AudioDecodeError(f"unsupported WAV sample type {raw.dtype}")
    if x.ndim == 2:
        x = x.mean(axis=1)
    if x.size == 0:
        raise AudioDecodeError("WAV stream holds no samples")
    return np.clip(x, -1.0, 1.0), int(rate)


def encode_wav(samples: np.ndarray, sample_rate: int) -> bytes:
    """Encode as 16-bit PCM mono."""
    pcm = np.round(np.clip(samples, -1.0, 1.0) * 32767.0).astype("<i2")
    buf = io.BytesIO()
    wavfile.write(buf, sample_rate, pcm)
    return buf.getvalue()


def write_wav(path: str | Path, clip: AudioClip) -> None:
    Path(path).write_bytes(encode_wav(clip.samples, clip.sample_rate_hz))


def read_wav(path: str | Path, item_index: int = -1) -> AudioClip:
    x, rate = decode_wav(Path(path).read_bytes())
    return AudioClip(x, rate, item_index)


def resample(x: np.ndarray, src_rate: int, dst_rate: int) -> np.ndarray:
    """Polyphase windowed-sinc (Kaiser) resampling; identity when rates match."""
    if src_rate == dst_rate:
        return np.asarray(x, dtype=np.float64)
    g = gcd(src_rate, dst_rate)
    y = resample_poly(np.asarray(x, dtype=np.float64), dst_rate // g, src_rate // g)
    return np.clip(y, -1.0, 1.0)


def to_clip(data: bytes, sample_rate: int, item_index: int) -> AudioClip:
    x, rate = decode_wav(data)
    return AudioClip(resample(x, rate, sample_rate), sample_rate, item_index, {"provider_rate": rate})


def speech_payload(text: str, reference_audio: bytes, instruction: str | None) -> dict:
    payload = {"text": text, "reference_audio": base64.b64encode(reference_audio).decode("ascii")}
    if instruction:
        payload["instruction"] = instruction
    return payload


def synthesize_speech(
    text: str,
    reference,
    instruction: str | None,
    tts: TtsProvider,
    *,
    sample_rate: int = PIPELINE_RATE,
    item_index: int = -1,
    retry: RetryPolicy | None = None,
) -> AudioClip:
    """Speak ``text`` in the voice of ``reference`` (a VoiceEntry).

    ``instruction`` is forwarded verbatim; ``None`` or ``""`` omits it from the
    request entirely, which is the no-instruction comparison mode.
    """
    if not text or not text.strip():
        raise PreconditionError("cannot synthesize empty text")
    try:
        ref_bytes = Path(reference.audio_path).read_bytes()
    except OSError as exc:
        raise PreconditionError(f"reference audio unreadable: {reference.audio_path}") from exc
    payload = speech_payload(text, ref_bytes, instruction)
    data = (retry or RetryPolicy()).call(lambda: tts.synthesize(payload), "tts")
    return to_clip(data, sample_rate, item_index)


def synthesize_audio(
    description: str,
    duration_s: float,
    kind: str,
    tta: TtaProvider,
    *,
    sample_rate: int = PIPELINE_RATE,
    item_index: int = -1,
    retry: RetryPolicy | None = None,
) -> AudioClip:
    """Generate a sound effect or music bed of roughly ``duration_s`` seconds."""
    if not duration_s > 0:
        raise PreconditionError("duration_s must be positive")
    kind = getattr(kind, "value", kind)
    if kind not in ("SoundEffect", "Music"):
        raise PreconditionError(f"kind must be SoundEffect or Music, got {kind!r}")
    payload = {"description": description, "duration_s": float(duration_s), "kind": kind}
    data = (retry or RetryPolicy()).call(lambda: tta.generate(payload), "tta")
    clip = to_clip(data, sample_rate, item_index)
    if abs(clip.duration_s - duration_s) > DURATION_TOLERANCE * duration_s:
        log.warning("tta returned %.2fs for a %.2fs request; the mixer will fit it", clip.duration_s, duration_s)
    return clip
