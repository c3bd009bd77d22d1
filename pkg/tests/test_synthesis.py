import io

import numpy as np
import pytest
from scipy.io import wavfile

from podforge.errors import AudioDecodeError, PreconditionError, ProviderError, ProviderTransportError
from podforge.providers.base import RetryPolicy
from podforge.providers.mock import MockTTA, MockTTS
from podforge.synthesis import (
    AudioClip,
    decode_wav,
    encode_wav,
    resample,
    synthesize_audio,
    synthesize_speech,
)
from podforge.voice_pool import VoiceEntry


def _wav(x, rate):
    buf = io.BytesIO()
    wavfile.write(buf, rate, np.round(np.asarray(x) * 32767).astype("<i2"))
    return buf.getvalue()


class SilenceTTS:
    def __init__(self, rate=24000):
        self.rate, self.requests = rate, []

    def synthesize(self, payload):
        self.requests.append(payload)
        return _wav(np.zeros(self.rate), self.rate)


@pytest.fixture
def voice(tmp_path):
    p = tmp_path / "ref.wav"
    p.write_bytes(_wav(np.zeros(100), 24000))
    return VoiceEntry("v", "s", "male", "a male voice", p)


def test_silence_passthrough(voice):
    clip = synthesize_speech("hello there", voice, "calm", SilenceTTS())
    assert len(clip) == 24000 and not clip.samples.any()


def test_empty_text(voice):
    with pytest.raises(PreconditionError):
        synthesize_speech("  ", voice, "calm", SilenceTTS())


@pytest.mark.parametrize("instruction", [None, ""])
def test_no_instruction_field(voice, instruction):
    tts = SilenceTTS()
    synthesize_speech("hello", voice, instruction, tts)
    assert "instruction" not in tts.requests[0]
    assert set(tts.requests[0]) == {"text", "reference_audio"}


def test_instruction_verbatim(voice):
    tts = SilenceTTS()
    synthesize_speech("hello", voice, "  Whisper, slowly.  ", tts)
    assert tts.requests[0]["instruction"] == "  Whisper, slowly.  "


def test_tta_exact_duration():
    clip = synthesize_audio("rain", 2.5, "SoundEffect", MockTTA())
    assert len(clip) == round(2.5 * 24000)


@pytest.mark.parametrize("dur", [0, -1.0])
def test_tta_bad_duration(dur):
    with pytest.raises(PreconditionError):
        synthesize_audio("rain", dur, "Music", MockTTA())


def test_tta_bad_kind():
    with pytest.raises(PreconditionError):
        synthesize_audio("rain", 1.0, "Speech", MockTTA())


class Tone48k:
    def generate(self, payload):
        n = round(payload["duration_s"] * 48000)
        return _wav(0.5 * np.sin(2 * np.pi * 440.0 * np.arange(n) / 48000), 48000)


def _dominant_freq(x, rate):
    spec = np.abs(np.fft.rfft(x * np.hanning(len(x))))
    k = int(np.argmax(spec))
    # parabolic interpolation around the peak bin
    a, b, c = np.log(spec[k - 1:k + 2])
    return (k + 0.5 * (a - c) / (a - 2 * b + c)) * rate / len(x)


def test_resample_48k_to_24k_oracle():
    clip = synthesize_audio("tone", 2.0, "Music", Tone48k(), sample_rate=24000)
    assert clip.sample_rate_hz == 24000
    assert abs(clip.duration_s - 2.0) <= 0.001
    assert abs(_dominant_freq(clip.samples, 24000) - 440.0) < 0.5
    assert clip.metadata["provider_rate"] == 48000


def test_resample_identity():
    x = np.linspace(-1, 1, 10)
    assert np.array_equal(resample(x, 24000, 24000), x)


def test_deterministic_mock_stateless(voice):
    a = synthesize_speech("same text", voice, "calm", MockTTS())
    b = synthesize_speech("same text", voice, "calm", MockTTS())
    assert np.array_equal(a.samples, b.samples)


def test_transport_retry(voice):
    sleeps = []

    class Flaky:
        n = 0

        def synthesize(self, payload):
            Flaky.n += 1
            if Flaky.n < 3:
                raise ProviderTransportError("503")
            return _wav(np.zeros(10), 24000)

    synthesize_speech("hi", voice, None, Flaky(), retry=RetryPolicy(sleep=sleeps.append))
    assert sleeps == [1.0, 2.0]

    class Dead:
        def synthesize(self, payload):
            raise ConnectionError("refused")

    with pytest.raises(ProviderError):
        synthesize_speech("hi", voice, None, Dead(), retry=RetryPolicy(sleep=sleeps.append))


def test_decode_errors():
    with pytest.raises(AudioDecodeError):
        decode_wav(b"not a wav")
    with pytest.raises(AudioDecodeError):
        AudioClip(np.array([2.0]), 24000)
    with pytest.raises(AudioDecodeError):
        AudioClip(np.array([]), 24000)


def test_wav_roundtrip_stereo_float():
    x, rate = decode_wav(encode_wav(np.array([0.5, -0.5]), 16000))
    assert rate == 16000 and np.allclose(x, [0.5, -0.5], atol=1e-4)
    buf = io.BytesIO()
    wavfile.write(buf, 8000, np.array([[0.2, 0.4], [0.0, 0.0]], dtype=np.float32))
    x, _ = decode_wav(buf.getvalue())
    assert np.allclose(x, [0.3, 0.0])
