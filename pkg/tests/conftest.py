import json
from pathlib import Path

import pytest

from podforge.eval import _backend
from podforge.providers.mock import tone_wav
from podforge.script_engine import Category, Topic

CAPTIONS = [
    "A deep calm male voice with a slow, steady pace",
    "A bright energetic female voice, fast and cheerful",
    "An elderly man with a raspy, gentle voice",
    "A young woman speaking softly and clearly",
    "A middle-aged man with an authoritative broadcast tone",
    "A warm female narrator with a smooth low register",
]

BACKENDS = ["python"] + (["cython"] if "cython" in _backend.available() else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def topic():
    return Topic("t-001", "How does daily journaling change critical thinking?", Category.GENERIC)


def write_manifest(root: Path, captions=CAPTIONS) -> Path:
    recs = []
    for i, cap in enumerate(captions):
        wav = root / f"voice_{i}.wav"
        wav.write_bytes(tone_wav(0.5, 24000, 180 + 25 * i))
        recs.append({"speaker_id": f"spk{i}", "audio_path": wav.name, "caption": cap, "language": "en"})
    path = root / "manifest.json"
    path.write_text(json.dumps(recs), encoding="utf-8")
    return path


@pytest.fixture
def manifest(tmp_path):
    return write_manifest(tmp_path)


@pytest.fixture
def library_path(tmp_path, manifest):
    from podforge.providers.embed import HashProjectionEmbedder
    from podforge.voice_pool import build_voice_library, load_manifest, save_library

    lib = build_voice_library(load_manifest(manifest), HashProjectionEmbedder())
    out = tmp_path / "library.json"
    save_library(lib, out)
    return out


@pytest.fixture
def topics_file(tmp_path):
    path = tmp_path / "topics.txt"
    path.write_text("t-001 | Generic | How does daily journaling change critical thinking?\n", encoding="utf-8")
    return path


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
