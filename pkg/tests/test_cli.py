import hashlib
import json
from pathlib import Path

import pytest

from podforge.cli.main import main
from podforge.harness import ABLATION_GRID
from podforge.pipeline import Pipeline, RunDir
from podforge.config import load_config
from podforge.errors import ConfigError
from podforge.script_engine import Category, ConversationScript, Topic


def _digest(run: Path):
    return {p.relative_to(run).as_posix(): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(run.rglob("*")) if p.is_file() and p.name != "run.log"}


def _only_run(root: Path) -> Path:
    (run,) = [p for p in root.iterdir() if p.is_dir()]
    return run


def test_script_command(tmp_path, topics_file, capsys):
    runs = tmp_path / "runs"
    assert main(["script", "--topics", str(topics_file), "--mock", "--runs-dir", str(runs)]) == 0
    run = _only_run(runs)
    assert sorted(p.name for p in run.iterdir()) == ["config.json", "conversation_script.json", "run.log"]
    doc = json.loads((run / "conversation_script.json").read_text())
    cfg = json.loads((run / "config.json").read_text())
    assert doc["config_hash"] == cfg["config_hash"] and doc["provenance"] == "MultiAgent"
    assert "api_key" not in json.dumps(cfg)


def test_direct_baseline_mode(tmp_path, topics_file):
    runs = tmp_path / "runs"
    assert main(["script", "--topics", str(topics_file), "--mock", "--mode", "direct_baseline",
                 "--runs-dir", str(runs)]) == 0
    doc = json.loads((_only_run(runs) / "conversation_script.json").read_text())
    assert doc["provenance"] == "DirectBaseline"


def test_missing_topics_file(tmp_path):
    runs = tmp_path / "runs"
    assert main(["script", "--topics", str(tmp_path / "nope.txt"), "--mock", "--runs-dir", str(runs)]) == 2
    assert not runs.exists()


def test_usage_errors(tmp_path, topics_file):
    assert main([]) == 2
    assert main(["script", "--topics", str(topics_file), "--mode", "bogus"]) == 2
    assert main(["generate", "--topics", str(topics_file), "--mock"]) == 2  # no voice library
    bad = tmp_path / "bad.txt"
    bad.write_text("x | Sports | t\n")
    assert main(["script", "--topics", str(bad), "--mock"]) == 2


def test_generate_and_resume(tmp_path, topics_file, library_path):
    runs = tmp_path / "runs"
    args = ["generate", "--topics", str(topics_file), "--mock", "--voice-library", str(library_path),
            "--runs-dir", str(runs)]
    assert main(args) == 0
    run = _only_run(runs)
    for name in ("config.json", "conversation_script.json", "assignment.json", "audio_script.json",
                 "timeline.json", "final.wav", "metrics.json", "run.log"):
        assert (run / name).is_file(), name
    before = _digest(run)
    (run / "final.wav").unlink()
    assert main(args) == 0
    assert _digest(run) == before  # mix re-ran, everything else reused byte-identical
    assert "done" in (run / "run.log").read_text()


def test_generate_library_too_small(tmp_path, topics_file):
    from conftest import CAPTIONS, write_manifest
    from podforge.providers.embed import HashProjectionEmbedder
    from podforge.voice_pool import build_voice_library, load_manifest, save_library

    d = tmp_path / "small"
    d.mkdir()
    lib = build_voice_library(load_manifest(write_manifest(d, CAPTIONS[:2])), HashProjectionEmbedder())
    save_library(lib, d / "lib.json")
    runs = tmp_path / "runs"
    rc = main(["generate", "--topics", str(topics_file), "--mock", "--voice-library", str(d / "lib.json"),
               "--runs-dir", str(runs)])
    assert rc == 1
    run = _only_run(runs)
    assert (run / "conversation_script.json").is_file() and not (run / "assignment.json").exists()
    assert "voice_pool" in (run / "run.log").read_text()


def test_no_instruction_flag(tmp_path, topics_file, library_path):
    runs = tmp_path / "runs"
    assert main(["generate", "--topics", str(topics_file), "--mock", "--voice-library", str(library_path),
                 "--runs-dir", str(runs), "--no-instruction"]) == 0
    cfg = json.loads((_only_run(runs) / "config.json").read_text())
    assert cfg["config"]["use_instruction"] is False


def test_config_change_gets_new_run(tmp_path, topics_file):
    runs = tmp_path / "runs"
    base = ["script", "--topics", str(topics_file), "--mock", "--runs-dir", str(runs)]
    assert main(base) == 0
    assert main(base + ["--n-guests", "3"]) == 0
    assert len(list(runs.iterdir())) == 2


def test_run_dir_refuses_foreign_config(tmp_path):
    topic = Topic("t", "x", Category.GENERIC)
    RunDir.open(tmp_path, topic, load_config(env={}), "fixed")
    with pytest.raises(ConfigError):
        RunDir.open(tmp_path, topic, load_config(env={}, n_guests=3), "fixed")


def test_stage_failure_exit_1(tmp_path, topics_file, monkeypatch):
    from podforge.providers import mock

    monkeypatch.setattr(mock.CannedLLM, "complete", lambda self, m, **kw: "garbage")
    runs = tmp_path / "runs"
    assert main(["script", "--topics", str(topics_file), "--mock", "--runs-dir", str(runs)]) == 1
    run = _only_run(runs)
    assert not (run / "conversation_script.json").exists()
    assert "[script]" in (run / "run.log").read_text()


def test_ablate(tmp_path, capsys):
    topics = tmp_path / "t.txt"
    topics.write_text("a | Generic | Remote work and focus\nb | Knowledge | How vaccines train immunity\n")
    out = tmp_path / "abl.json"
    assert main(["ablate", "--topics", str(topics), "--mock", "--runs-dir", str(tmp_path / "runs"),
                 "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert [r["label"] for r in doc["rows"]] == [c.label for c in ABLATION_GRID]
    assert all(len(r["metrics"]) == 5 and r["n_ok"] == 2 for r in doc["rows"])
    assert out.with_suffix(".txt").is_file()


def test_ablate_empty_topics(tmp_path):
    empty = tmp_path / "e.txt"
    empty.write_text("# nothing\n")
    assert main(["ablate", "--topics", str(empty), "--mock"]) == 2


def test_eval(tmp_path):
    topics = tmp_path / "t.txt"
    topics.write_text("a | Generic | Remote work and focus\nb | Knowledge | How vaccines train immunity\n")
    ours, base = tmp_path / "ours", tmp_path / "base"
    assert main(["script", "--topics", str(topics), "--mock", "--runs-dir", str(ours)]) == 0
    assert main(["script", "--topics", str(topics), "--mock", "--mode", "direct_baseline",
                 "--runs-dir", str(base)]) == 0
    out = tmp_path / "report.json"
    assert main(["eval", "--ours", str(ours), "--baseline", str(base), "--out", str(out), "--mock",
                 "--judge", "mock"]) == 0
    rep = json.loads(out.read_text())
    assert len(rep["pairs"]) == 2 and set(rep["by_category"]) == {"Generic", "Knowledge", "All"}
    assert all(p["judge"] is not None for p in rep["pairs"])
    assert "Distinct_1" in out.with_suffix(".txt").read_text()


def test_eval_config_mismatch(tmp_path):
    topics = tmp_path / "t.txt"
    topics.write_text("a | Generic | Remote work and focus\n")
    ours, base = tmp_path / "ours", tmp_path / "base"
    main(["script", "--topics", str(topics), "--mock", "--runs-dir", str(ours)])
    main(["script", "--topics", str(topics), "--mock", "--mode", "direct_baseline", "--runs-dir", str(base)])
    cfg = tmp_path / "c.yaml"
    cfg.write_text("window_size: 50\n")
    # store metrics for ours at window 50 and baseline at the default 100
    for root, conf in ((ours, load_config(cfg, env={"POD_MOCK": "1"})), (base, load_config(env={"POD_MOCK": "1"}))):
        run = _only_run(root)
        script = ConversationScript.from_dict(json.loads((run / "conversation_script.json").read_text()))
        Pipeline(conf).stage_metrics(RunDir(run, "h"), script)
    rc = main(["eval", "--ours", str(ours), "--baseline", str(base), "--out", str(tmp_path / "r.json"),
               "--mock", "--judge", "none"])
    assert rc == 2


def test_voicepool_build(tmp_path, manifest):
    out = tmp_path / "lib.json"
    assert main(["voicepool", "build", "--in", str(manifest), "--out", str(out), "--threshold", "0.95"]) == 0
    assert len(json.loads(out.read_text())) == 6
    assert main(["voicepool", "build", "--in", str(tmp_path / "missing"), "--out", str(out)]) == 2


def test_generate_duration_law_default_rounds(tmp_path, topics_file, library_path):
    import wave

    runs = tmp_path / "runs"
    assert main(["generate", "--topics", str(topics_file), "--mock", "--voice-library", str(library_path),
                 "--runs-dir", str(runs), "--gap-ms", "250"]) == 0
    run = _only_run(runs)
    audio = json.loads((run / "audio_script.json").read_text())
    speech = [i for i, it in enumerate(audio["items"]) if it["kind"] == "Speech"]
    assert any(it["layer"] == "Background" for it in audio["items"])

    def frames(p):
        with wave.open(str(p)) as w:
            return w.getnframes()

    fg = sum(frames(run / "clips" / f"item_{i:04d}.wav") for i in speech)
    gap = round(0.25 * 24000)
    assert frames(run / "final.wav") == fg + (len(speech) - 1) * gap
