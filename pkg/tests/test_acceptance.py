"""Acceptance criteria, one test each.

Every test prints a single ``criterion N: PASS|FAIL`` line (visible with
``-s``) and the lines are repeated in the terminal summary.
"""

import contextlib
import json
import random
import time
import wave

import numpy as np
import pytest

import oracles
from conftest import ACCEPTANCE
from podforge.audio_plan import AudioItem, AudioScript, ItemKind, Layer
from podforge.cli.main import main
from podforge.errors import AllStopwordsError, RangeError
from podforge.eval import _backend
from podforge.eval.judge import DIMENSIONS, judge_pair
from podforge.eval.metrics import distinct_n, info_density, mattr, semantic_div
from podforge.eval.text import make_windows
from podforge.harness import ABLATION_GRID
from podforge.mixer import Placement, Timeline, foreground_duration_law, layout, render
from podforge.providers.embed import HashProjectionEmbedder
from podforge.providers.mock import FunctionLLM, TableEmbedder
from podforge.script_engine import ConversationScript, DialogueLine, GuestProfile, Provenance
from podforge.synthesis import AudioClip
from podforge.voice_pool import VoiceEntry, build_voice_library, greedy_keep_first
from podforge.voice_pool import RoleVoiceAssignment


@contextlib.contextmanager
def criterion(n, what):
    try:
        yield
    except BaseException as exc:
        ACCEPTANCE[n] = (False, f"{what}: {type(exc).__name__}: {exc}"[:300])
        print(f"\ncriterion {n}: FAIL  {what}")
        raise
    ACCEPTANCE[n] = (True, what)
    print(f"\ncriterion {n}: PASS  {what}")


def _random_sequences(seed, count, lo, hi):
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        alphabet = [f"w{i}" for i in range(rng.randint(2, 40))]
        out.append([rng.choice(alphabet) for _ in range(rng.randint(lo, hi))])
    return out


def test_1_metric_oracle_equivalence():
    with criterion(1, "distinct_1/2, mattr, info_density == brute force within 1e-9 on 50 inputs, < 5 s"):
        seqs = _random_sequences(1, 50, 5, 300)
        stop = {f"w{i}" for i in range(0, 40, 3)}
        t0 = time.perf_counter()
        for backend in _backend.available():
            for toks in seqs:
                ws = make_windows(toks, 100, 1)
                assert abs(distinct_n(toks, 1, ws, backend=backend) - oracles.distinct(toks, 1, 100)) < 1e-9
                assert abs(distinct_n(toks, 2, ws, backend=backend) - oracles.distinct(toks, 2, 100)) < 1e-9
                assert abs(mattr(toks, ws, backend=backend) - oracles.ttr_mean(toks, 100)) < 1e-9
                expected, _ = oracles.info_density(toks, stop, 100)
                if expected is None:
                    with pytest.raises(AllStopwordsError):
                        info_density(toks, stop, ws, backend=backend)
                else:
                    assert abs(info_density(toks, stop, ws, backend=backend) - expected) < 1e-9
        elapsed = time.perf_counter() - t0
        assert elapsed < 5.0, f"{elapsed:.2f} s"


def test_2_mattr_identity():
    with criterion(2, "mattr(x) == distinct_n(x, 1) bit-equal on all oracle inputs"):
        for backend in _backend.available():
            for toks in _random_sequences(1, 50, 5, 300):
                ws = make_windows(toks, 100, 1)
                assert mattr(toks, ws, backend=backend) == distinct_n(toks, 1, ws, backend=backend)


def test_3_entropy_bounds():
    with criterion(3, "0 <= info_density <= log2(max unique) + 1e-12 on 200 inputs; AllStopwordsError iff all-stop"):
        rng = random.Random(3)
        raised = 0
        for toks in _random_sequences(3, 200, 1, 300):
            vocab = sorted(set(toks))
            stop = set(rng.sample(vocab, rng.randint(0, len(vocab))))
            w = rng.choice([5, 20, 100])
            ws = make_windows(toks, w, 1)
            all_stop = all(all(t in stop for t in win) for win in oracles.windows(toks, w))
            if all_stop:
                raised += 1
                with pytest.raises(AllStopwordsError):
                    info_density(toks, stop, ws)
                continue
            value = info_density(toks, stop, ws)
            _, uniques = oracles.info_density(toks, stop, w)
            assert 0.0 <= value <= np.log2(max(uniques)) + 1e-12
        assert raised > 0  # the exception path was exercised


def test_4_semantic_div_structure():
    with criterion(4, "semantic_div 0 for self-similar, 1 for orthogonal, pair oracle within 1e-9 on 20 cases"):
        emb = HashProjectionEmbedder()
        same = ("alpha beta gamma delta " * 25).split()  # five identical 20-token windows
        assert abs(semantic_div(same, emb, 20)) <= 1e-12
        onehot = TableEmbedder(lambda t: [1.0, 0.0] if t.startswith("left") else [0.0, 1.0])
        assert semantic_div(["left"] * 10 + ["right"] * 10, onehot, 10) == 1.0
        rng = random.Random(4)
        vocab = [f"v{i}" for i in range(60)]
        for _ in range(20):
            w = rng.choice([10, 25, 50])
            toks = [rng.choice(vocab) for _ in range(rng.randint(2 * w, 8 * w))]
            chunks = oracles.chunk_windows(toks, w)
            vecs = [emb.embed([" ".join(c)])[0].tolist() for c in chunks]
            assert abs(semantic_div(toks, emb, w) - oracles.mean_pair_distance(vecs)) < 1e-9


def _bias_judge(s, b):
    def reply(prompt):
        a_first = "### Dialogue A\nA:" in prompt
        score = s + b if a_first else -s + b
        return {"evidence": "compared specificity and flow", "scores": {d: score for d in DIMENSIONS}}
    return FunctionLLM(reply)


def test_5_judge_bias_cancellation():
    with criterion(5, "judge final == s for all 25 (s, b) x 6 dims; self-comparison 0"):
        grid = [-2, -1, 0, 1, 2]
        for s in grid:
            for b in grid:
                # the mock's raw scores s+b reach +-4 by construction, so the accepted range is widened
                # to its span here; the default [-3, 3] check is asserted separately below
                v = judge_pair("A: first dialogue", "B: second dialogue", _bias_judge(s, b), score_range=(-4, 4))
                assert v.scores == {d: float(s) for d in DIMENSIONS}
                if abs(s + b) > 3 or abs(b - s) > 3:
                    with pytest.raises(RangeError):
                        judge_pair("A: first dialogue", "B: second dialogue", _bias_judge(s, b))
                else:
                    assert judge_pair("A: first dialogue", "B: second dialogue", _bias_judge(s, b)).scores == v.scores
        consistent = FunctionLLM(lambda p: {"evidence": "same", "scores": {d: 2 for d in DIMENSIONS}})
        assert all(x == 0.0 for x in judge_pair("A: x", "A: x", consistent).scores.values())


def _wav_frames(path):
    with wave.open(str(path)) as w:
        return w.getnframes(), w.getframerate()


def test_6_end_to_end_mock(tmp_path, library_path, topics_file):
    with criterion(6, "mock generate: < 10 s, valid script, injective 3-role assignment, duration law +-1 ms"):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text("mock_rounds: 0\n")  # host opening plus one line per guest: 3 lines, 2 gaps
        runs = tmp_path / "runs"
        t0 = time.perf_counter()
        rc = main(["generate", "--topics", str(topics_file), "--config", str(cfg), "--mock", "--n-guests", "2",
                   "--voice-library", str(library_path), "--runs-dir", str(runs)])
        elapsed = time.perf_counter() - t0
        assert rc == 0 and elapsed < 10.0
        (run,) = list(runs.iterdir())

        script = ConversationScript.from_dict(json.loads((run / "conversation_script.json").read_text()))
        script.validate()
        assert script.lines[0].speaker == script.host_name
        assert {g.name for g in script.guests} <= {l.speaker for l in script.lines} and len(script.guests) == 2

        mapping = json.loads((run / "assignment.json").read_text())["assignment"]
        assert set(mapping) == {script.host_name, *(g.name for g in script.guests)}
        assert len(set(mapping.values())) == 3

        audio = json.loads((run / "audio_script.json").read_text())
        speech = [i for i, it in enumerate(audio["items"]) if it["kind"] == "Speech"]
        assert len(speech) == 3
        rate = _wav_frames(run / "final.wav")[1]
        fg = sum(_wav_frames(run / "clips" / f"item_{i:04d}.wav")[0] for i in speech)
        gap_s = json.loads((run / "config.json").read_text())["config"]["gap_ms"] / 1000
        expected_s = fg / rate + 2 * gap_s
        assert abs(_wav_frames(run / "final.wav")[0] / rate - expected_s) <= 0.001


def _random_audio_script(rng, n_lines):
    guest = GuestProfile("G", "e", "b", "p")
    lines = tuple(DialogueLine("Host" if i == 0 else "G", f"line {i}", "calm") for i in range(n_lines))
    script = ConversationScript(None, "Host", (guest,), None, lines, Provenance.MULTI_AGENT)
    items = [AudioItem(ItemKind.SPEECH, l.text, Layer.FOREGROUND, l.speaker, l.style_instruction) for l in lines]
    for _ in range(rng.randint(0, 3)):
        a = rng.randrange(n_lines)
        b = rng.randrange(a, n_lines)
        items.append(AudioItem(rng.choice([ItemKind.MUSIC, ItemKind.SOUND_EFFECT]), "bg", Layer.BACKGROUND,
                               span=(a, b), gain_db=rng.uniform(-40, 0)))
    return AudioScript(script, tuple(items), RoleVoiceAssignment({"Host": "a", "G": "b"}))


def test_7_mixer_laws():
    with criterion(7, "mixer determinism, linearity <= 1e-9, duration law on 20 random timelines"):
        rng = random.Random(7)
        nprng = np.random.default_rng(7)
        rate = 8000
        for _ in range(20):
            n_lines = rng.randint(1, 6)
            a = _random_audio_script(rng, n_lines)
            clips = {i: AudioClip(nprng.uniform(-0.2, 0.2, rng.randint(200, 3000)), rate)
                     for i in range(len(a.items))}
            gap_ms = rng.choice([0, 50, 300])
            tl = layout(a, clips, gap_ms)
            fg = [len(clips[i]) for i in a.speech_indices()]
            assert tl.total_samples == foreground_duration_law(fg, round(gap_ms * rate / 1000))

            out = render(tl, clips)
            assert not out.metadata["limited"]
            assert np.array_equal(out.samples, render(tl, clips).samples)

            split = [rng.random() < 0.5 for _ in tl.placements]
            parts = []
            for side in (True, False):
                ps = tuple(p for p, s in zip(tl.placements, split) if s == side)
                buf = np.zeros(tl.total_samples)
                if ps:
                    end = max(p.start_sample + p.length for p in ps)
                    sub = Timeline(tuple(Placement(p.clip_ref, p.start_sample, p.length, p.gain_db, False)
                                         for p in ps), end, rate)
                    buf[:end] = render(sub, clips).samples
                parts.append(buf)
            assert np.max(np.abs(out.samples - (parts[0] + parts[1]))) <= 1e-9


def test_8_dedup_oracle():
    with criterion(8, "greedy dedup == O(n^2) reference on 30 caption sets; monotone over thresholds"):
        rng = random.Random(8)
        words = "deep bright calm raspy soft loud male female young old warm fast slow voice tone".split()
        emb = HashProjectionEmbedder(dim=16)
        for k in range(30):
            n = rng.randint(1, 25)
            captions = [" ".join(rng.sample(words, rng.randint(1, 3))) for _ in range(n)]
            entries = [VoiceEntry(f"v{i}", f"s{i}", "unknown", c, "/none") for i, c in enumerate(captions)]
            vecs = emb.embed(captions)
            threshold = rng.choice([0.5, 0.8, 0.95])
            lib = build_voice_library(entries, emb, threshold)
            assert [int(v[1:]) for v in lib.ids] == oracles.dedup_filter(vecs.tolist(), threshold)
            counts = [len(greedy_keep_first(vecs, t)) for t in (0.5, 0.7, 0.9, 0.99)]
            assert counts == sorted(counts)


def test_9_ablation_shape(tmp_path):
    with criterion(9, "mock ablate on 2 topics: 7 rows x 5 metric columns"):
        topics = tmp_path / "topics.txt"
        topics.write_text("a | Generic | Remote work and deep focus\nb | Counterfactual | A world without paper\n")
        out = tmp_path / "ablation.json"
        assert main(["ablate", "--topics", str(topics), "--mock", "--runs-dir", str(tmp_path / "runs"),
                     "--out", str(out)]) == 0
        rows = json.loads(out.read_text())["rows"]
        assert [r["label"] for r in rows] == [c.label for c in ABLATION_GRID] and len(rows) == 7
        cols = ["distinct_1", "distinct_2", "info_dens", "semantic_div", "mattr"]
        assert all(list(r["metrics"]) == cols and None not in r["metrics"].values() for r in rows)
        table = out.with_suffix(".txt").read_text().splitlines()
        assert len(table) == 2 + 7


@pytest.mark.skip(reason="live check: needs real LLM access (POD_LLM_URL); not run in CI")
def test_10_live_multi_vs_single():
    pass
