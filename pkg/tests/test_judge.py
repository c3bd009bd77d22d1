import json
import re

import pytest

from podforge.errors import RangeError, SchemaError
from podforge.eval.judge import DIMENSIONS, format_dialogue, judge_pair, mean_verdict_scores, parse_judgement
from podforge.providers.mock import CannedLLM, FunctionLLM, ScriptedLLM


def _reply(score, evidence="A is more specific than B."):
    return json.dumps({"evidence": evidence, "scores": {d: score for d in DIMENSIONS}})


def _dialogues(prompt):
    a = re.search(r"### Dialogue A\n(.*?)\n\n### Dialogue B", prompt, re.S).group(1)
    return a


def bias_judge(s, b):
    """A-first judgement is s+b; B-first is -s+b."""
    return FunctionLLM(lambda p: _reply(s + b if _dialogues(p).startswith("A:") else -s + b))


@pytest.mark.parametrize("s", [-2, -1, 0, 1, 2])
@pytest.mark.parametrize("b", [-1, 0, 1])
def test_bias_cancels(s, b):
    v = judge_pair("A: hello", "B: hi", bias_judge(s, b))
    assert v.scores == {d: float(s) for d in DIMENSIONS}


def test_self_comparison_is_zero():
    judge = FunctionLLM(lambda p: _reply(1))
    v = judge_pair("A: same", "A: same", judge)
    assert all(x == 0.0 for x in v.scores.values())


def test_antisymmetric_under_swap():
    judge = CannedLLM()
    a = "Host: welcome\nGuest: " + "varied words about many distinct topics " * 3
    b = "Host: hi\nGuest: the the the the the"
    ab, ba = judge_pair(a, b, judge), judge_pair(b, a, judge)
    assert all(ab.scores[d] == -ba.scores[d] for d in DIMENSIONS)


def test_out_of_range_score():
    with pytest.raises(RangeError):
        judge_pair("A: x", "B: y", ScriptedLLM([_reply(4), _reply(4)]))


def test_evidence_must_precede_scores():
    bad = json.dumps({"scores": {d: 0 for d in DIMENSIONS}, "evidence": "late"})
    with pytest.raises(SchemaError):
        parse_judgement(bad)


def test_missing_dimension_repaired_once_then_fails():
    bad = json.dumps({"evidence": "x", "scores": {"coherence": 1}})
    llm = ScriptedLLM([bad, bad])
    with pytest.raises(SchemaError):
        judge_pair("A: x", "B: y", llm)
    assert len(llm.calls) == 2


def test_forward_then_backward_order():
    judge = FunctionLLM(lambda p: _reply(0))
    judge_pair("A: first", "B: second", judge)
    firsts = [_dialogues(c[0]["content"]) for c in judge.calls]
    assert firsts == ["A: first", "B: second"]


def test_format_dialogue_and_mean():
    assert format_dialogue("raw") == "raw"
    v = judge_pair("A: a", "B: b", bias_judge(2, 0))
    w = judge_pair("A: a", "B: b", bias_judge(0, 0))
    assert mean_verdict_scores([v, w])["overall"] == 1.0
    assert set(v.to_dict()) == {"scores", "evidence", "raw"}
