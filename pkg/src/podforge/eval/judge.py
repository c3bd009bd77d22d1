"""Pairwise LLM-as-a-judge with order swapping.

Each pair is judged twice, A-vs-B then B-vs-A. A raw score says how much
better the first dialogue is than the second, so the backward score is
negated before averaging: ``final = (forward - backward) / 2``. An additive
position bias shows up with the same sign in both directions and cancels.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Sequence

from ..errors import PreconditionError, RangeError, SchemaError
from ..providers.base import CompletionProvider, RetryPolicy
from ..structured import ask_structured, extract_json
from ..templates import load_template

DIMENSIONS = ("coherence", "engagingness", "diversity", "informativeness", "speaker_diversity", "overall")
SCORE_MIN, SCORE_MAX = -3.0, 3.0


@dataclass(frozen=True)
class DirectionalJudgement:
    evidence: str
    scores: dict[str, float]


@dataclass(frozen=True)
class JudgeVerdict:
    scores: dict[str, float]
    evidence: dict[str, str]
    raw: dict[str, dict[str, float]]

    def to_dict(self) -> dict:
        return {"scores": dict(self.scores), "evidence": dict(self.evidence), "raw": {k: dict(v) for k, v in self.raw.items()}}


def format_dialogue(script) -> str:
    """Render a ConversationScript (or pass a string through) as ``Speaker: text`` lines."""
    if isinstance(script, str):
        return script
    return "\n".join(f"{line.speaker}: {line.text}" for line in script.lines)


def parse_judgement(reply: str, score_range: tuple[float, float] = (SCORE_MIN, SCORE_MAX)) -> DirectionalJudgement:
    data = extract_json(reply)
    if not isinstance(data, dict):
        raise SchemaError("judge reply must be a JSON object")
    keys = list(data)
    if "evidence" not in data or "scores" not in data:
        raise SchemaError("judge reply needs 'evidence' and 'scores'")
    if keys.index("evidence") > keys.index("scores"):
        raise SchemaError("'evidence' must come before 'scores'")
    evidence = data["evidence"]
    if not isinstance(evidence, str) or not evidence.strip():
        raise SchemaError("'evidence' must be non-empty text")
    raw_scores = data["scores"]
    if not isinstance(raw_scores, dict):
        raise SchemaError("'scores' must be an object")
    scores: dict[str, float] = {}
    for dim in DIMENSIONS:
        val = raw_scores.get(dim)
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise SchemaError(f"score for {dim!r} missing or not a number")
        lo, hi = score_range
        if not lo <= val <= hi:
            raise RangeError(f"score {val} for {dim!r} outside [{lo:g}, {hi:g}]")
        scores[dim] = float(val)
    return DirectionalJudgement(evidence.strip(), scores)


def judge_pair(
    dialog_a,
    dialog_b,
    judge: CompletionProvider,
    *,
    retry: RetryPolicy | None = None,
    temperature: float | None = 0.0,
    seed: int | None = None,
    templates_dir: str | None = None,
    score_range: tuple[float, float] = (SCORE_MIN, SCORE_MAX),
) -> JudgeVerdict:
    a, b = format_dialogue(dialog_a), format_dialogue(dialog_b)
    if not a.strip() or not b.strip():
        raise PreconditionError("both dialogues must be non-empty")
    template = load_template("judge_pairwise", 1, templates_dir)
    kw = dict(retry=retry, temperature=temperature, seed=seed)
    parse = functools.partial(parse_judgement, score_range=score_range)
    # sequential on purpose: forward then backward keeps the trace readable
    fwd = ask_structured(judge, template.render(dialogue_a=a, dialogue_b=b), parse, what="judge[A-B]", **kw)
    bwd = ask_structured(judge, template.render(dialogue_a=b, dialogue_b=a), parse, what="judge[B-A]", **kw)
    final = {d: (fwd.scores[d] - bwd.scores[d]) / 2.0 for d in DIMENSIONS}
    return JudgeVerdict(
        scores=final,
        evidence={"forward": fwd.evidence, "backward": bwd.evidence},
        raw={"forward": fwd.scores, "backward": bwd.scores},
    )


def mean_verdict_scores(verdicts: Sequence[JudgeVerdict]) -> dict[str, float]:
    if not verdicts:
        raise PreconditionError("no verdicts to average")
    return {d: sum(v.scores[d] for v in verdicts) / len(verdicts) for d in DIMENSIONS}
