"""Deterministic offline providers for tests, demos and mock-mode runs.

``CannedLLM`` recognises each packaged prompt by the ``(schema: name/v1)`` tag
it carries and fabricates a well-formed reply from the prompt's own data
sections, seeded by a hash of the prompt. Equal prompts give equal replies.
"""

from __future__ import annotations

import hashlib
import io
import json
import random
import re
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy.io import wavfile

from ..errors import ProviderTransportError

_SCHEMA = re.compile(r"\(schema: (\w+)/v\d+\)")

_FIRST = ["Alex", "Maria", "Daniel", "Priya", "Tom", "Jane", "Kenji", "Sofia", "Omar", "Lena", "Victor", "Grace"]
_LAST = ["Martin", "Adams", "Chen", "Okafor", "Silva", "Novak", "Reyes", "Larsen", "Haddad", "Kim", "Moreau", "Patel"]
_FEMALE_FIRST = {"Maria", "Priya", "Jane", "Sofia", "Lena", "Grace"}
_FIELDS = [
    ("cognitive psychologist", "studies how people reason and decide"),
    ("philosophy professor", "teaches logic and argumentation"),
    ("economist", "models incentives and markets"),
    ("historian", "writes about long-run social change"),
    ("software engineer", "builds large distributed systems"),
    ("family physician", "treats patients in a busy clinic"),
    ("science journalist", "reports on research for a general audience"),
    ("urban planner", "designs transport and housing policy"),
    ("high school teacher", "has taught for twenty years"),
    ("entrepreneur", "founded two education start-ups"),
]
_WORDS = (
    "evidence habit question curiosity bias argument practice method example experience research data "
    "reason judgment context perspective assumption logic insight skill tool process strategy pattern "
    "decision feedback reflection journal debate mentor student community policy history culture "
    "economy technology science health learning memory attention emotion trust risk uncertainty "
    "model theory test experiment outcome cost benefit tradeoff priority goal value principle "
    "framework story case study survey observation measurement error noise signal trend change "
    "growth resilience patience humility courage honesty openness rigor clarity precision nuance "
    "complexity simplicity balance tension conflict consensus dialogue listening writing reading "
    "teaching coaching planning review revision iteration habit routine environment incentive "
    "motivation discipline creativity imagination intuition analysis synthesis comparison contrast "
    "analogy metaphor principle exception rule boundary limit scale speed depth breadth focus"
).split()
_VERBS = (
    "shapes improves challenges reveals supports weakens explains connects strengthens clarifies "
    "questions tests builds frames guides informs reframes limits extends deepens"
).split()
_OPENERS = [
    "In my experience", "Honestly", "What I tell people is that", "The research suggests", "I would add that",
    "One thing I have noticed is that", "From my side", "Interestingly", "Building on that",
]
_STYLES = [
    "warm and welcoming, moderate pace", "curious and engaged, slightly faster", "calm and thoughtful",
    "enthusiastic, with rising intonation", "measured and authoritative", "friendly, conversational",
    "reflective, slower pace with pauses", "energetic and upbeat",
]


def _rng(*parts: str) -> random.Random:
    digest = hashlib.sha256("\x1f".join(parts).encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "little"))


def _section(prompt: str, title: str) -> str:
    m = re.search(rf"^### {re.escape(title)}\n(.*?)(?=\n\n|\n### |\Z)", prompt, re.S | re.M)
    return m.group(1).strip() if m else ""


def _int_after(prompt: str, pattern: str, default: int) -> int:
    m = re.search(pattern, prompt)
    return int(m.group(1)) if m else default


def _sentence(rng: random.Random, topic_words: Sequence[str], length: int) -> str:
    words = []
    for _ in range(length):
        pool = topic_words if topic_words and rng.random() < 0.2 else _WORDS
        words.append(rng.choice(pool))
    verb = rng.choice(_VERBS)
    mid = max(1, len(words) // 2)
    return f"{' '.join(words[:mid]).capitalize()} {verb} {' '.join(words[mid:])}."


def _passage(rng: random.Random, topic: str, n_sentences: int) -> str:
    topic_words = [w for w in re.findall(r"[a-z]+", topic.lower()) if len(w) > 3]
    opener = rng.choice(_OPENERS)
    body = " ".join(_sentence(rng, topic_words, rng.randint(6, 12)) for _ in range(n_sentences))
    return f"{opener}, {body[0].lower()}{body[1:]}"


@dataclass
class CannedLLM:
    """Offline stand-in for every agent prompt in the package.

    ``rounds`` is the number of host-question / guest-answer rounds in
    generated scripts; ``rounds=0`` gives the host opening plus one line per
    guest.
    """

    rounds: int = 3
    calls: list = field(default_factory=list, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def complete(self, messages, *, temperature=None, seed=None) -> str:
        prompt = messages[0]["content"]
        with self._lock:
            self.calls.append(list(messages))
        m = _SCHEMA.search(prompt)
        if not m:
            return "I can only answer the packaged podforge prompts."
        handler: Callable[[str], Any] = getattr(self, f"_{m.group(1)}")
        return json.dumps(handler(prompt), ensure_ascii=False)

    # -- host ---------------------------------------------------------------

    def _profiles(self, rng: random.Random, n: int) -> list[dict]:
        firsts = rng.sample(_FIRST, n)
        lasts = rng.sample(_LAST, n)
        fields = rng.sample(_FIELDS, n)
        out = []
        for first, last, (expertise, background) in zip(firsts, lasts, fields):
            out.append({
                "name": f"{first} {last}",
                "expertise": expertise,
                "background": f"A {expertise} who {background}.",
                "perspective": f"Looks at the topic through the lens of a {expertise}.",
                "gender": "female" if first in _FEMALE_FIRST else "male",
            })
        return out

    def _guest_profiles(self, prompt: str) -> dict:
        n = _int_after(prompt, r"exactly (\d+) entries", 2)
        return {"guests": self._profiles(_rng(prompt), n)}

    def _interview_outline(self, prompt: str) -> dict:
        n = _int_after(prompt, r"exactly (\d+) non-empty", 5)
        topic = _section(prompt, "Topic")
        stems = [
            "What does {t} mean in everyday life?",
            "Why does {t} matter right now?",
            "What are the biggest obstacles people face with {t}?",
            "Which practical steps help most with {t}?",
            "How does your own field approach {t}?",
            "What misconceptions about {t} should we drop?",
            "How will {t} change over the next decade?",
        ]
        short = topic.rstrip("?.! ").lower()
        return {"questions": [stems[i % len(stems)].format(t=short) + ("" if i < len(stems) else f" (part {i})")
                              for i in range(n)]}

    # -- guests -------------------------------------------------------------

    def _guest_answers(self, prompt: str) -> dict:
        profile = json.loads(_section(prompt, "Your profile") or "{}")
        topic = _section(prompt, "Topic")
        outline = _section(prompt, "Interview outline")
        if outline:
            questions = [q for q in outline.splitlines() if q.strip()]
        else:
            questions = [f"point {i}" for i in range(_int_after(prompt, r"as (\d+) talking points", 5))]
        name = profile.get("name", "guest")
        answers = [_passage(_rng(name, topic, q), topic, 3) for q in questions]
        return {"answers": answers}

    # -- writer -------------------------------------------------------------

    def _script_lines(self, rng, topic, host, guests, answers_by_guest, questions) -> list[dict]:
        style = lambda: rng.choice(_STYLES)  # noqa: E731
        intro = ", ".join(guests)
        lines = [{"speaker": host, "text": f"Welcome to the show. Today we talk about {topic.rstrip()} "
                  f"With me are {intro}.", "style": "warm and welcoming, moderate pace"}]
        if self.rounds == 0:
            for g in guests:
                lines.append({"speaker": g, "text": f"Thanks for having me. {_passage(rng, topic, 1)}",
                              "style": style()})
            return lines
        n_rounds = min(self.rounds, max(len(questions), 1))
        for r in range(n_rounds):
            q = questions[r] if r < len(questions) else f"What else should listeners know about {topic}"
            lines.append({"speaker": host, "text": q, "style": "curious and engaged, slightly faster"})
            for g in guests:
                answers = answers_by_guest.get(g) or [_passage(rng, topic, 2)]
                lines.append({"speaker": g, "text": answers[r % len(answers)], "style": style()})
        lines.append({"speaker": host, "text": "That is all the time we have. Thank you both, and thanks for "
                      "listening. Keep questioning, keep learning.", "style": "warm, slowing down to close"})
        return lines

    def _conversation_script(self, prompt: str) -> dict:
        cast = json.loads(_section(prompt, "Cast") or "[]")
        host, guests = cast[0], cast[1:]
        topic = _section(prompt, "Topic")
        responses = json.loads(_section(prompt, "Guest responses") or "[]")
        outline_raw = _section(prompt, "Interview outline")
        questions = json.loads(outline_raw) if outline_raw.startswith("[") else []
        answers_by_guest = {}
        for r in responses:
            if "answers" in r:
                answers_by_guest[r["guest"]] = [qa["answer"] for qa in r["answers"]]
            else:
                answers_by_guest[r["guest"]] = list(r.get("talking_points", []))
        if not questions:
            questions = [f"What is your view on {topic.rstrip('?')}?"] * max(
                (len(a) for a in answers_by_guest.values()), default=1)
        lines = self._script_lines(_rng(prompt), topic, host, guests, answers_by_guest, questions)
        return {"lines": lines}

    def _full_script(self, prompt: str) -> dict:
        n = _int_after(prompt, r"1 host and (\d+) guests", 0) or _int_after(prompt, r"invite (\d+) guests", 2)
        topic_m = re.search(r"topic of the talk show: (.*?) Please", prompt, re.S)
        topic = topic_m.group(1).strip() if topic_m else "the topic"
        rng = _rng(prompt)
        profiles = self._profiles(rng, n)
        guests = [p["name"] for p in profiles]
        outline = self._interview_outline(f"### Topic\n{topic}\n\nexactly 5 non-empty")["questions"]
        answers = {g: [_passage(rng, topic, 1) for _ in outline] for g in guests}
        lines = self._script_lines(rng, topic, "Host", guests, answers, outline)
        out = {"host_name": "Host", "guests": profiles, "lines": lines}
        if "interview outline" in prompt:
            out["outline"] = outline
        return out

    # -- casting, audio, judge ------------------------------------------------

    def _voice_assignment(self, prompt: str) -> dict:
        roles = json.loads(_section(prompt, "Roles") or "[]")
        voices = json.loads(_section(prompt, "Voice library") or "[]")
        used: set[str] = set()
        out = {}
        for role in roles:
            want = role.get("gender", "unspecified")
            ranked = sorted(voices, key=lambda v: (
                0 if v["gender"] == want else 1 if v["gender"] == "unknown" or want not in ("male", "female") else 2))
            for v in ranked:
                if v["voice_id"] not in used:
                    out[role["role"]] = v["voice_id"]
                    used.add(v["voice_id"])
                    break
        return {"assignment": out}

    def _audio_background(self, prompt: str) -> dict:
        n = _int_after(prompt, r"the script has (\d+) lines", 1)
        items = [{"kind": "Music", "description": "bright acoustic intro theme", "start_line": 0,
                  "end_line": 0, "gain_db": -18}]
        if n > 2:
            items.append({"kind": "Music", "description": "soft outro theme", "start_line": n - 1,
                          "end_line": n - 1, "gain_db": -20})
        return {"background": items}

    def _judge_verdict(self, prompt: str) -> dict:
        from ..eval.judge import DIMENSIONS
        from ..eval.text import tokenize

        a, b = _section(prompt, "Dialogue A"), prompt.split("### Dialogue B\n", 1)[-1].split("\n\nRespond", 1)[0]

        def richness(text: str) -> float:
            toks = tokenize(text).tokens
            return len(set(toks)) / max(len(toks), 1) * np.log1p(len(toks))

        diff = richness(a) - richness(b)
        score = float(np.clip(round(diff, 0), -3, 3))
        return {"evidence": f"Dialogue A richness {richness(a):.2f} vs B {richness(b):.2f}.",
                "scores": {d: score for d in DIMENSIONS}}


@dataclass
class ScriptedLLM:
    """Replays a fixed list of replies; an Exception item is raised instead."""

    replies: list
    calls: list = field(default_factory=list)

    def complete(self, messages, *, temperature=None, seed=None) -> str:
        self.calls.append(list(messages))
        if not self.replies:
            raise AssertionError("ScriptedLLM ran out of replies")
        item = self.replies.pop(0)
        if isinstance(item, BaseException):
            raise item
        return item if isinstance(item, str) else json.dumps(item)


@dataclass
class FunctionLLM:
    """Reply computed from the prompt text of the last message."""

    fn: Callable[[str], Any]
    calls: list = field(default_factory=list)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def complete(self, messages, *, temperature=None, seed=None) -> str:
        with self._lock:
            self.calls.append(list(messages))
        out = self.fn(messages[-1]["content"])
        return out if isinstance(out, str) else json.dumps(out)


@dataclass
class FlakyLLM:
    """Fails with a transport error ``failures`` times, then delegates."""

    inner: Any
    failures: int = 2

    def complete(self, messages, **kw) -> str:
        if self.failures > 0:
            self.failures -= 1
            raise ProviderTransportError("simulated timeout")
        return self.inner.complete(messages, **kw)


def tone_wav(duration_s: float, rate: int, freq: float = 220.0, amp: float = 0.3) -> bytes:
    n = max(1, round(duration_s * rate))
    t = np.arange(n) / rate
    x = amp * np.sin(2 * np.pi * freq * t)
    buf = io.BytesIO()
    wavfile.write(buf, rate, np.round(x * 32767).astype("<i2"))
    return buf.getvalue()


@dataclass
class MockTTS:
    """Returns a tone whose length grows with word count; records every payload."""

    sample_rate: int = 24_000
    seconds_per_word: float = 0.05
    base_s: float = 0.1
    requests: list = field(default_factory=list, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def synthesize(self, payload: dict) -> bytes:
        with self._lock:
            self.requests.append(payload)
        words = len(payload["text"].split())
        key = payload["reference_audio"][:64] + payload.get("instruction", "")
        freq = 150.0 + int(hashlib.sha256(key.encode()).hexdigest()[:4], 16) % 250
        return tone_wav(self.base_s + self.seconds_per_word * words, self.sample_rate, freq)


@dataclass
class MockTTA:
    """Seeded low-level noise of exactly the requested duration."""

    sample_rate: int = 24_000
    requests: list = field(default_factory=list, repr=False)

    def generate(self, payload: dict) -> bytes:
        self.requests.append(payload)
        n = max(1, round(payload["duration_s"] * self.sample_rate))
        seed = int(hashlib.sha256(payload["description"].encode()).hexdigest()[:8], 16)
        x = 0.2 * np.random.default_rng(seed).uniform(-1, 1, n)
        buf = io.BytesIO()
        wavfile.write(buf, self.sample_rate, np.round(x * 32767).astype("<i2"))
        return buf.getvalue()


@dataclass
class TableEmbedder:
    """Looks texts up in a table (or calls a function); for exact-geometry tests."""

    table: Any
    embedder_id: str = "table"

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        get = self.table if callable(self.table) else self.table.__getitem__
        return np.asarray([get(t) for t in texts], dtype=np.float64)
