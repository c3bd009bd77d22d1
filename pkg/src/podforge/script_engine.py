"""Host-Guest-Writer script generation and the two single-call baselines.

The Host agent drafts guest profiles and an interview outline, each Guest agent
answers the outline independently (concurrently, with no shared history), and
the Writer agent fuses the answers into one conversation script with a speaking
style per line.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterator, Sequence

from .errors import PreconditionError, SchemaError, ValidationError
from .providers.base import CompletionProvider, RetryPolicy
from .structured import ask_structured, extract_json
from .templates import load_template, number_word

log = logging.getLogger(__name__)


class Category(str, Enum):
    GENERIC = "Generic"
    KNOWLEDGE = "Knowledge"
    COMMON_SENSE = "CommonSense"
    COUNTERFACTUAL = "Counterfactual"
    OTHER = "Other"

    @classmethod
    def parse(cls, raw: str | None) -> "Category":
        if raw is None or not str(raw).strip():
            return cls.OTHER
        key = "".join(ch for ch in str(raw).lower() if ch.isalnum())
        for cat in cls:
            if cat.value.lower() == key:
                return cat
        raise ValueError(f"unknown topic category {raw!r}")


class Provenance(str, Enum):
    MULTI_AGENT = "MultiAgent"
    SINGLE_AGENT = "SingleAgent"
    DIRECT_BASELINE = "DirectBaseline"


GENDERS = ("male", "female", "unspecified")


@dataclass(frozen=True)
class Topic:
    id: str
    text: str
    category: Category = Category.OTHER

    def __post_init__(self) -> None:
        if not self.text or not self.text.strip():
            raise PreconditionError("topic text must be non-empty")

    def to_dict(self) -> dict:
        return {"id": self.id, "category": self.category.value, "text": self.text}

    @classmethod
    def from_dict(cls, d: dict) -> "Topic":
        return cls(id=d["id"], text=d["text"], category=Category.parse(d.get("category")))


@dataclass(frozen=True)
class GuestProfile:
    name: str
    expertise: str
    background: str = ""
    perspective: str = ""
    stated_gender: str = "unspecified"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "expertise": self.expertise,
            "background": self.background,
            "perspective": self.perspective,
            "gender": self.stated_gender,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GuestProfile":
        if not isinstance(d, dict):
            raise SchemaError("guest profile must be an object")
        name = str(d.get("name") or "").strip()
        expertise = str(d.get("expertise") or "").strip()
        if not name:
            raise SchemaError("guest profile without a name")
        if not expertise:
            raise SchemaError(f"guest {name!r} has no expertise")
        gender = str(d.get("gender") or d.get("stated_gender") or "unspecified").strip().lower()
        if gender not in GENDERS:
            gender = "unspecified"
        return cls(
            name=name,
            expertise=expertise,
            background=str(d.get("background") or "").strip(),
            perspective=str(d.get("perspective") or "").strip(),
            stated_gender=gender,
        )


@dataclass(frozen=True)
class InterviewOutline:
    questions: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.questions or any(not q.strip() for q in self.questions):
            raise SchemaError("outline needs at least one non-empty question")

    def __len__(self) -> int:
        return len(self.questions)


@dataclass(frozen=True)
class GuestResponse:
    guest_name: str
    answers: tuple[str, ...]


@dataclass(frozen=True)
class DialogueLine:
    speaker: str
    text: str
    style_instruction: str

    def to_dict(self) -> dict:
        return {"speaker": self.speaker, "text": self.text, "style": self.style_instruction}


@dataclass(frozen=True)
class ConversationScript:
    topic: Topic
    host_name: str
    guests: tuple[GuestProfile, ...]
    outline: InterviewOutline | None
    lines: tuple[DialogueLine, ...]
    provenance: Provenance

    @property
    def speakers(self) -> tuple[str, ...]:
        return (self.host_name, *(g.name for g in self.guests))

    def validate(self) -> "ConversationScript":
        """Check cast invariants; raises ValidationError, returns self."""
        cast = self.speakers
        if len(set(cast)) != len(cast):
            raise ValidationError(f"speaker names are not unique: {cast}")
        if not self.lines:
            raise ValidationError("script has no lines")
        for i, line in enumerate(self.lines):
            if line.speaker not in cast:
                raise ValidationError(f"line {i}: unknown speaker {line.speaker!r} (cast: {list(cast)})")
        if self.lines[0].speaker != self.host_name:
            raise ValidationError(f"first line is by {self.lines[0].speaker!r}, not the host")
        spoken = {line.speaker for line in self.lines}
        silent = [g.name for g in self.guests if g.name not in spoken]
        if silent:
            raise ValidationError(f"guests without lines: {silent}")
        if self.lines[-1].speaker != self.host_name:
            log.warning("script does not end with the host's closing remarks")
        return self

    def to_dict(self) -> dict:
        return {
            "topic": self.topic.to_dict(),
            "host_name": self.host_name,
            "guests": [g.to_dict() for g in self.guests],
            "outline": list(self.outline.questions) if self.outline else None,
            "lines": [line.to_dict() for line in self.lines],
            "provenance": self.provenance.value,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "ConversationScript":
        return cls(
            topic=Topic.from_dict(d["topic"]),
            host_name=d["host_name"],
            guests=tuple(GuestProfile.from_dict(g) for g in d["guests"]),
            outline=InterviewOutline(tuple(d["outline"])) if d.get("outline") else None,
            lines=tuple(_parse_lines(d["lines"])),
            provenance=Provenance(d["provenance"]),
        )


@dataclass
class EngineConfig:
    n_questions: int = 5
    host_name: str = "Host"
    min_lines: int = 8
    max_guests: int = 5
    # Sampling settings are not documented for the original GPT-4 runs.
    temperature: float | None = 0.7
    seed: int | None = None
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    templates_dir: str | None = None
    template_version: int = 1

    def template(self, name: str):
        return load_template(name, self.template_version, self.templates_dir)


@contextmanager
def _stage(name: str) -> Iterator[None]:
    """Prefix any pipeline error raised inside with the stage label, keeping its type."""
    try:
        yield
    except Exception as exc:
        if exc.args and isinstance(exc.args[0], str) and not exc.args[0].startswith("["):
            exc.args = (f"[{name}] {exc.args[0]}", *exc.args[1:])
        exc.stage = name  # type: ignore[attr-defined]
        raise


def _dump(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False)


def _object(reply: str) -> dict:
    data = extract_json(reply)
    if not isinstance(data, dict):
        raise SchemaError("expected a JSON object")
    return data


def _string_list(data: dict, key: str) -> list[str]:
    items = data.get(key)
    if not isinstance(items, list):
        raise SchemaError(f"missing list field {key!r}")
    out = []
    for i, item in enumerate(items):
        if not isinstance(item, str) or not item.strip():
            raise SchemaError(f"{key}[{i}] must be a non-empty string")
        out.append(item.strip())
    return out


def _parse_profiles(items: Any, expected: int | None) -> list[GuestProfile]:
    if not isinstance(items, list):
        raise SchemaError("missing list field 'guests'")
    profiles = [GuestProfile.from_dict(g) for g in items]
    if expected is not None and len(profiles) != expected:
        raise SchemaError(f"expected {expected} guest profiles, got {len(profiles)}")
    names = [p.name for p in profiles]
    if len(set(names)) != len(names):
        raise SchemaError(f"guest names are not unique: {names}")
    return profiles


def _parse_lines(items: Any) -> list[DialogueLine]:
    if not isinstance(items, list) or not items:
        raise SchemaError("missing non-empty list field 'lines'")
    lines = []
    for i, item in enumerate(items):
        if not isinstance(item, dict):
            raise SchemaError(f"lines[{i}] must be an object")
        speaker = str(item.get("speaker") or "").strip()
        text = str(item.get("text") or "").strip()
        style = item.get("style", item.get("style_instruction"))
        style = str(style).strip() if style is not None else ""
        if not speaker:
            raise SchemaError(f"lines[{i}] has no speaker")
        if not text:
            raise SchemaError(f"lines[{i}] has no text")
        if not style:
            raise SchemaError(f"lines[{i}] has no style instruction")
        lines.append(DialogueLine(speaker, text, style))
    return lines


def _ask(llm, prompt, parse, config: EngineConfig, what: str):
    return ask_structured(
        llm, prompt, parse, retry=config.retry, temperature=config.temperature, seed=config.seed, what=what
    )


def generate_guest_profiles(
    topic: Topic, n_guests: int, llm: CompletionProvider, config: EngineConfig | None = None
) -> list[GuestProfile]:
    config = config or EngineConfig()
    if n_guests < 1:
        raise PreconditionError("n_guests must be >= 1")
    prompt = config.template("host_profiles").render(topic=topic.text, n_guests=n_guests)

    def parse(reply: str) -> list[GuestProfile]:
        profiles = _parse_profiles(_object(reply).get("guests"), n_guests)
        if any(p.name == config.host_name for p in profiles):
            raise SchemaError(f"a guest may not be named {config.host_name!r}")
        return profiles

    return _ask(llm, prompt, parse, config, "guest_profiles")


def generate_outline(
    topic: Topic, profiles: Sequence[GuestProfile], llm: CompletionProvider, config: EngineConfig | None = None
) -> InterviewOutline:
    config = config or EngineConfig()
    if not profiles:
        raise PreconditionError("outline needs at least one guest profile")
    prompt = config.template("host_outline").render(
        topic=topic.text, profiles=_dump([p.to_dict() for p in profiles]), n_questions=config.n_questions
    )

    def parse(reply: str) -> InterviewOutline:
        questions = _string_list(_object(reply), "questions")
        if len(questions) != config.n_questions:
            raise SchemaError(f"expected {config.n_questions} questions, got {len(questions)}")
        return InterviewOutline(tuple(questions))

    return _ask(llm, prompt, parse, config, "outline")


def generate_guest_response(
    profile: GuestProfile,
    outline: InterviewOutline | None,
    topic: Topic,
    llm: CompletionProvider,
    config: EngineConfig | None = None,
) -> GuestResponse:
    """Ask one Guest agent to answer the outline; ``outline=None`` gives topic-only talking points."""
    config = config or EngineConfig()
    profile_json = _dump(profile.to_dict())
    if outline is None:
        prompt = config.template("guest_response_no_outline").render(
            topic=topic.text, profile=profile_json, n_points=config.n_questions
        )
    else:
        numbered = "\n".join(f"{i + 1}. {q}" for i, q in enumerate(outline.questions))
        prompt = config.template("guest_response").render(topic=topic.text, profile=profile_json, outline=numbered)

    def parse(reply: str) -> GuestResponse:
        answers = _string_list(_object(reply), "answers")
        if outline is not None and len(answers) != len(outline):
            raise SchemaError(f"{len(answers)} answers for {len(outline)} questions")
        if not answers:
            raise SchemaError("no answers")
        return GuestResponse(profile.name, tuple(answers))

    return _ask(llm, prompt, parse, config, f"guest_response[{profile.name}]")


def _responses_payload(outline: InterviewOutline | None, responses: Sequence[GuestResponse]) -> list[dict]:
    out = []
    for r in responses:
        if outline is None:
            out.append({"guest": r.guest_name, "talking_points": list(r.answers)})
        else:
            qa = [{"question": q, "answer": a} for q, a in zip(outline.questions, r.answers)]
            out.append({"guest": r.guest_name, "answers": qa})
    return out


def compose_script(
    topic: Topic,
    profiles: Sequence[GuestProfile],
    outline: InterviewOutline | None,
    responses: Sequence[GuestResponse],
    llm: CompletionProvider,
    config: EngineConfig | None = None,
) -> ConversationScript:
    config = config or EngineConfig()
    if [r.guest_name for r in responses] != [p.name for p in profiles]:
        raise PreconditionError("need exactly one response per profile, in profile order")
    cast = [config.host_name, *(p.name for p in profiles)]
    prompt = config.template("writer_script").render(
        topic=topic.text,
        host_name=config.host_name,
        cast=_dump(cast),
        profiles=_dump([p.to_dict() for p in profiles]),
        outline=_dump(list(outline.questions)) if outline else "(none; guests spoke freely on the topic)",
        responses=_dump(_responses_payload(outline, responses)),
        min_lines=config.min_lines,
    )
    lines = _ask(llm, prompt, lambda r: _parse_lines(_object(r).get("lines")), config, "writer")
    script = ConversationScript(
        topic, config.host_name, tuple(profiles), outline, tuple(lines), Provenance.MULTI_AGENT
    ).validate()
    if len(lines) < config.min_lines:
        log.warning("writer produced %d lines (soft minimum %d)", len(lines), config.min_lines)
    return script


def _full_script(reply: str, topic: Topic, n_guests: int, provenance: Provenance, default_host: str):
    data = _object(reply)
    host = str(data.get("host_name") or default_host).strip()
    profiles = _parse_profiles(data.get("guests"), n_guests)
    lines = _parse_lines(data.get("lines"))
    outline = None
    if provenance is Provenance.SINGLE_AGENT and data.get("outline"):
        outline = InterviewOutline(tuple(_string_list(data, "outline")))
    return ConversationScript(topic, host, tuple(profiles), outline, tuple(lines), provenance)


def direct_baseline_script(
    topic: Topic, n_guests: int, llm: CompletionProvider, config: EngineConfig | None = None
) -> ConversationScript:
    """One completion asking directly for a 1-host, ``n_guests``-guest script."""
    config = config or EngineConfig()
    if n_guests < 1:
        raise PreconditionError("n_guests must be >= 1")
    prompt = config.template("baseline_direct").render(topic=topic.text, n_guests=n_guests)
    script = _ask(
        llm, prompt,
        lambda r: _full_script(r, topic, n_guests, Provenance.DIRECT_BASELINE, config.host_name),
        config, "direct_baseline",
    )
    return script.validate()


def single_agent_script(
    topic: Topic, n_guests: int, llm: CompletionProvider, config: EngineConfig | None = None
) -> ConversationScript:
    """One completion that walks through invite, outline and script steps itself."""
    config = config or EngineConfig()
    if n_guests < 1:
        raise PreconditionError("n_guests must be >= 1")
    prompt = config.template("single_agent").render(
        topic=topic.text, n_guests=n_guests, n_questions_word=number_word(config.n_questions)
    )
    script = _ask(
        llm, prompt,
        lambda r: _full_script(r, topic, n_guests, Provenance.SINGLE_AGENT, config.host_name),
        config, "single_agent",
    )
    return script.validate()


def run_episode(
    topic: Topic,
    n_guests: int,
    use_outline: bool,
    llm: CompletionProvider,
    config: EngineConfig | None = None,
) -> ConversationScript:
    """Profiles, then outline (optional), then concurrent guest answers, then the Writer."""
    config = config or EngineConfig()
    if not 1 <= n_guests <= config.max_guests:
        raise PreconditionError(f"n_guests must be in [1, {config.max_guests}], got {n_guests}")
    with _stage("guest_profiles"):
        profiles = generate_guest_profiles(topic, n_guests, llm, config)
    outline = None
    if use_outline:
        with _stage("outline"):
            outline = generate_outline(topic, profiles, llm, config)
    with _stage("guest_responses"):
        with ThreadPoolExecutor(max_workers=len(profiles)) as pool:
            responses = list(pool.map(lambda p: generate_guest_response(p, outline, topic, llm, config), profiles))
    with _stage("writer"):
        return compose_script(topic, profiles, outline, responses, llm, config)
