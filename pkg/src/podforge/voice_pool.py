"""Captioned reference-voice library: ingestion, de-duplication and role matching."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    EmbeddingProviderError,
    EmptyLibraryError,
    FormatError,
    InvariantError,
    LibraryTooSmallError,
    MatchValidationError,
    PreconditionError,
    SchemaError,
)
from .eval.text import tokenize
from .providers.base import CompletionProvider, EmbeddingProvider, RetryPolicy
from .script_engine import GuestProfile, InterviewOutline
from .structured import ask_structured, extract_json
from .templates import load_template

log = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.95
# Cosine values within this distance below the threshold count as duplicates,
# so identical captions collapse even at threshold 1.0 despite rounding.
SIMILARITY_EPS = 1e-9

GENDERS = ("male", "female", "unknown")
LANGUAGES = ("en", "zh")

_FEMALE = {"female", "woman", "women", "girl", "lady", "she", "her", "feminine", "女"}
_MALE = {"male", "man", "men", "boy", "gentleman", "he", "his", "masculine", "男"}


def gender_from_caption(caption: str) -> str:
    """Keyword rule: a caption naming exactly one gender gets it, else ``unknown``."""
    toks = set(tokenize(caption).tokens)
    chars = set(caption)
    female = bool(toks & _FEMALE or chars & {"女"})
    male = bool(toks & _MALE or chars & {"男"})
    if female and not male:
        return "female"
    if male and not female:
        return "male"
    return "unknown"


@dataclass(frozen=True)
class VoiceEntry:
    voice_id: str
    speaker_id: str
    gender: str
    caption: str
    audio_path: Path
    language: str = "en"

    def __post_init__(self) -> None:
        if self.gender not in GENDERS:
            raise FormatError(f"voice {self.voice_id}: gender must be one of {GENDERS}")
        if self.language not in LANGUAGES:
            raise FormatError(f"voice {self.voice_id}: language must be one of {LANGUAGES}")
        object.__setattr__(self, "audio_path", Path(self.audio_path))

    def to_dict(self, relative_to: Path | None = None) -> dict:
        path = self.audio_path
        if relative_to is not None:
            path = Path(os.path.relpath(path.resolve(), relative_to.resolve()))
        return {
            "voice_id": self.voice_id,
            "speaker_id": self.speaker_id,
            "gender": self.gender,
            "caption": self.caption,
            "audio_path": path.as_posix(),
            "language": self.language,
        }

    @classmethod
    def from_dict(cls, d: dict, base_dir: Path | None = None) -> "VoiceEntry":
        try:
            path = Path(d["audio_path"])
            if base_dir is not None and not path.is_absolute():
                path = Path(os.path.normpath(base_dir / path))
            caption = str(d["caption"])
            return cls(
                voice_id=str(d["voice_id"]),
                speaker_id=str(d["speaker_id"]),
                gender=str(d.get("gender") or gender_from_caption(caption)),
                caption=caption,
                audio_path=path,
                language=str(d.get("language", "en")),
            )
        except (KeyError, TypeError) as exc:
            raise FormatError(f"bad voice record {d!r}: {exc}") from exc


@dataclass(frozen=True)
class VoiceLibrary:
    entries: tuple[VoiceEntry, ...]
    dedup_threshold: float = DEFAULT_THRESHOLD

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, voice_id: str) -> VoiceEntry:
        for e in self.entries:
            if e.voice_id == voice_id:
                return e
        raise KeyError(voice_id)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(e.voice_id for e in self.entries)

    def check(self) -> None:
        """Structural invariants checkable without an embedder."""
        if not 0 < self.dedup_threshold <= 1:
            raise InvariantError(f"dedup_threshold {self.dedup_threshold} not in (0, 1]")
        seen: set[str] = set()
        for e in self.entries:
            if e.voice_id in seen:
                raise InvariantError(f"duplicate voice_id {e.voice_id!r}")
            seen.add(e.voice_id)
            if not e.caption.strip():
                raise InvariantError(f"voice {e.voice_id!r} has an empty caption")
            if not e.audio_path.is_file():
                raise InvariantError(f"voice {e.voice_id!r}: audio file missing: {e.audio_path}")


@dataclass(frozen=True)
class RoleVoiceAssignment:
    mapping: dict[str, str] = field(default_factory=dict)

    def __getitem__(self, role: str) -> str:
        return self.mapping[role]

    def __contains__(self, role: object) -> bool:
        return role in self.mapping

    def to_dict(self) -> dict[str, str]:
        return dict(self.mapping)


def _unit_rows(vecs: np.ndarray) -> np.ndarray:
    vecs = np.asarray(vecs, dtype=np.float64)
    if vecs.ndim != 2 or not np.all(np.isfinite(vecs)):
        raise EmbeddingProviderError("embedder returned malformed vectors")
    norms = np.linalg.norm(vecs, axis=1)
    if np.any(norms == 0):
        raise EmbeddingProviderError("zero-norm caption embedding")
    return vecs / norms[:, None]


def embed_captions(entries: Sequence[VoiceEntry], embedder: EmbeddingProvider, batch: int = 64) -> np.ndarray:
    chunks = [embedder.embed([e.caption for e in entries[i:i + batch]]) for i in range(0, len(entries), batch)]
    vecs = np.concatenate([np.asarray(c, dtype=np.float64) for c in chunks])
    if len(vecs) != len(entries):
        raise EmbeddingProviderError(f"expected {len(entries)} caption embeddings, got {len(vecs)}")
    return vecs


def greedy_keep_first(vectors: np.ndarray, threshold: float) -> list[int]:
    """Indices kept by a greedy scan: keep a row iff its cosine to every kept row is below threshold."""
    unit = _unit_rows(vectors)
    kept: list[int] = []
    for i in range(len(unit)):
        if kept:
            sims = unit[kept] @ unit[i]
            if np.any(sims >= threshold - SIMILARITY_EPS):
                continue
        kept.append(i)
    return kept


def build_voice_library(
    raw_entries: Sequence[VoiceEntry], embedder: EmbeddingProvider, threshold: float = DEFAULT_THRESHOLD
) -> VoiceLibrary:
    if not raw_entries:
        raise PreconditionError("no voice entries to build from")
    if not 0 < threshold <= 1:
        raise PreconditionError(f"threshold must be in (0, 1], got {threshold}")
    kept = greedy_keep_first(embed_captions(raw_entries, embedder), threshold)
    if not kept:
        raise EmptyLibraryError("every voice entry was rejected")
    log.info("voice library: kept %d of %d entries at threshold %.3f", len(kept), len(raw_entries), threshold)
    return VoiceLibrary(tuple(raw_entries[i] for i in kept), threshold)


def load_manifest(path: str | Path) -> list[VoiceEntry]:
    """Read pre-captioned voice records (JSON array or JSON lines).

    Missing ``voice_id`` defaults to ``<speaker_id>-<audio stem>``; missing
    ``gender`` is inferred from the caption.
    """
    path = Path(path)
    text = path.read_text("utf-8")
    try:
        stripped = text.lstrip()
        if stripped.startswith("["):
            records = json.loads(text)
        else:
            records = [json.loads(line) for line in text.splitlines() if line.strip()]
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    entries = []
    for n, rec in enumerate(records, 1):
        if not isinstance(rec, dict) or "audio_path" not in rec or "speaker_id" not in rec:
            raise FormatError(f"{path}: record {n} needs speaker_id and audio_path", None)
        rec = dict(rec)
        rec.setdefault("voice_id", f"{rec['speaker_id']}-{Path(rec['audio_path']).stem}")
        entries.append(VoiceEntry.from_dict(rec, path.parent))
    return entries


def save_library(lib: VoiceLibrary, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = [e.to_dict(relative_to=path.parent) for e in lib.entries]
    path.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def load_library(path: str | Path) -> VoiceLibrary:
    path = Path(path)
    try:
        doc = json.loads(path.read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if isinstance(doc, list):
        records, threshold = doc, DEFAULT_THRESHOLD
    elif isinstance(doc, dict) and isinstance(doc.get("entries"), list):
        records, threshold = doc["entries"], float(doc.get("dedup_threshold", DEFAULT_THRESHOLD))
    else:
        raise FormatError(f"{path}: expected a list of voice records")
    lib = VoiceLibrary(tuple(VoiceEntry.from_dict(r, path.parent) for r in records), threshold)
    lib.check()
    return lib


# -- matching ---------------------------------------------------------------


def assignment_problems(
    mapping: dict[str, str], library: VoiceLibrary, roles: Sequence[str], genders: dict[str, str]
) -> list[str]:
    """Everything wrong with a proposed role -> voice mapping (empty when valid)."""
    problems = []
    ids = set(library.ids)
    for role in roles:
        if role not in mapping:
            problems.append(f"role {role!r} has no voice")
    for role in mapping:
        if role not in roles:
            problems.append(f"unknown role {role!r}")
    used: dict[str, str] = {}
    for role, vid in mapping.items():
        if vid not in ids:
            problems.append(f"role {role!r}: voice_id {vid!r} is not in the library")
            continue
        if vid in used:
            problems.append(f"voice_id {vid!r} given to both {used[vid]!r} and {role!r}")
        used[vid] = role
        want = genders.get(role, "unspecified")
        have = library.get(vid).gender
        if want in ("male", "female") and have not in (want, "unknown"):
            problems.append(f"role {role!r} is {want} but voice {vid!r} is {have}")
    return problems


def _parse_assignment(reply: str) -> dict[str, str]:
    data = extract_json(reply)
    mapping = data.get("assignment") if isinstance(data, dict) else None
    if not isinstance(mapping, dict) or not all(isinstance(v, str) for v in mapping.values()):
        raise SchemaError("expected {'assignment': {role: voice_id}}")
    return {str(k): v for k, v in mapping.items()}


def match_voices(
    library: VoiceLibrary,
    profiles: Sequence[GuestProfile],
    host_descriptor: str,
    outline: InterviewOutline | None,
    llm: CompletionProvider,
    *,
    host_name: str = "Host",
    topic: str = "",
    retry: RetryPolicy | None = None,
    temperature: float | None = None,
    seed: int | None = None,
    templates_dir: str | None = None,
) -> RoleVoiceAssignment:
    """Ask the matching agent for one distinct voice per role, validating hard.

    One corrective re-prompt is allowed when the proposal is invalid.
    """
    roles = [host_name, *(p.name for p in profiles)]
    if len(library) < len(roles):
        raise LibraryTooSmallError(
            f"voice_pool: library has {len(library)} voices but the cast needs {len(roles)}"
        )
    genders = {p.name: p.stated_gender for p in profiles}
    role_info = [{"role": host_name, "description": host_descriptor, "gender": "unspecified"}]
    role_info += [
        {"role": p.name, "description": f"{p.expertise}. {p.background} {p.perspective}".strip(),
         "gender": p.stated_gender}
        for p in profiles
    ]
    voices = [{"voice_id": e.voice_id, "gender": e.gender, "language": e.language, "caption": e.caption}
              for e in library.entries]
    prompt = load_template("voice_match", 1, templates_dir).render(
        topic=topic,
        roles=json.dumps(role_info, ensure_ascii=False),
        voices=json.dumps(voices, ensure_ascii=False),
        outline=json.dumps(list(outline.questions) if outline else [], ensure_ascii=False),
    )
    kw = dict(retry=retry, temperature=temperature, seed=seed, what="voice_match")
    mapping = ask_structured(llm, prompt, _parse_assignment, **kw)
    problems = assignment_problems(mapping, library, roles, genders)
    if problems:
        log.info("voice_match: re-prompting after %d problem(s)", len(problems))
        messages = [
            {"role": "user", "content": prompt},
            {"role": "assistant", "content": json.dumps({"assignment": mapping})},
            {"role": "user", "content": "That assignment is invalid:\n- " + "\n- ".join(problems)
             + "\nReturn a corrected JSON object with one distinct library voice per role."},
        ]
        mapping = ask_structured(llm, messages, _parse_assignment, **kw)
        problems = assignment_problems(mapping, library, roles, genders)
        if problems:
            raise MatchValidationError("; ".join(problems))
    return RoleVoiceAssignment({role: mapping[role] for role in roles})

