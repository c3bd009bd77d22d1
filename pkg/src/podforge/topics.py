"""Topic files.

Line format, one topic per line (``#`` starts a comment)::

    id | category | text
    category | text
    text

JSON format: a list of ``{"id": ..., "category": ..., "text": ...}`` objects
(``id`` and ``category`` optional).
"""

from __future__ import annotations

import json
from pathlib import Path

from .errors import FormatError
from .script_engine import Category, Topic


def _make(raw_id: str | None, raw_cat: str | None, text: str, lineno: int) -> Topic:
    try:
        cat = Category.parse(raw_cat)
    except ValueError as exc:
        raise FormatError(str(exc), lineno) from exc
    if not text.strip():
        raise FormatError("empty topic text", lineno)
    return Topic(id=(raw_id or f"topic-{lineno:03d}").strip(), text=text.strip(), category=cat)


def load_topics(path: str | Path) -> list[Topic]:
    path = Path(path)
    raw = path.read_text("utf-8")
    topics: list[Topic] = []
    linenos: list[int] = []
    if raw.lstrip().startswith("["):
        try:
            records = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc.msg}", exc.lineno) from exc
        for n, rec in enumerate(records, 1):
            if not isinstance(rec, dict) or "text" not in rec:
                raise FormatError(f"record {n} needs a 'text' field")
            topics.append(_make(rec.get("id"), rec.get("category"), str(rec["text"]), n))
            linenos.append(n)
    else:
        for lineno, line in enumerate(raw.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split("|")]
            if len(parts) == 1:
                topics.append(_make(None, None, parts[0], lineno))
            elif len(parts) == 2:
                topics.append(_make(None, parts[0], parts[1], lineno))
            else:
                topics.append(_make(parts[0], parts[1], "|".join(parts[2:]), lineno))
            linenos.append(lineno)
    seen: dict[str, int] = {}
    for n, t in zip(linenos, topics):
        if t.id in seen:
            raise FormatError(f"duplicate topic id {t.id!r}", n)
        seen[t.id] = n
    return topics
