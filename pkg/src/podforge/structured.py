"""JSON payload extraction with a single repair round-trip."""

from __future__ import annotations

import json
import logging
import re
from typing import Any, Callable, Sequence, TypeVar

from .errors import SchemaError
from .providers.base import CompletionProvider, RetryPolicy

log = logging.getLogger(__name__)

T = TypeVar("T")

_FENCE = re.compile(r"```(?:json)?\s*\n?(.*?)\n?\s*```", re.DOTALL)


def extract_json(text: str, *, pairs_hook=None) -> Any:
    """Parse the JSON object in an LLM reply, tolerating code fences and chatter."""
    m = _FENCE.search(text)
    candidate = m.group(1) if m else text
    try:
        return json.loads(candidate, object_pairs_hook=pairs_hook)
    except json.JSONDecodeError:
        pass
    start, end = candidate.find("{"), candidate.rfind("}")
    if start == -1 or end <= start:
        raise SchemaError("no JSON object found in response")
    try:
        return json.loads(candidate[start:end + 1], object_pairs_hook=pairs_hook)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc


REPAIR_PROMPT = (
    "Your previous reply could not be used: {error}\n"
    "Reply again with only the corrected JSON object, following the requested schema exactly."
)


def ask_structured(
    llm: CompletionProvider,
    prompt: str | Sequence[dict[str, str]],
    parse: Callable[[str], T],
    *,
    retry: RetryPolicy | None = None,
    temperature: float | None = None,
    seed: int | None = None,
    what: str = "llm",
) -> T:
    """Send ``prompt`` (text or a message list), parse with ``parse``; on SchemaError re-prompt once.

    Transport failures are retried by ``retry``; a second schema failure
    propagates.
    """
    retry = retry or RetryPolicy()
    if isinstance(prompt, str):
        messages: list[dict[str, str]] = [{"role": "user", "content": prompt}]
    else:
        messages = list(prompt)

    def call(msgs: Sequence[dict[str, str]]) -> str:
        return retry.call(lambda: llm.complete(list(msgs), temperature=temperature, seed=seed), what)

    reply = call(messages)
    try:
        return parse(reply)
    except SchemaError as exc:
        log.info("%s: schema repair after: %s", what, exc)
        messages += [
            {"role": "assistant", "content": reply},
            {"role": "user", "content": REPAIR_PROMPT.format(error=exc)},
        ]
    reply = call(messages)
    try:
        return parse(reply)
    except SchemaError as exc:
        raise SchemaError(f"{what}: {exc} (after one repair attempt)") from exc
