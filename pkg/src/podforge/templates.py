"""Versioned prompt templates with ``{placeholder}`` interpolation.

Templates live in ``podforge/prompts`` as ``<name>.v<version>.txt``. Only
``{identifier}`` tokens are placeholders, so JSON examples in a template need
no escaping.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .errors import ConfigError

_PLACEHOLDER = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")

REQUIRED: dict[str, frozenset[str]] = {
    "host_profiles": frozenset({"topic", "n_guests"}),
    "host_outline": frozenset({"topic", "profiles", "n_questions"}),
    "guest_response": frozenset({"topic", "profile", "outline"}),
    "guest_response_no_outline": frozenset({"topic", "profile", "n_points"}),
    "writer_script": frozenset({"topic", "profiles", "outline", "responses", "cast", "host_name"}),
    "baseline_direct": frozenset({"topic", "n_guests"}),
    "single_agent": frozenset({"topic", "n_guests", "n_questions_word"}),
    "voice_match": frozenset({"roles", "voices", "outline"}),
    "audio_script": frozenset({"script", "n_lines"}),
    "judge_pairwise": frozenset({"dialogue_a", "dialogue_b"}),
}


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    version: int
    text: str

    @property
    def placeholders(self) -> frozenset[str]:
        return frozenset(_PLACEHOLDER.findall(self.text))

    @property
    def template_id(self) -> str:
        return f"{self.name}/v{self.version}"

    def render(self, **values: object) -> str:
        missing = self.placeholders - values.keys()
        if missing:
            raise ConfigError(f"{self.template_id}: missing values for {sorted(missing)}")
        return _PLACEHOLDER.sub(lambda m: str(values[m.group(1)]), self.text)


def _parse(name: str, version: int, text: str) -> PromptTemplate:
    tpl = PromptTemplate(name, version, text)
    missing = REQUIRED.get(name, frozenset()) - tpl.placeholders
    if missing:
        raise ConfigError(f"template {tpl.template_id} lacks required placeholders {sorted(missing)}")
    return tpl


@lru_cache(maxsize=None)
def load_template(name: str, version: int = 1, directory: str | None = None) -> PromptTemplate:
    """Load a template from ``directory`` or from the packaged defaults."""
    fname = f"{name}.v{version}.txt"
    if directory is not None:
        path = Path(directory) / fname
        if not path.is_file():
            raise ConfigError(f"template file not found: {path}")
        return _parse(name, version, path.read_text("utf-8"))
    res = resources.files("podforge.prompts").joinpath(fname)
    if not res.is_file():
        raise ConfigError(f"no packaged template {fname}")
    return _parse(name, version, res.read_text("utf-8"))


NUMBER_WORDS = ("zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten")


def number_word(n: int) -> str:
    return NUMBER_WORDS[n] if 0 <= n < len(NUMBER_WORDS) else str(n)
