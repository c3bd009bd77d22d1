"""Run configuration: YAML file, then environment, then command-line flags."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigError

MODES = ("multi_agent", "single_agent", "direct_baseline")


@dataclass
class ProviderConfig:
    backend: str = "http"  # http | subprocess | mock (+ hash / bert for embedders)
    url: str | None = None
    model: str = "gpt-4"
    api_key: str | None = field(default=None, repr=False)
    command: list[str] | None = None
    timeout_s: float = 120.0
    dim: int = 64


@dataclass
class RetryConfig:
    attempts: int = 3
    backoff_s: float = 1.0


@dataclass
class RunConfig:
    n_guests: int = 2
    use_outline: bool = True
    mode: str = "multi_agent"
    n_questions: int = 5
    host_name: str = "Host"
    host_descriptor: str = "Talk show host: warm, articulate, curious and well prepared."
    min_lines: int = 8
    temperature: float | None = 0.7
    seed: int | None = None
    window_size: int = 100
    stride: int = 1
    info_dens_mode: str = "windowed"
    stopwords_id: str = "en/v1"
    gap_ms: int = 300
    sample_rate: int = 24_000
    use_instruction: bool = True
    voice_library: str | None = None
    templates_dir: str | None = None
    parallelism: int = 4
    mock_rounds: int = 3
    llm: ProviderConfig = field(default_factory=ProviderConfig)
    judge: ProviderConfig = field(default_factory=ProviderConfig)
    tts: ProviderConfig = field(default_factory=lambda: ProviderConfig(timeout_s=300.0))
    tta: ProviderConfig = field(default_factory=lambda: ProviderConfig(timeout_s=300.0))
    embedder: ProviderConfig = field(default_factory=lambda: ProviderConfig(backend="hash"))
    retry: RetryConfig = field(default_factory=RetryConfig)

    def validate(self, *, need_library: bool = False) -> "RunConfig":
        if self.n_guests < 1:
            raise ConfigError("n_guests must be >= 1")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.window_size < 1 or self.stride < 1:
            raise ConfigError("window_size and stride must be >= 1")
        if self.info_dens_mode not in ("windowed", "full_text"):
            raise ConfigError("info_dens_mode must be 'windowed' or 'full_text'")
        if self.templates_dir and not Path(self.templates_dir).is_dir():
            raise ConfigError(f"templates_dir not found: {self.templates_dir}")
        if need_library:
            if not self.voice_library:
                raise ConfigError("voice_library is required for audio generation")
            if not Path(self.voice_library).is_file():
                raise ConfigError(f"voice library not found: {self.voice_library}")
        return self

    def snapshot(self) -> dict:
        """Config as plain data, without secrets."""
        data = asdict(self)
        for key in ("llm", "judge", "tts", "tta", "embedder"):
            data[key].pop("api_key", None)
        return data

    def snapshot_hash(self) -> str:
        canon = json.dumps(self.snapshot(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def use_mocks(self) -> None:
        for key in ("llm", "judge", "tts", "tta"):
            getattr(self, key).backend = "mock"
        if self.embedder.backend not in ("hash",):
            self.embedder.backend = "hash"


def _merge(obj: Any, data: dict, where: str = "") -> None:
    known = {f.name: f for f in fields(obj)}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"unknown config key {where}{key!r}")
        current = getattr(obj, key)
        if is_dataclass(current):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {where}{key!r} must be a mapping")
            _merge(current, value, f"{where}{key}.")
        else:
            setattr(obj, key, value)


def load_config(path: str | Path | None = None, env: dict[str, str] | None = None, **overrides: Any) -> RunConfig:
    cfg = RunConfig()
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        try:
            data = yaml.safe_load(p.read_text("utf-8")) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{p}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{p}: top level must be a mapping")
        _merge(cfg, data)
    apply_env(cfg, os.environ if env is None else env)
    _merge(cfg, {k: v for k, v in overrides.items() if v is not None})
    return cfg


def apply_env(cfg: RunConfig, env) -> None:
    if env.get("POD_LLM_URL"):
        cfg.llm.url = env["POD_LLM_URL"]
        cfg.judge.url = cfg.judge.url or env["POD_LLM_URL"]
    if env.get("POD_LLM_KEY"):
        cfg.llm.api_key = env["POD_LLM_KEY"]
        cfg.judge.api_key = cfg.judge.api_key or env["POD_LLM_KEY"]
    if env.get("POD_TTS_URL"):
        cfg.tts.url = env["POD_TTS_URL"]
    if env.get("POD_TTA_URL"):
        cfg.tta.url = env["POD_TTA_URL"]
    if env.get("POD_EMBED_URL"):
        cfg.embedder.url = env["POD_EMBED_URL"]
    if env.get("POD_MOCK", "") not in ("", "0"):
        cfg.use_mocks()
