"""Instantiate providers from configuration."""

from __future__ import annotations

from .config import ProviderConfig, RunConfig
from .errors import ConfigError
from .providers.base import RetryPolicy
from .providers.embed import HashProjectionEmbedder, SentenceTransformerEmbedder
from .providers.http import HttpAudioProvider, HttpCompletionProvider, HttpEmbeddingProvider, SubprocessAudioProvider
from .providers.mock import CannedLLM, MockTTA, MockTTS


def _require_url(pc: ProviderConfig, what: str, env: str) -> str:
    if not pc.url:
        raise ConfigError(f"{what}: no URL configured (set {env} or the config file)")
    return pc.url


def make_llm(cfg: RunConfig, which: str = "llm"):
    pc: ProviderConfig = getattr(cfg, which)
    if pc.backend == "mock":
        return CannedLLM(rounds=cfg.mock_rounds)
    if pc.backend == "http":
        return HttpCompletionProvider(_require_url(pc, which, "POD_LLM_URL"), pc.model, pc.api_key, pc.timeout_s)
    raise ConfigError(f"{which}: unsupported backend {pc.backend!r}")


def _audio(pc: ProviderConfig, what: str, env: str, mock_cls, rate: int):
    if pc.backend == "mock":
        return mock_cls(sample_rate=rate)
    if pc.backend == "http":
        return HttpAudioProvider(_require_url(pc, what, env), pc.timeout_s)
    if pc.backend == "subprocess":
        if not pc.command:
            raise ConfigError(f"{what}: subprocess backend needs 'command'")
        return SubprocessAudioProvider(list(pc.command), pc.timeout_s)
    raise ConfigError(f"{what}: unsupported backend {pc.backend!r}")


def make_tts(cfg: RunConfig):
    return _audio(cfg.tts, "tts", "POD_TTS_URL", MockTTS, cfg.sample_rate)


def make_tta(cfg: RunConfig):
    return _audio(cfg.tta, "tta", "POD_TTA_URL", MockTTA, cfg.sample_rate)


def make_embedder(cfg: RunConfig):
    pc = cfg.embedder
    if pc.backend in ("hash", "mock"):
        return HashProjectionEmbedder(dim=pc.dim)
    if pc.backend == "http":
        return HttpEmbeddingProvider(_require_url(pc, "embedder", "POD_EMBED_URL"), f"http/{pc.model}", pc.timeout_s)
    if pc.backend == "bert":
        return SentenceTransformerEmbedder(pc.model if pc.model != "gpt-4" else "bert-base-nli-mean-tokens")
    raise ConfigError(f"embedder: unsupported backend {pc.backend!r}")


def make_retry(cfg: RunConfig) -> RetryPolicy:
    return RetryPolicy(attempts=cfg.retry.attempts, backoff_s=cfg.retry.backoff_s)
