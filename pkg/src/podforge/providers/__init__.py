from .base import CompletionProvider, EmbeddingProvider, RetryPolicy, TtaProvider, TtsProvider

__all__ = ["CompletionProvider", "EmbeddingProvider", "RetryPolicy", "TtaProvider", "TtsProvider"]
