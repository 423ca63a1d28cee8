from pydantic_settings import BaseSettings, SettingsConfigDict
from typing import Optional


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env", env_prefix="BOOKSUM_", case_sensitive=False, extra="ignore"
    )

    # Logging
    log_level: str = "INFO"

    # Embedding service
    embed_endpoint_url: Optional[str] = None
    embed_timeout_ms: int = 10_000

    # Abstractive service
    abstractive_endpoint_url: Optional[str] = None
    abstractive_timeout_ms: int = 60_000
    max_in_flight: int = 2

    # Local resources
    cache_dir: Optional[str] = None
    stopwords_path: Optional[str] = None
    vocab_path: Optional[str] = None


settings = Settings()
