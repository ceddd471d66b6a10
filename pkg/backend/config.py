# backend/config.py
import os
from typing import Dict, Any

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="GEOGRAPH_",
        env_file=os.getenv("GEOGRAPH_ENV_FILE", ".env"),
        extra="ignore",
    )

    # Artifact format
    FORMAT_VERSION: int = 1

    # Sampling
    INTEGER_MARGIN: float = Field(default=1e-3, ge=0.0, lt=0.5)
    MAX_REJECTIONS: int = Field(default=200_000, gt=0)
    COVERING_PROBES: int = Field(default=20_000, gt=0)

    # Recovery
    TOLERANCE_BAND: float = Field(default=0.05, ge=0.0)  # metric units around decision boundaries
    LOOP_SEARCH_BUDGET: int = Field(default=2_000, gt=0)  # DFS expansions
    LOOP_MAX_LENGTH: int = Field(default=64, gt=3)
    INTERVAL_CACHE_SIZE: int = Field(default=20_000, gt=0)

    # Alpha
    PHI_BUDGET: int = Field(default=1_000_000, gt=0)  # C(|V|, n) cap
    DELTA_TARGET: float = Field(default=0.01, gt=0.0)
    WITNESS_REPEATS: int = Field(default=8, gt=0)

    # EF games
    ELEMENTARY_BUDGET: int = Field(default=60_000_000, gt=0)  # (|A|(2^(n+1)+1))^3 cap
    DUPLICATOR_CANDIDATES: int = Field(default=64, gt=0)

    # g.e.c. probing
    GEC_REDRAWS: int = Field(default=1_000, gt=0)

    # Concurrency
    THREADS: int = Field(default=os.cpu_count() or 1, gt=0)

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "json"  # json | text

    def get_config(self) -> Dict[str, Any]:
        return {
            "format_version": self.FORMAT_VERSION,
            "integer_margin": self.INTEGER_MARGIN,
            "max_rejections": self.MAX_REJECTIONS,
            "covering_probes": self.COVERING_PROBES,
            "tolerance_band": self.TOLERANCE_BAND,
            "loop_search_budget": self.LOOP_SEARCH_BUDGET,
            "loop_max_length": self.LOOP_MAX_LENGTH,
            "interval_cache_size": self.INTERVAL_CACHE_SIZE,
            "phi_budget": self.PHI_BUDGET,
            "delta_target": self.DELTA_TARGET,
            "witness_repeats": self.WITNESS_REPEATS,
            "elementary_budget": self.ELEMENTARY_BUDGET,
            "duplicator_candidates": self.DUPLICATOR_CANDIDATES,
            "gec_redraws": self.GEC_REDRAWS,
            "threads": self.THREADS,
            "log_level": self.LOG_LEVEL,
            "log_format": self.LOG_FORMAT,
        }

settings = Settings()
