"""Application configuration via pydantic-settings."""
from __future__ import annotations

from functools import lru_cache
from typing import Literal, Optional

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="GPP_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # ── App ──────────────────────────────────────────────────────────────────
    app_name: str = "gpp"
    log_level: str = "warning"
    log_format: Literal["console", "json"] = "console"

    # ── Randomness ───────────────────────────────────────────────────────────
    seed: Optional[int] = Field(default=None, description="Fallback seed when --seed is not given")

    # ── Execution ────────────────────────────────────────────────────────────
    workers: int = Field(default=1, ge=1, description=">1 runs particle chunks in a process pool")
    chunk_size: int = Field(default=1000, ge=1, description="Particles per RNG substream")
    max_steps: int = Field(default=1_000_000, ge=1, description="Step-machine fuel per execution")

    # ── Engine defaults ──────────────────────────────────────────────────────
    is_particles: int = Field(default=1000, ge=1)
    mh_steps: int = Field(default=1000, ge=0)
    mh_burnin: int = Field(default=0, ge=0)
    vi_iters: int = Field(default=100, ge=0)
    vi_samples: int = Field(default=20, ge=1)
    vi_step_size: float = Field(default=0.05, ge=0.0)
    fd_step: float = Field(default=1e-4, gt=0.0, description="Central finite-difference half width")

    @field_validator("log_level", mode="before")
    @classmethod
    def normalise_level(cls, v: str) -> str:
        return str(v).lower()


@lru_cache
def get_settings() -> Settings:
    return Settings()
