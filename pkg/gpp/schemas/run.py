"""Run configuration for the ``run`` subcommand."""
from __future__ import annotations

from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from gpp.schemas.vi import ViParam

Engine = Literal["is", "mh", "vi"]


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    source: Path
    model: str
    guide: str
    obs: Optional[Path] = None
    engine: Engine = "is"
    n: Optional[int] = Field(default=None, ge=1, description="IS particles / VI samples per iteration")
    steps: Optional[int] = Field(default=None, ge=0)
    burnin: Optional[int] = Field(default=None, ge=0)
    iters: Optional[int] = Field(default=None, ge=0)
    step_size: Optional[float] = Field(default=None, ge=0.0)
    seed: int = 0
    out: Optional[Path] = None
    init: Optional[Path] = Field(default=None, description="MH initial latent trace")
    params: tuple[ViParam, ...] = ()
    workers: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _engine_fields(self) -> RunConfig:
        if self.engine == "mh" and self.init is None:
            raise ValueError("engine mh needs an initial latent trace (init)")
        if self.engine == "vi" and not self.params:
            raise ValueError("engine vi needs at least one variational parameter (params)")
        if self.engine != "vi" and self.params:
            raise ValueError(f"params are only meaningful for engine vi, not {self.engine}")
        return self
