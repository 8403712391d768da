"""Variational parameters and ELBO records."""
from __future__ import annotations

import math
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.special import expit, logit

Transform = Literal["identity", "exp", "logit"]


class ViParam(BaseModel):
    """One variational parameter; ``value`` is in the constrained space."""

    model_config = ConfigDict(frozen=True)

    name: str
    transform: Transform = "identity"
    value: float

    @model_validator(mode="after")
    def _value_in_domain(self) -> ViParam:
        if not math.isfinite(self.value):
            raise ValueError(f"parameter {self.name} must be finite")
        if self.transform == "exp" and not self.value > 0.0:
            raise ValueError(f"parameter {self.name} uses exp and must be > 0")
        if self.transform == "logit" and not 0.0 < self.value < 1.0:
            raise ValueError(f"parameter {self.name} uses logit and must lie in (0, 1)")
        return self

    @property
    def unconstrained(self) -> float:
        if self.transform == "exp":
            return math.log(self.value)
        if self.transform == "logit":
            return float(logit(self.value))
        return self.value

    def with_unconstrained(self, u: float) -> ViParam:
        if self.transform == "exp":
            v = max(math.exp(min(u, 700.0)), np.nextafter(0.0, 1.0))
        elif self.transform == "logit":
            v = min(max(float(expit(u)), np.nextafter(0.0, 1.0)), np.nextafter(1.0, 0.0))
        else:
            v = u
        return self.model_copy(update={"value": float(v)})

    @classmethod
    def parse_flag(cls, text: str) -> ViParam:
        """Parse ``name:transform:init`` as given on the command line."""
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"expected name:transform:init, got {text!r}")
        name, transform, init = parts
        return cls(name=name, transform=transform, value=float(init))


class ViParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    params: tuple[ViParam, ...] = ()

    @model_validator(mode="after")
    def _unique_names(self) -> ViParams:
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ValueError("variational parameter names must be unique")
        return self

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.params)

    def values(self) -> dict[str, float]:
        return {p.name: p.value for p in self.params}

    def unconstrained(self) -> np.ndarray:
        return np.array([p.unconstrained for p in self.params], dtype=float)

    def with_unconstrained(self, u: np.ndarray) -> ViParams:
        return ViParams(params=tuple(p.with_unconstrained(float(x)) for p, x in zip(self.params, u)))


class ElboRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    iteration: int
    elbo: float
    stderr: float
    params: dict[str, float]
