"""Execution and inference records plus the log-weight convention."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Optional

from gpp.schemas.syntax import SourceSpan
from gpp.schemas.trace import GuidanceTrace
from gpp.schemas.types import GuideType, TypeDef
from gpp.schemas.values import Value

# Log-space weights are plain floats; -inf is the impossible weight and
# absorbs under addition since no weight is ever +inf.
LogWeight = float
IMPOSSIBLE: LogWeight = float("-inf")


def is_impossible(w: LogWeight) -> bool:
    return w == IMPOSSIBLE


def is_finite_weight(w: LogWeight) -> bool:
    return math.isfinite(w)


@dataclass(frozen=True, slots=True)
class ExecutionRecord:
    latent: GuidanceTrace
    obs: GuidanceTrace
    guide_log_weight: LogWeight
    model_log_weight: LogWeight
    guide_result: Value
    model_result: Value


@dataclass(frozen=True, slots=True)
class Particle:
    trace: GuidanceTrace
    log_importance: LogWeight
    guide_log_weight: LogWeight
    model_log_weight: LogWeight


@dataclass(frozen=True, slots=True)
class ParticleSet:
    particles: tuple[Particle, ...]
    ess: float
    log_evidence: float

    def __len__(self) -> int:
        return len(self.particles)


@dataclass(frozen=True, slots=True)
class ChainState:
    trace: GuidanceTrace
    model_log_weight: LogWeight
    step: int = 0
    accepted: int = 0
    backward_impossible: int = 0

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.step if self.step else 0.0


@dataclass(frozen=True, slots=True)
class CompatReport:
    channel: str
    latent_type: GuideType
    obs_type: Optional[GuideType]
    oplus_free: bool
    amp_free: bool
    equal: bool
    verdict: Literal["accept", "reject"]
    mismatch: Optional[str] = None
    typedefs: tuple[TypeDef, ...] = field(default=(), compare=False)

    @property
    def accepted(self) -> bool:
        return self.verdict == "accept"


@dataclass(frozen=True, slots=True)
class Diagnostic:
    rule: str
    message: str
    decl: Optional[str] = None
    span: Optional[SourceSpan] = None

    def render(self) -> str:
        where = f"{self.span}: " if self.span is not None else ""
        owner = f" (in {self.decl})" if self.decl else ""
        return f"{where}{self.rule}: {self.message}{owner}"
