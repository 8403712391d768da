"""Primitive distributions – parameter domains, supports, log-densities and samplers."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.special import betaln, gammaln, xlog1py, xlogy

from gpp.exceptions import DistParamOutOfDomain
from gpp.schemas.records import IMPOSSIBLE, LogWeight
from gpp.schemas.types import (
    BOOL,
    NAT,
    POS_REAL,
    REAL,
    UNIT_REAL,
    BaseType,
    Bool,
    FinNat,
    Nat,
    PosReal,
    Real,
    Unit,
    UnitReal,
)
from gpp.schemas.values import BoolV, NatV, PrimDist, RealV, Triv, Value

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


# ── Construction ──────────────────────────────────────────────────────────────
def _unit_interval(x: float) -> bool:
    return 0.0 < x < 1.0


def _positive(x: float) -> bool:
    return x > 0.0 and math.isfinite(x)


_DOMAINS = {
    "Ber": ((_unit_interval, "p in (0, 1)"),),
    "Unif": (),
    "Beta": ((_positive, "a > 0"), (_positive, "b > 0")),
    "Gamma": ((_positive, "shape > 0"), (_positive, "rate > 0")),
    "Normal": ((math.isfinite, "finite mean"), (_positive, "stddev > 0")),
    "Geo": ((_unit_interval, "p in (0, 1)"),),
    "Pois": ((_positive, "rate > 0"),),
}


def make_dist(family: str, params: Sequence[float]) -> PrimDist:
    """Build a PrimDist, raising DistParamOutOfDomain on a bad parameter."""
    values = tuple(float(p) for p in params)
    if family == "Cat":
        if not values:
            raise DistParamOutOfDomain("Cat needs at least one weight")
        for i, w in enumerate(values):
            if not _positive(w):
                raise DistParamOutOfDomain(f"Cat weight {i} must be > 0, got {w}")
        return PrimDist("Cat", values)
    domain = _DOMAINS.get(family)
    if domain is None:
        raise DistParamOutOfDomain(f"unknown distribution family {family!r}")
    if len(values) != len(domain):
        raise DistParamOutOfDomain(f"{family} takes {len(domain)} parameter(s), got {len(values)}")
    for value, (ok, desc) in zip(values, domain):
        if not ok(value):
            raise DistParamOutOfDomain(f"{family} requires {desc}, got {value}")
    return PrimDist(family, values)


# ── Types and supports ────────────────────────────────────────────────────────
def result_type(d: PrimDist) -> BaseType:
    family = d.family
    if family == "Ber":
        return BOOL
    if family in ("Unif", "Beta"):
        return UNIT_REAL
    if family == "Gamma":
        return POS_REAL
    if family == "Normal":
        return REAL
    if family == "Cat":
        return FinNat(len(d.params))
    return NAT


def value_in_scalar(v: Value, t: BaseType) -> bool:
    """Scalar value typing: literal ranges of the value rules."""
    if isinstance(t, Unit):
        return isinstance(v, Triv)
    if isinstance(t, Bool):
        return isinstance(v, BoolV)
    if isinstance(t, (UnitReal, PosReal, Real)):
        if not isinstance(v, RealV) or not math.isfinite(v.value):
            return False
        if isinstance(t, UnitReal):
            return 0.0 < v.value < 1.0
        if isinstance(t, PosReal):
            return v.value > 0.0
        return True
    if isinstance(t, FinNat):
        return isinstance(v, NatV) and 0 <= v.value < t.n
    if isinstance(t, Nat):
        return isinstance(v, NatV) and v.value >= 0
    return False


def support_contains(d: PrimDist, v: Value) -> bool:
    return value_in_scalar(v, result_type(d))


def as_slot_value(d: PrimDist, v: Value) -> Value:
    """Read a recorded natural as a real when ``d`` draws reals; other values pass through."""
    if isinstance(v, NatV) and isinstance(result_type(d), (UnitReal, PosReal, Real)):
        return RealV(float(v.value))
    return v


# ── Densities ─────────────────────────────────────────────────────────────────
def log_density(d: PrimDist, v: Value) -> LogWeight:
    """Log pdf/pmf of ``v``; IMPOSSIBLE outside the support."""
    if not support_contains(d, v):
        return IMPOSSIBLE
    family, ps = d.family, d.params
    if family == "Ber":
        return math.log(ps[0]) if v.value else math.log1p(-ps[0])
    if family == "Unif":
        return 0.0
    x = v.value
    if family == "Beta":
        a, b = ps
        return float(xlogy(a - 1.0, x) + xlog1py(b - 1.0, -x) - betaln(a, b))
    if family == "Gamma":
        shape, rate = ps
        return float(shape * math.log(rate) - gammaln(shape) + xlogy(shape - 1.0, x) - rate * x)
    if family == "Normal":
        mean, sd = ps
        z = (x - mean) / sd
        return -0.5 * z * z - math.log(sd) - _HALF_LOG_2PI
    if family == "Cat":
        return math.log(ps[x]) - math.log(math.fsum(ps))
    if family == "Geo":
        p = ps[0]
        return math.log(p) + x * math.log1p(-p)
    if family == "Pois":
        rate = ps[0]
        return float(xlogy(x, rate) - rate - gammaln(x + 1.0))
    raise DistParamOutOfDomain(f"unknown distribution family {family!r}")


# ── Sampling ──────────────────────────────────────────────────────────────────
def _open_unit(rng: np.random.Generator) -> float:
    u = rng.random()
    while u == 0.0:
        u = rng.random()
    return float(u)


def sample(d: PrimDist, rng: np.random.Generator) -> Value:
    family, ps = d.family, d.params
    if family == "Ber":
        return BoolV(bool(rng.random() < ps[0]))
    if family == "Unif":
        return RealV(_open_unit(rng))
    if family == "Beta":
        x = float(rng.beta(ps[0], ps[1]))
        while not 0.0 < x < 1.0:
            x = float(rng.beta(ps[0], ps[1]))
        return RealV(x)
    if family == "Gamma":
        x = float(rng.gamma(ps[0], 1.0 / ps[1]))
        while x <= 0.0:
            x = float(rng.gamma(ps[0], 1.0 / ps[1]))
        return RealV(x)
    if family == "Normal":
        return RealV(float(rng.normal(ps[0], ps[1])))
    if family == "Cat":
        weights = np.asarray(ps, dtype=float)
        return NatV(int(rng.choice(len(weights), p=weights / weights.sum())))
    if family == "Geo":
        # numpy counts trials up to the first success; support here starts at 0
        return NatV(int(rng.geometric(ps[0])) - 1)
    if family == "Pois":
        return NatV(int(rng.poisson(ps[0])))
    raise DistParamOutOfDomain(f"unknown distribution family {family!r}")
