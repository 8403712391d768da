"""Inference engines – importance sampling, Metropolis–Hastings and variational inference.

Every engine is a loop over joint executions of a checked guide/model pair.
Randomness comes only from the ``numpy.random.Generator`` passed in.
"""
from __future__ import annotations

import math
import time
from dataclasses import replace
from typing import Callable, Iterable, Sequence, Union

import numpy as np
import structlog
from scipy.special import logsumexp

from gpp.config import get_settings
from gpp.exceptions import (
    AllImpossible,
    InitImpossible,
    NonFiniteGradient,
    TraceGetOutOfBounds,
    TraceGetTypeMismatch,
    TraceMismatch,
    ViParamMismatch,
)
from gpp.schemas.records import IMPOSSIBLE, ChainState, LogWeight, Particle, ParticleSet, is_impossible
from gpp.schemas.syntax import Program
from gpp.schemas.trace import EMPTY_TRACE, CSample, GuidanceTrace, PSample
from gpp.schemas.values import BoolV, NatV, RealV, TraceV, Value
from gpp.schemas.vi import ElboRecord, ViParams
from gpp.services.distributions import value_in_scalar
from gpp.services.interpreter import eval_proc, model_log_density
from gpp.services.scheduler import joint_execute

log = structlog.get_logger(__name__)


# ── Importance sampling ───────────────────────────────────────────────────────
def draw_particles(
    p: Program,
    guide: str,
    model: str,
    so: GuidanceTrace,
    n: int,
    rng: np.random.Generator,
    guide_args: Sequence[Value] = (),
    model_args: Sequence[Value] = (),
) -> list[Particle]:
    out: list[Particle] = []
    for _ in range(n):
        rec = joint_execute(p, guide, model, guide_args, model_args, so, rng)
        out.append(Particle(
            trace=rec.latent,
            log_importance=rec.model_log_weight - rec.guide_log_weight,
            guide_log_weight=rec.guide_log_weight,
            model_log_weight=rec.model_log_weight,
        ))
    return out


def summarize(particles: Iterable[Particle]) -> ParticleSet:
    """Attach effective sample size and the log-evidence estimate."""
    ps = tuple(particles)
    lw = np.array([q.log_importance for q in ps], dtype=float)
    if not ps or np.all(np.isneginf(lw)):
        return ParticleSet(ps, 0.0, IMPOSSIBLE)
    w = np.exp(lw - lw.max())
    ess = float(w.sum() ** 2 / np.square(w).sum())
    log_evidence = float(logsumexp(lw) - math.log(len(ps)))
    return ParticleSet(ps, ess, log_evidence)


def importance_sample(
    p: Program,
    guide: str,
    model: str,
    so: GuidanceTrace,
    n: int,
    rng: np.random.Generator,
    guide_args: Sequence[Value] = (),
    model_args: Sequence[Value] = (),
) -> ParticleSet:
    if n < 1:
        raise ValueError("importance sampling needs n >= 1")
    started = time.perf_counter()
    result = summarize(draw_particles(p, guide, model, so, n, rng, guide_args, model_args))
    log.info("is_finished", guide=guide, model=model, n=n, ess=round(result.ess, 3),
             elapsed_ms=round((time.perf_counter() - started) * 1000, 1))
    return result


def latent_value(trace: GuidanceTrace, index: int) -> float:
    """The ``index``-th sample value of ``trace`` as a float (branches and folds are skipped)."""
    samples = [m.value for m in trace.messages if isinstance(m, (PSample, CSample))]
    try:
        v = samples[index]
    except IndexError:
        raise IndexError(f"trace holds {len(samples)} sample(s), index {index} requested") from None
    if isinstance(v, BoolV):
        return 1.0 if v.value else 0.0
    if isinstance(v, (RealV, NatV)):
        return float(v.value)
    return 0.0


def posterior_expectation(
    particles: Union[ParticleSet, Sequence[Particle]],
    f: Callable[[GuidanceTrace], float],
) -> float:
    """Self-normalized estimate of E[f] under the posterior."""
    ps = particles.particles if isinstance(particles, ParticleSet) else tuple(particles)
    lw = np.array([q.log_importance for q in ps], dtype=float)
    if not ps or np.all(np.isneginf(lw)):
        raise AllImpossible(f"all {len(ps)} particle(s) have zero weight")
    w = np.exp(lw - lw.max())
    live = w > 0.0
    values = np.array([f(q.trace) for q, ok in zip(ps, live) if ok], dtype=float)
    return float(np.dot(w[live], values) / w[live].sum())


# ── Metropolis–Hastings ───────────────────────────────────────────────────────
def backward_log_weight(p: Program, proposal: str, new: GuidanceTrace, old: GuidanceTrace) -> LogWeight:
    """Density of proposing ``old`` from ``new``; IMPOSSIBLE when the proposal cannot produce it."""
    try:
        w, _ = eval_proc(p, proposal, (TraceV(new),), EMPTY_TRACE, old)
    except (TraceMismatch, TraceGetOutOfBounds, TraceGetTypeMismatch):
        return IMPOSSIBLE
    return w


def mh_step(
    p: Program,
    proposal: str,
    model: str,
    so: GuidanceTrace,
    state: ChainState,
    rng: np.random.Generator,
    model_args: Sequence[Value] = (),
) -> tuple[ChainState, bool]:
    rec = joint_execute(p, proposal, model, (TraceV(state.trace),), model_args, so, rng)
    w_bwd = backward_log_weight(p, proposal, rec.latent, state.trace)
    moved = replace(state, step=state.step + 1)
    if is_impossible(w_bwd):
        log.debug("mh_backward_impossible", step=moved.step)
        return replace(moved, backward_impossible=state.backward_impossible + 1), False
    if is_impossible(rec.model_log_weight):
        return moved, False
    log_alpha = min(0.0, (rec.model_log_weight + w_bwd) - (state.model_log_weight + rec.guide_log_weight))
    if rng.random() < math.exp(log_alpha):
        return replace(moved, trace=rec.latent, model_log_weight=rec.model_log_weight,
                       accepted=state.accepted + 1), True
    return moved, False


def mh_chain(
    p: Program,
    proposal: str,
    model: str,
    so: GuidanceTrace,
    init: GuidanceTrace,
    steps: int,
    burnin: int,
    rng: np.random.Generator,
    model_args: Sequence[Value] = (),
) -> list[ChainState]:
    """Initial state followed by ``steps`` recorded states; ``burnin`` steps run first and are dropped."""
    w0 = model_log_density(p, model, so, init, model_args)
    if is_impossible(w0):
        raise InitImpossible("the initial latent trace has zero model density")
    started = time.perf_counter()
    state = ChainState(init, w0)
    for _ in range(burnin):
        state, _ = mh_step(p, proposal, model, so, state, rng, model_args)
    state = ChainState(state.trace, state.model_log_weight)
    chain = [state]
    for _ in range(steps):
        state, _ = mh_step(p, proposal, model, so, state, rng, model_args)
        chain.append(state)
    log.info("mh_finished", proposal=proposal, model=model, steps=steps, burnin=burnin,
             acceptance_rate=round(state.acceptance_rate, 4),
             backward_impossible=state.backward_impossible,
             elapsed_ms=round((time.perf_counter() - started) * 1000, 1))
    return chain


# ── Variational inference ─────────────────────────────────────────────────────
def guide_args_for(p: Program, guide: str, theta: ViParams) -> tuple[Value, ...]:
    """Order θ by the guide's parameter list, checking names and domains."""
    decl = p.get_proc(guide)
    if decl is None:
        raise ViParamMismatch(f"unknown guide {guide!r}")
    declared = [name for name, _ in decl.params]
    if sorted(declared) != sorted(theta.names):
        raise ViParamMismatch(f"guide {guide} takes ({', '.join(declared)}) "
                              f"but parameters ({', '.join(theta.names)}) were given")
    values = theta.values()
    args: list[Value] = []
    for name, ty in decl.params:
        v = RealV(values[name])
        if not value_in_scalar(v, ty):
            raise ViParamMismatch(f"parameter {name}={values[name]} does not fit its declared type")
        args.append(v)
    return tuple(args)


def elbo_samples(
    p: Program,
    guide: str,
    theta: ViParams,
    model: str,
    so: GuidanceTrace,
    n: int,
    rng: np.random.Generator,
    model_args: Sequence[Value] = (),
) -> np.ndarray:
    args = guide_args_for(p, guide, theta)
    out = np.empty(n, dtype=float)
    for i in range(n):
        rec = joint_execute(p, guide, model, args, model_args, so, rng)
        out[i] = rec.model_log_weight - rec.guide_log_weight
    return out


def elbo_estimate(
    p: Program,
    guide: str,
    theta: ViParams,
    model: str,
    so: GuidanceTrace,
    n: int,
    rng: np.random.Generator,
    model_args: Sequence[Value] = (),
) -> float:
    return float(elbo_samples(p, guide, theta, model, so, n, rng, model_args).mean())


def _stderr(xs: np.ndarray) -> float:
    return float(xs.std(ddof=1) / math.sqrt(len(xs))) if len(xs) > 1 else 0.0


def vi_optimize(
    p: Program,
    guide: str,
    theta0: ViParams,
    model: str,
    so: GuidanceTrace,
    iters: int,
    n_per_iter: int,
    step_size: float,
    rng: np.random.Generator,
    fd_step: float | None = None,
    model_args: Sequence[Value] = (),
) -> tuple[ViParams, list[ElboRecord]]:
    """Gradient ascent on the ELBO in unconstrained space.

    Each iteration draws one seed and reuses it for every evaluation of that
    iteration, so the central differences compare like with like.
    """
    h = fd_step if fd_step is not None else get_settings().fd_step
    guide_args_for(p, guide, theta0)
    theta = theta0
    u = theta.unconstrained()
    trajectory: list[ElboRecord] = []

    def evaluate(t: ViParams, seed: int) -> np.ndarray:
        xs = elbo_samples(p, guide, t, model, so, n_per_iter, np.random.default_rng(seed), model_args)
        if not np.all(np.isfinite(xs)):
            raise NonFiniteGradient(f"non-finite ELBO sample at {t.values()}")
        return xs

    started = time.perf_counter()
    for it in range(iters):
        seed = int(rng.integers(0, 2**63 - 1))
        xs = evaluate(theta, seed)
        grad = np.zeros_like(u)
        for j in range(len(u)):
            e = np.zeros_like(u)
            e[j] = h
            up = evaluate(theta.with_unconstrained(u + e), seed).mean()
            down = evaluate(theta.with_unconstrained(u - e), seed).mean()
            grad[j] = (up - down) / (2.0 * h)
        if not np.all(np.isfinite(grad)):
            raise NonFiniteGradient(f"gradient {grad.tolist()} at iteration {it}")
        trajectory.append(ElboRecord(iteration=it, elbo=float(xs.mean()), stderr=_stderr(xs),
                                     params=theta.values()))
        log.debug("vi_iteration", iteration=it, elbo=float(xs.mean()), grad=grad.tolist())
        if step_size != 0.0:
            u = u + step_size * grad
            theta = theta.with_unconstrained(u)
    log.info("vi_finished", guide=guide, model=model, iters=iters, params=theta.values(),
             elapsed_ms=round((time.perf_counter() - started) * 1000, 1))
    return theta, trajectory
