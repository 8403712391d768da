"""Tests: joint guide/model execution."""
from __future__ import annotations

import math

import numpy as np
import pytest

from gpp.exceptions import DeadlockError, ObservationExhausted, ObservationMismatch, StepLimitExceeded
from gpp.schemas.trace import EMPTY_TRACE, FOLD, CBranch, GuidanceTrace, PBranch, PSample
from gpp.schemas.values import TRIV, NatV, RealV
from gpp.services.guide_types import check_trace
from gpp.services.interpreter import eval_proc, model_log_density
from gpp.services.parser import parse_program
from gpp.services.scheduler import joint_execute
from gpp.services.typecheck import infer_program_types, proc_protocols
from tests.conftest import corpus_trace


def _latent_protocol(p, model):
    sigs, defs = infer_program_types(p)
    a, _ = proc_protocols(p, sigs, model)
    return a, defs


# ── Shapes ────────────────────────────────────────────────────────────────────
def test_branching_pair_shapes(corpus, rng):
    p = corpus("model1")
    so = corpus_trace("model1_obs")
    a, defs = _latent_protocol(p, "Model")
    seen = set()
    for _ in range(200):
        rec = joint_execute(p, "Guide1", "Model", (), (), so, rng)
        msgs = rec.latent.messages
        assert isinstance(msgs[0], PSample) and isinstance(msgs[1], CBranch)
        x = msgs[0].value.value
        assert msgs[1].choice == (x < 2.0)
        assert len(msgs) == (2 if x < 2.0 else 3)
        assert rec.model_result == RealV(x)
        assert rec.guide_result == TRIV
        assert rec.obs == so
        assert check_trace(rec.latent, a, defs)
        seen.add(len(msgs))
    assert seen == {2, 3}


def test_weights_agree_with_replay(corpus, rng):
    p = corpus("model1")
    so = corpus_trace("model1_obs")
    for _ in range(50):
        rec = joint_execute(p, "Guide1", "Model", (), (), so, rng)
        wg, _ = eval_proc(p, "Guide1", (), EMPTY_TRACE, rec.latent)
        assert rec.guide_log_weight == pytest.approx(wg, abs=1e-12)
        assert rec.model_log_weight == pytest.approx(model_log_density(p, "Model", so, rec.latent), abs=1e-12)
        assert math.isfinite(rec.model_log_weight)


def test_integer_observation_in_real_slot(corpus):
    p = corpus("model1")
    as_int = GuidanceTrace.of(PSample(NatV(1)))
    as_real = GuidanceTrace.of(PSample(RealV(1.0)))
    a = joint_execute(p, "Guide1", "Model", (), (), as_int, np.random.default_rng(5))
    b = joint_execute(p, "Guide1", "Model", (), (), as_real, np.random.default_rng(5))
    assert math.isfinite(a.model_log_weight)
    assert a.model_log_weight == pytest.approx(b.model_log_weight, abs=1e-12)
    assert a.latent == b.latent


def test_same_seed_same_execution(corpus):
    p = corpus("model1")
    so = corpus_trace("model1_obs")
    a = [joint_execute(p, "Guide1", "Model", (), (), so, np.random.default_rng(8)) for _ in range(2)]
    assert a[0] == a[1]


def test_calls_record_folds(corpus, rng):
    p = corpus("ptrace")
    so = corpus_trace("ptrace_obs")
    a, defs = _latent_protocol(p, "Ptrace")
    for _ in range(20):
        rec = joint_execute(p, "PtraceGuide", "Ptrace", (), (), so, rng)
        msgs = rec.latent.messages
        assert len(msgs) % 3 == 0
        assert all(m == FOLD for m in msgs[::3])
        assert [m.choice for m in msgs[2::3]] == [False] * (len(msgs) // 3 - 1) + [True]
        assert check_trace(rec.latent, a, defs)


def test_recursive_pair_within_step_limit(corpus, rng):
    p = corpus("pcfg")
    a, defs = _latent_protocol(p, "Pcfg")
    finished = 0
    for _ in range(20):
        try:
            rec = joint_execute(p, "PcfgGuide", "Pcfg", (), (), EMPTY_TRACE, rng, max_steps=5_000)
        except StepLimitExceeded:
            continue
        finished += 1
        assert check_trace(rec.latent, a, defs)
        assert isinstance(rec.model_result, RealV)
    assert finished > 0


def test_model_choice_is_recorded_as_cbranch(corpus, rng):
    rec = joint_execute(corpus("coin"), "CoinGuide", "Coin", (), (), corpus_trace("coin_obs"), rng)
    assert len(rec.latent) == 1
    assert rec.guide_log_weight == pytest.approx(math.log(0.5))


def test_guide_choice_is_recorded_as_pbranch(rng):
    p = parse_program(
        "proc M() consume l = if[recv l] * then return 1 else return 2\n"
        "proc G() provide l = if[send l] false then return () else return ()"
    )
    rec = joint_execute(p, "G", "M", (), (), EMPTY_TRACE, rng)
    assert rec.latent == GuidanceTrace.of(PBranch(False))
    assert rec.model_result.value == 2


# ── Failures ──────────────────────────────────────────────────────────────────
@pytest.mark.parametrize("guide", [
    "proc G() provide latent = return ()",
    "proc G() provide latent = sample[send](latent, Unif); sample[send](latent, Unif)",
    "proc G() provide latent = if[send latent] true then return () else return ()",
])
def test_deadlock(guide, rng):
    p = parse_program(
        guide + "\nproc M() consume latent = x <- sample[recv](latent, Unif); return x"
    )
    with pytest.raises(DeadlockError):
        joint_execute(p, "G", "M", (), (), EMPTY_TRACE, rng)


def test_both_sides_sending_deadlock(rng):
    p = parse_program(
        "proc G() provide l = sample[send](l, Unif)\n"
        "proc M() consume l = sample[send](l, Unif)"
    )
    with pytest.raises(DeadlockError, match="blocked"):
        joint_execute(p, "G", "M", (), (), EMPTY_TRACE, rng)


def test_guide_consuming_deadlocks(rng):
    p = parse_program(
        "proc G() consume a provide l = sample[recv](a, Unif)\n"
        "proc M() consume l = sample[recv](l, Unif)"
    )
    with pytest.raises(DeadlockError, match="no provider"):
        joint_execute(p, "G", "M", (), (), EMPTY_TRACE, rng)


def test_observation_exhausted(corpus, rng):
    with pytest.raises(ObservationExhausted):
        joint_execute(corpus("model1"), "Guide1", "Model", (), (), EMPTY_TRACE, rng)


@pytest.mark.parametrize("obs", [
    GuidanceTrace.of(CBranch(True)),
    GuidanceTrace.of(PSample(RealV(0.8)), PSample(RealV(0.8))),
])
def test_observation_mismatch(obs, corpus, rng):
    with pytest.raises(ObservationMismatch):
        joint_execute(corpus("model1"), "Guide1", "Model", (), (), obs, rng)


def test_observation_outside_support(rng):
    p = parse_program(
        "proc G() provide l = sample[send](l, Unif)\n"
        "proc M() consume l provide o = x <- sample[recv](l, Unif); observe(o, Gamma(1.0, 1.0))"
    )
    with pytest.raises(ObservationMismatch, match="support"):
        joint_execute(p, "G", "M", (), (), GuidanceTrace.of(PSample(RealV(-1.0))), rng)
