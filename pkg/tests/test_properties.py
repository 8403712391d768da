"""Tests: properties checked over many random executions, generated traces and generated programs."""
from __future__ import annotations

import math

import pytest

from gpp.exceptions import Stuck, TraceMismatch
from gpp.schemas.records import IMPOSSIBLE
from gpp.schemas.syntax import (
    DIST_ARITY,
    App,
    BinOp,
    Bnd,
    BoolLit,
    BranchRecv,
    BranchSend,
    Call,
    Cond,
    DistExpr,
    Lambda,
    Let,
    NatLit,
    PrimApp,
    ProcDecl,
    Program,
    RealLit,
    Ret,
    SampleRecv,
    SampleSend,
    TraceGet,
    TrivLit,
    Var,
    WILDCARD,
)
from gpp.schemas.types import (
    BOOL,
    END,
    NAT,
    POS_REAL,
    REAL,
    UNIT,
    UNIT_REAL,
    Arrow,
    ChoiceC,
    ChoiceP,
    Dist,
    FinNat,
    OpApp,
    SampleC,
    SampleP,
    TraceOf,
    TyVar,
    TypeDef,
)
from gpp.services.guide_types import check_trace, generate_trace, is_amp_free, is_oplus_free
from gpp.services.interpreter import eval_proc, reduce_proc
from gpp.services.parser import format_program, parse_program
from gpp.services.scheduler import joint_execute
from gpp.services.typecheck import check_model_guide, infer_program_types, proc_protocols
from tests.conftest import corpus_trace, load_corpus

pytestmark = pytest.mark.slow

PAIRS = [
    ("model1", "Model", "Guide1", "model1_obs"),
    ("model1", "Model", "Prior", "model1_obs"),
    ("coin", "Coin", "CoinGuide", "coin_obs"),
    ("outlier", "Outlier", "OutlierGuide", "outlier_obs"),
    ("conjugate", "Conj", "ConjPrior", "conjugate_obs"),
    ("ptrace", "Ptrace", "PtraceGuide", "ptrace_obs"),
    ("marsaglia", "Marsaglia", "MarsagliaGuide", "empty"),
]


@pytest.mark.parametrize("name,model,guide,obs", PAIRS)
def test_joint_latents_inhabit_the_checked_protocol(name, model, guide, obs, rng):
    p = load_corpus(name)
    report = check_model_guide(p, model, guide)
    assert report.accepted
    defs = {td.op: td for td in report.typedefs}
    so = corpus_trace(obs)
    for _ in range(1000):
        rec = joint_execute(p, guide, model, (), (), so, rng)
        assert check_trace(rec.latent, report.latent_type, defs)
        assert math.isfinite(rec.guide_log_weight)
        assert not math.isnan(rec.model_log_weight)


@pytest.mark.parametrize("name,model,guide,obs", PAIRS)
def test_evaluation_and_reduction_agree(name, model, guide, obs, rng):
    p = load_corpus(name)
    so = corpus_trace(obs)
    for _ in range(1000):
        rec = joint_execute(p, guide, model, (), (), so, rng)
        w, v = eval_proc(p, model, (), rec.latent, so)
        assert w == pytest.approx(rec.model_log_weight, abs=1e-9)
        if math.isfinite(w):
            assert reduce_proc(p, model, (), rec.latent, so) == v


@pytest.mark.parametrize("name,model,obs", [
    ("model1", "Model", "model1_obs"),
    ("coin", "Coin", "coin_obs"),
    ("outlier", "Outlier", "outlier_obs"),
])
def test_generated_latents_score_or_get_stuck(name, model, obs, rng):
    p = load_corpus(name)
    sigs, defs = infer_program_types(p)
    latent_type, _ = proc_protocols(p, sigs, model)
    so = corpus_trace(obs)
    scored = 0
    for _ in range(200):
        sl = generate_trace(latent_type, defs, rng, budget=60)
        if sl is None:
            continue
        try:
            w, v = eval_proc(p, model, (), sl, so)
        except TraceMismatch:
            with pytest.raises(Stuck):
                reduce_proc(p, model, (), sl, so)
            continue
        assert not math.isnan(w)
        if w == IMPOSSIBLE:
            with pytest.raises(Stuck):
                reduce_proc(p, model, (), sl, so)
        else:
            scored += 1
            assert reduce_proc(p, model, (), sl, so) == v
    assert scored > 0


@pytest.mark.parametrize("name,model,obs", [
    ("conjugate", "Conj", "conjugate_obs"),
    ("coin", "Coin", "coin_obs"),
    ("outlier", "Outlier", "outlier_obs"),
])
def test_choice_free_latents_always_score(name, model, obs, rng):
    p = load_corpus(name)
    sigs, defs = infer_program_types(p)
    latent_type, _ = proc_protocols(p, sigs, model)
    assert is_amp_free(latent_type, defs) and is_oplus_free(latent_type, defs)
    so = corpus_trace(obs)
    for _ in range(1000):
        sl = generate_trace(latent_type, defs, rng, budget=60)
        w, _ = eval_proc(p, model, (), sl, so)
        assert math.isfinite(w), sl


# ── Printer/parser round trip on generated programs ──────────────────────────
_NAMES = ("x", "y", "z", "mu", "k2")
_CHANS = ("a", "b")
_SCALARS = (UNIT, BOOL, UNIT_REAL, POS_REAL, REAL, NAT, FinNat(3))


def _pick(rng, options):
    return options[int(rng.integers(len(options)))]


def _gen_guide(rng, depth: int):
    if depth == 0 or rng.random() < 0.3:
        return _pick(rng, (END, TyVar("X")))
    k = int(rng.integers(4))
    if k == 0:
        return OpApp("T", _gen_guide(rng, depth - 1))
    if k == 1:
        return SampleP(_pick(rng, _SCALARS), _gen_guide(rng, depth - 1))
    if k == 2:
        return SampleC(_pick(rng, _SCALARS), _gen_guide(rng, depth - 1))
    ctor = ChoiceC if rng.random() < 0.5 else ChoiceP
    return ctor(_gen_guide(rng, depth - 1), _gen_guide(rng, depth - 1))


def _gen_base(rng, depth: int):
    if depth == 0 or rng.random() < 0.5:
        return _pick(rng, _SCALARS)
    k = int(rng.integers(3))
    if k == 0:
        return Dist(_pick(rng, _SCALARS))
    if k == 1:
        return TraceOf(_gen_guide(rng, 2) if rng.random() < 0.5 else None)
    return Arrow(_gen_base(rng, depth - 1), _gen_base(rng, depth - 1))


def _gen_expr(rng, depth: int):
    if depth == 0 or rng.random() < 0.3:
        k = int(rng.integers(5))
        if k == 0:
            return Var(_pick(rng, _NAMES))
        if k == 1:
            return TrivLit()
        if k == 2:
            return BoolLit(bool(rng.random() < 0.5))
        if k == 3:
            value = round(float(rng.uniform(0.0, 10.0)), 3)
            return RealLit(-value if rng.random() < 0.3 else value)
        return NatLit(int(rng.integers(20)))
    def sub():
        return _gen_expr(rng, depth - 1)

    k = int(rng.integers(8))
    if k == 0:
        return Cond(sub(), sub(), sub())
    if k == 1:
        return BinOp(_pick(rng, ("+", "-", "*", "/", "<", "<=", "==", "and", "or")), sub(), sub())
    if k == 2:
        return Lambda(_pick(rng, _NAMES), _gen_base(rng, 2), sub())
    if k == 3:
        fn = _pick(rng, (Var("f"), Lambda("x", REAL, sub())))
        return App(fn, sub())
    if k == 4:
        return Let(sub(), _pick(rng, _NAMES), sub())
    if k == 5:
        family = _pick(rng, tuple(DIST_ARITY))
        arity = DIST_ARITY[family] or int(rng.integers(1, 4))
        return DistExpr(family, tuple(sub() for _ in range(arity)))
    if k == 6:
        return PrimApp(_pick(rng, ("sqrt", "log", "exp")), sub())
    return TraceGet(_pick(rng, _SCALARS), sub(), sub())


def _gen_cmd(rng, depth: int):
    def expr():
        return _gen_expr(rng, 2)

    if depth == 0 or rng.random() < 0.3:
        k = int(rng.integers(4))
        if k == 0:
            return Ret(expr())
        if k == 1:
            return Call("P0", tuple(expr() for _ in range(int(rng.integers(3)))))
        if k == 2:
            return SampleRecv(expr(), _pick(rng, _CHANS))
        return SampleSend(expr(), _pick(rng, _CHANS))
    def sub():
        return _gen_cmd(rng, depth - 1)

    k = int(rng.integers(3))
    if k == 0:
        return Bnd(sub(), _pick(rng, _NAMES + (WILDCARD,)), sub())
    if k == 1:
        return BranchSend(expr(), sub(), sub(), _pick(rng, _CHANS))
    return BranchRecv(sub(), sub(), _pick(rng, _CHANS))


def _gen_program(rng) -> Program:
    typedefs = tuple(TypeDef(f"T{i}", "X", _gen_guide(rng, 3)) for i in range(int(rng.integers(3))))
    procs = []
    for i in range(int(rng.integers(1, 4))):
        n_params = int(rng.integers(len(_NAMES)))
        params = tuple((name, _gen_base(rng, 2)) for name in _NAMES[:n_params])
        ret = _gen_base(rng, 1) if rng.random() < 0.5 else None
        consume = "a" if rng.random() < 0.5 else None
        provide = "b" if rng.random() < 0.5 else None
        procs.append(ProcDecl(f"P{i}", params, ret, consume, provide, _gen_cmd(rng, 4)))
    return Program(typedefs, tuple(procs))


def test_format_then_parse_is_identity(rng):
    for _ in range(300):
        p = _gen_program(rng)
        text = format_program(p)
        assert parse_program(text) == p, text
