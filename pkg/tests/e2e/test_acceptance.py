"""
End-to-end acceptance tests for gpp.

Runs the CLI on the bundled corpus and compares estimates with closed forms
or numerical integrals:
  1. Scores of hand-made traces
  2. Compatibility verdicts for every guide in the corpus
  3. Importance sampling on the branching, Poisson-by-uniforms and polar-method models
  4. Metropolis–Hastings on the noisy coin
  5. Variational fits on the conjugate normal model

Run:
    pytest tests/e2e/ -v -m e2e
"""
from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate, stats

from tests.conftest import CORPUS
from tests.e2e.conftest import E2E_MH_STEPS, E2E_PARTICLES, E2E_VI_ITERS, E2E_VI_SAMPLES, read_jsonl

pytestmark = [pytest.mark.e2e, pytest.mark.slow, pytest.mark.timeout(900)]

OBS = 0.8


def _branching_posterior() -> tuple[float, float, float]:
    """(P(x < 2), E[x], log evidence) for the branching model given OBS."""
    short = stats.gamma(2.0).cdf(2.0)
    lik_short = stats.norm(-1.0, 1.0).pdf(OBS)
    lik_long, _ = integrate.quad(lambda m: stats.beta(3.0, 1.0).pdf(m) * stats.norm(m, 1.0).pdf(OBS), 0.0, 1.0)
    a = short * lik_short
    b = (1.0 - short) * lik_long
    # x * Gamma(2, 1) density = 2 * Gamma(3, 1) density
    mean = (2.0 * stats.gamma(3.0).cdf(2.0) * lik_short + 2.0 * stats.gamma(3.0).sf(2.0) * lik_long) / (a + b)
    return a / (a + b), mean, math.log(a + b)


def _normalized(records) -> np.ndarray:
    lw = np.array([float(r["log_weight"]) for r in records])
    w = np.exp(lw - lw.max())
    return w / w.sum()


# ─────────────────────────────────────────────────────────────────────────────
# 1. Scores
# ─────────────────────────────────────────────────────────────────────────────

@pytest.mark.parametrize("model,latent,obs,expected", [
    ("M1", "channels_a", "channels_b", -2.8378770664),
    ("M2", None, "channels_a", -2.9189385332),
])
async def test_scores(cli, model, latent, obs, expected):
    args = ["score", CORPUS / "channels.gpp", "--model", model, "--obs", CORPUS / f"{obs}.json"]
    if latent:
        args += ["--latent", CORPUS / f"{latent}.json"]
    res = await cli(*args)
    assert res.code == 0, res.stderr
    assert float(res.stdout) == pytest.approx(expected, abs=1e-9)


async def test_score_of_recorded_latent(cli):
    res = await cli("score", CORPUS / "model1.gpp", "--model", "Model",
                    "--latent", CORPUS / "model1_latent.json", "--obs", CORPUS / "model1_obs.json")
    assert res.code == 0, res.stderr
    assert float(res.stdout) == pytest.approx(-1.0 + stats.norm(-1.0, 1.0).logpdf(OBS), abs=1e-9)


# ─────────────────────────────────────────────────────────────────────────────
# 2. Compatibility
# ─────────────────────────────────────────────────────────────────────────────

@pytest.mark.parametrize("source,model,guide,accepted", [
    ("model1", "Model", "Guide1", True),
    ("model1", "Model", "Guide2", True),
    ("model1", "Model", "Prior", True),
    ("model1", "Model", "Guide1Pois", False),
    ("model1", "Model", "Guide2Normal", False),
    ("pcfg", "Pcfg", "PcfgGuide", True),
    ("ptrace", "Ptrace", "PtraceGuide", True),
    ("outlier", "Outlier", "OutlierGuide", True),
    ("outlier", "Outlier", "OutlierMove", True),
    ("coin", "Coin", "Flip", True),
    ("conjugate", "Conj", "Q", True),
    ("marsaglia", "Marsaglia", "MarsagliaGuide", True),
])
async def test_compat_verdicts(cli, source, model, guide, accepted):
    res = await cli("compat", CORPUS / f"{source}.gpp", "--model", model, "--guide", guide)
    assert res.code == (0 if accepted else 1), res.stderr
    assert res.summary()["verdict"] == ("accept" if accepted else "reject")


# ─────────────────────────────────────────────────────────────────────────────
# 3. Importance sampling
# ─────────────────────────────────────────────────────────────────────────────

async def test_branching_model_posterior(cli, tmp_path):
    out = tmp_path / "is.jsonl"
    res = await cli("run", CORPUS / "model1.gpp", "--model", "Model", "--guide", "Guide1",
                    "--obs", CORPUS / "model1_obs.json", "--n", E2E_PARTICLES, "--seed", 11, "--out", out)
    assert res.code == 0, res.stderr
    records = read_jsonl(out)
    assert len(records) == E2E_PARTICLES
    w = _normalized(records)
    x = np.array([r["trace"][0]["value"] for r in records])
    p_short, mean, log_z = _branching_posterior()
    assert float(np.dot(w, x < 2.0)) == pytest.approx(p_short, abs=0.01)
    assert float(np.dot(w, x)) == pytest.approx(mean, abs=0.05)
    assert float(res.summary()["log_evidence"]) == pytest.approx(log_z, abs=0.03)


async def test_poisson_by_uniforms_posterior(cli, tmp_path):
    out = tmp_path / "ptrace.jsonl"
    n = max(E2E_PARTICLES // 4, 1000)
    res = await cli("run", CORPUS / "ptrace.gpp", "--model", "Ptrace", "--guide", "PtraceGuide",
                    "--obs", CORPUS / "ptrace_obs.json", "--n", n, "--seed", 2, "--out", out)
    assert res.code == 0, res.stderr
    records = read_jsonl(out)
    w = _normalized(records)
    k = np.array([sum(m["kind"] == "fold" for m in r["trace"]) - 1 for r in records])
    assert float(np.dot(w, k)) == pytest.approx(3.0, abs=0.05)


async def test_polar_method_is_standard_normal(cli, tmp_path):
    out = tmp_path / "polar.jsonl"
    n = max(E2E_PARTICLES // 4, 1000)
    res = await cli("run", CORPUS / "marsaglia.gpp", "--model", "Marsaglia", "--guide", "MarsagliaGuide",
                    "--obs", CORPUS / "empty.json", "--n", n, "--seed", 5, "--out", out)
    assert res.code == 0, res.stderr
    records = read_jsonl(out)
    assert float(res.summary()["ess"]) == pytest.approx(n)
    xs = []
    for r in records:
        u, v = [m["value"] for m in r["trace"] if m["kind"] == "psample"][-2:]
        x, y = 2.0 * u - 1.0, 2.0 * v - 1.0
        s = x * x + y * y
        assert s < 1.0
        xs.append(x * math.sqrt(-2.0 * math.log(s) / s))
    xs = np.array(xs)
    assert xs.mean() == pytest.approx(0.0, abs=0.03)
    assert xs.var() == pytest.approx(1.0, abs=0.05)


# ─────────────────────────────────────────────────────────────────────────────
# 4. Metropolis–Hastings
# ─────────────────────────────────────────────────────────────────────────────

async def test_coin_chain(cli, tmp_path):
    out = tmp_path / "mh.jsonl"
    res = await cli("run", CORPUS / "coin.gpp", "--engine", "mh", "--model", "Coin", "--guide", "Flip",
                    "--obs", CORPUS / "coin_obs.json", "--init", CORPUS / "coin_init.json",
                    "--steps", E2E_MH_STEPS, "--burnin", 1000, "--seed", 7, "--out", out)
    assert res.code == 0, res.stderr
    states = read_jsonl(out)[1:]
    freq = np.mean([s["trace"][0]["value"] for s in states])
    assert freq == pytest.approx(0.4 / 0.55, abs=0.01)
    assert float(res.summary()["acceptance_rate"]) > 0.5


# ─────────────────────────────────────────────────────────────────────────────
# 5. Variational inference
# ─────────────────────────────────────────────────────────────────────────────

def _final(res) -> dict[str, float]:
    pairs = res.summary()["final"].split()
    return {k: float(v) for k, v in (p.split("=") for p in pairs)}


def _assert_elbo_near_evidence(records) -> None:
    """The last ELBO lies within 3 standard errors of the log evidence."""
    last = records[-1]
    elbo, se = float(last["elbo"]), float(last["stderr"])
    log_z = float(stats.norm(0.0, math.sqrt(2.0)).logpdf(1.5))
    assert log_z - 3.0 * se - 1e-9 <= elbo <= log_z + 3.0 * se + 1e-9, (elbo, se, log_z)


async def test_fit_mean_only(cli, tmp_path):
    out = tmp_path / "vi_mean.jsonl"
    res = await cli("run", CORPUS / "conjugate.gpp", "--engine", "vi", "--model", "Conj", "--guide", "Q1",
                    "--obs", CORPUS / "conjugate_obs.json", "--param", "m:identity:0.0",
                    "--iters", E2E_VI_ITERS, "--n", E2E_VI_SAMPLES, "--step-size", 0.05, "--seed", 3,
                    "--out", out)
    assert res.code == 0, res.stderr
    assert _final(res)["m"] == pytest.approx(0.75, abs=0.05)
    records = read_jsonl(out)
    assert len(records) == E2E_VI_ITERS
    _assert_elbo_near_evidence(records)


async def test_fit_mean_and_scale(cli, tmp_path):
    out = tmp_path / "vi_scale.jsonl"
    res = await cli("run", CORPUS / "conjugate.gpp", "--engine", "vi", "--model", "Conj", "--guide", "Q",
                    "--obs", CORPUS / "conjugate_obs.json", "--param", "m:identity:0.0", "--param", "s:exp:1.0",
                    "--iters", E2E_VI_ITERS, "--n", E2E_VI_SAMPLES, "--step-size", 0.05, "--seed", 4,
                    "--out", out)
    assert res.code == 0, res.stderr
    fit = _final(res)
    assert fit["m"] == pytest.approx(0.75, abs=0.05)
    assert fit["s"] == pytest.approx(math.sqrt(0.5), abs=0.05)
    _assert_elbo_near_evidence(read_jsonl(out))
