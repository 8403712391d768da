"""Run router – execute IS, MH or VI on a checked model/guide pair."""
from __future__ import annotations

import argparse
import asyncio
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import structlog
from pydantic import ValidationError

from gpp.config import get_settings
from gpp.crud import chain_record, elbo_record, load_run_config, particle_record, read_trace, write_jsonl
from gpp.dependencies import get_program, resolve_seed
from gpp.exceptions import ConfigError, IncompatibleGuide
from gpp.routers.compat import compat_report
from gpp.schemas.run import RunConfig
from gpp.schemas.vi import ViParam, ViParams
from gpp.services.runner import EngineRunner

log = structlog.get_logger(__name__)

_PATH_KEYS = ("source", "obs", "out", "init")


def register(subparsers: argparse._SubParsersAction) -> None:
    p = subparsers.add_parser("run", help="run an inference engine")
    p.add_argument("path", type=Path, nargs="?", default=None, help="source file (or set source in --config)")
    p.add_argument("--config", type=Path, default=None, help="YAML run configuration; flags override it")
    p.add_argument("--model")
    p.add_argument("--guide", help="guide (is, vi) or proposal (mh) procedure")
    p.add_argument("--obs", type=Path, help="observation trace JSON")
    p.add_argument("--engine", choices=("is", "mh", "vi"))
    p.add_argument("--n", type=int, help="IS particles / VI samples per iteration")
    p.add_argument("--steps", type=int, help="MH recorded steps")
    p.add_argument("--burnin", type=int, help="MH discarded steps")
    p.add_argument("--iters", type=int, help="VI iterations")
    p.add_argument("--step-size", dest="step_size", type=float, help="VI step size")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path, help="JSON-lines output file")
    p.add_argument("--init", type=Path, help="MH initial latent trace JSON")
    p.add_argument("--param", dest="params", action="append", metavar="NAME:TRANSFORM:INIT",
                   help="VI parameter (repeatable)")
    p.add_argument("--workers", type=int)
    p.set_defaults(handler=handle)


# ── Configuration ─────────────────────────────────────────────────────────────
def _coerce_params(raw: Any) -> list[Any]:
    out = []
    for item in raw or ():
        out.append(ViParam.parse_flag(item) if isinstance(item, str) else item)
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    """Merge the YAML file (if any) with explicit flags; flags win."""
    data: dict[str, Any] = {}
    if args.config is not None:
        data = load_run_config(args.config)
        base = args.config.parent
        for key in _PATH_KEYS:
            if data.get(key) is not None and not Path(data[key]).is_absolute():
                data[key] = base / data[key]
    flags = {
        "source": args.path,
        "model": args.model,
        "guide": args.guide,
        "obs": args.obs,
        "engine": args.engine,
        "n": args.n,
        "steps": args.steps,
        "burnin": args.burnin,
        "iters": args.iters,
        "step_size": args.step_size,
        "seed": args.seed,
        "out": args.out,
        "init": args.init,
        "params": args.params,
        "workers": args.workers,
    }
    data.update({k: v for k, v in flags.items() if v is not None})
    data["seed"] = resolve_seed(data.get("seed"))
    try:
        data["params"] = _coerce_params(data.get("params"))
        return RunConfig.model_validate(data)
    except (ValidationError, ValueError) as exc:
        raise ConfigError(f"invalid run configuration: {exc}") from None


# ── Execution ─────────────────────────────────────────────────────────────────
@dataclass
class RunOutcome:
    summary: list[str]
    records: list[dict[str, Any]] = field(default_factory=list)


def _fmt(x: float) -> str:
    return f"{x:.6f}"


async def execute(cfg: RunConfig) -> RunOutcome:
    settings = get_settings()
    program = get_program(cfg.source)
    report = compat_report(program, cfg.model, cfg.guide)
    if not report.accepted:
        raise IncompatibleGuide(f"{cfg.guide} is not sound for {cfg.model}: {report.mismatch}")
    so = read_trace(cfg.obs)
    runner = EngineRunner(program, settings, cfg.workers)
    log.info("run_started", engine=cfg.engine, model=cfg.model, guide=cfg.guide, seed=cfg.seed)

    if cfg.engine == "is":
        n = cfg.n or settings.is_particles
        result = await runner.importance(cfg.guide, cfg.model, so, n, cfg.seed)
        return RunOutcome(
            summary=[
                "engine: is",
                f"particles: {len(result)}",
                f"ess: {_fmt(result.ess)}",
                f"log_evidence: {result.log_evidence!r}",
            ],
            records=[particle_record(q) for q in result.particles],
        )

    if cfg.engine == "mh":
        init = read_trace(cfg.init)
        steps = cfg.steps if cfg.steps is not None else settings.mh_steps
        burnin = cfg.burnin if cfg.burnin is not None else settings.mh_burnin
        chain = await runner.metropolis(cfg.guide, cfg.model, so, init, steps, burnin, cfg.seed)
        last = chain[-1]
        return RunOutcome(
            summary=[
                "engine: mh",
                f"steps: {steps}",
                f"burnin: {burnin}",
                f"acceptance_rate: {_fmt(last.acceptance_rate)}",
                f"backward_impossible: {last.backward_impossible}",
            ],
            records=[chain_record(s) for s in chain],
        )

    theta0 = ViParams(params=cfg.params)
    iters = cfg.iters if cfg.iters is not None else settings.vi_iters
    n = cfg.n or settings.vi_samples
    step_size = cfg.step_size if cfg.step_size is not None else settings.vi_step_size
    theta, trajectory = await runner.variational(cfg.guide, theta0, cfg.model, so, iters, n, step_size, cfg.seed)
    summary = ["engine: vi"]
    for r in trajectory:
        params = " ".join(f"{k}={_fmt(v)}" for k, v in r.params.items())
        summary.append(f"iter {r.iteration}: elbo {_fmt(r.elbo)} +/- {_fmt(r.stderr)} {params}")
    summary.append("final: " + " ".join(f"{k}={_fmt(v)}" for k, v in theta.values().items()))
    return RunOutcome(summary=summary, records=[elbo_record(r) for r in trajectory])


def handle(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    outcome = asyncio.run(execute(cfg))
    if cfg.out is not None:
        count = write_jsonl(cfg.out, outcome.records)
        log.info("records_written", path=str(cfg.out), count=count)
    for line in outcome.summary:
        print(line)
    return 0
