"""Engine runner – drives the inference engines off the event loop.

Importance-sampling particles are split into fixed-size chunks; chunk ``i``
draws from its own ``SeedSequence([seed, i])`` stream, so results depend on
the seed and chunk size only, never on how many workers ran them.
"""
from __future__ import annotations

import asyncio
import time
from concurrent.futures import Executor, ProcessPoolExecutor
from contextlib import contextmanager
from functools import partial
from typing import Iterator, Optional, Sequence

import numpy as np
import structlog

from gpp.config import Settings, get_settings
from gpp.schemas.records import ChainState, Particle, ParticleSet
from gpp.schemas.syntax import Program
from gpp.schemas.trace import GuidanceTrace
from gpp.schemas.values import Value
from gpp.schemas.vi import ElboRecord, ViParams
from gpp.services.inference import draw_particles, mh_chain, summarize, vi_optimize

log = structlog.get_logger(__name__)


def chunk_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, index])))


def chunk_sizes(n: int, chunk_size: int) -> list[int]:
    full, rest = divmod(n, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def _is_chunk(
    program: Program,
    guide: str,
    model: str,
    so: GuidanceTrace,
    size: int,
    seed: int,
    index: int,
    guide_args: Sequence[Value],
    model_args: Sequence[Value],
) -> list[Particle]:
    return draw_particles(program, guide, model, so, size, chunk_rng(seed, index), guide_args, model_args)


class EngineRunner:
    """Runs one engine at a time for a checked program."""

    def __init__(self, program: Program, settings: Optional[Settings] = None, workers: Optional[int] = None) -> None:
        self.program = program
        self.settings = settings or get_settings()
        self.workers = workers or self.settings.workers

    @contextmanager
    def _executor(self) -> Iterator[Optional[Executor]]:
        if self.workers <= 1:
            yield None
            return
        with ProcessPoolExecutor(max_workers=self.workers) as pool:
            yield pool

    async def importance(
        self,
        guide: str,
        model: str,
        so: GuidanceTrace,
        n: int,
        seed: int,
        guide_args: Sequence[Value] = (),
        model_args: Sequence[Value] = (),
    ) -> ParticleSet:
        loop = asyncio.get_running_loop()
        sizes = chunk_sizes(n, self.settings.chunk_size)
        t0 = time.monotonic()
        with self._executor() as pool:
            futures = [
                loop.run_in_executor(
                    pool,
                    partial(_is_chunk, self.program, guide, model, so, size, seed, i,
                            tuple(guide_args), tuple(model_args)),
                )
                for i, size in enumerate(sizes)
            ]
            chunks = await asyncio.gather(*futures)
        result = summarize(q for chunk in chunks for q in chunk)
        log.info("is_run_finished", n=n, chunks=len(sizes), workers=self.workers,
                 ess=round(result.ess, 3), elapsed=f"{time.monotonic() - t0:.2f}s")
        return result

    async def metropolis(
        self,
        proposal: str,
        model: str,
        so: GuidanceTrace,
        init: GuidanceTrace,
        steps: int,
        burnin: int,
        seed: int,
        model_args: Sequence[Value] = (),
    ) -> list[ChainState]:
        return await asyncio.get_running_loop().run_in_executor(
            None,
            partial(mh_chain, self.program, proposal, model, so, init, steps, burnin,
                    chunk_rng(seed, 0), model_args),
        )

    async def variational(
        self,
        guide: str,
        theta0: ViParams,
        model: str,
        so: GuidanceTrace,
        iters: int,
        n_per_iter: int,
        step_size: float,
        seed: int,
        model_args: Sequence[Value] = (),
    ) -> tuple[ViParams, list[ElboRecord]]:
        return await asyncio.get_running_loop().run_in_executor(
            None,
            partial(vi_optimize, self.program, guide, theta0, model, so, iters, n_per_iter, step_size,
                    chunk_rng(seed, 0), self.settings.fd_step, model_args),
        )
