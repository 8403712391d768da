"""E2E test fixtures: run the CLI as a subprocess on the bundled corpus."""
from __future__ import annotations

import asyncio
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Awaitable, Callable

import pytest

from tests.conftest import CORPUS

REPO_ROOT = CORPUS.parent

# ── Sample sizes (override for quicker local runs) ───────────────────────────
E2E_PARTICLES = int(os.getenv("GPP_E2E_PARTICLES", "100000"))
E2E_MH_STEPS = int(os.getenv("GPP_E2E_MH_STEPS", "100000"))
E2E_VI_ITERS = int(os.getenv("GPP_E2E_VI_ITERS", "200"))
E2E_VI_SAMPLES = int(os.getenv("GPP_E2E_VI_SAMPLES", "400"))

# Seconds a single CLI invocation may take
CLI_TIMEOUT = int(os.getenv("GPP_E2E_TIMEOUT", "300"))


@dataclass
class CliResult:
    code: int
    stdout: str
    stderr: str

    def summary(self) -> dict[str, str]:
        """``key: value`` lines of stdout as a mapping."""
        out = {}
        for line in self.stdout.splitlines():
            key, sep, value = line.partition(": ")
            if sep:
                out[key] = value
        return out


async def run_cli(*args: Any) -> CliResult:
    env = {**os.environ, "GPP_LOG_LEVEL": "warning"}
    proc = await asyncio.create_subprocess_exec(
        sys.executable, "-m", "gpp", *map(str, args),
        cwd=REPO_ROOT,
        env=env,
        stdout=asyncio.subprocess.PIPE,
        stderr=asyncio.subprocess.PIPE,
    )
    try:
        out, err = await asyncio.wait_for(proc.communicate(), CLI_TIMEOUT)
    except asyncio.TimeoutError:
        proc.kill()
        pytest.fail(f"gpp {' '.join(map(str, args))} did not finish within {CLI_TIMEOUT}s")
    return CliResult(proc.returncode, out.decode(), err.decode())


def read_jsonl(path: Path) -> list[dict[str, Any]]:
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line]


@pytest.fixture
def cli() -> Callable[..., Awaitable[CliResult]]:
    """``await cli("run", ...)`` runs ``python -m gpp`` from the repository root."""
    return run_cli
