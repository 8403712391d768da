"""Shared pytest fixtures for all test modules.

Corpus programs are parsed once per session; every randomized test gets its
own seeded generator so failures reproduce.
"""
from __future__ import annotations

from pathlib import Path
from typing import Callable

import numpy as np
import pytest

from gpp.config import get_settings
from gpp.crud import read_trace
from gpp.schemas.syntax import Program
from gpp.schemas.trace import GuidanceTrace
from gpp.services.parser import parse_program

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


# ── Settings ──────────────────────────────────────────────────────────────────
@pytest.fixture(autouse=True)
def _fresh_settings(monkeypatch: pytest.MonkeyPatch):
    """Each test sees settings built from its own environment."""
    for var in ("GPP_SEED", "GPP_WORKERS", "GPP_MAX_STEPS", "GPP_CHUNK_SIZE", "GPP_LOG_LEVEL"):
        monkeypatch.delenv(var, raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


# ── Corpus ────────────────────────────────────────────────────────────────────
_programs: dict[str, Program] = {}


def load_corpus(name: str) -> Program:
    if name not in _programs:
        path = CORPUS / f"{name}.gpp"
        _programs[name] = parse_program(path.read_text(encoding="utf-8"), str(path))
    return _programs[name]


def corpus_trace(name: str) -> GuidanceTrace:
    return read_trace(CORPUS / f"{name}.json")


@pytest.fixture
def corpus() -> Callable[[str], Program]:
    """Parsed corpus program by file stem, e.g. ``corpus("model1")``."""
    return load_corpus


@pytest.fixture
def corpus_dir() -> Path:
    return CORPUS


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)
