"""Shared loaders for the subcommands."""
from __future__ import annotations

from pathlib import Path
from typing import Optional

from gpp.config import get_settings
from gpp.crud import read_text
from gpp.schemas.syntax import Program
from gpp.services.parser import parse_program
from gpp.services.typecheck import SignatureTable, TypeDefTable, infer_program_types


def get_program(path: Path) -> Program:
    """Read and parse a source file."""
    return parse_program(read_text(path), str(path))


def get_checked_program(path: Path) -> tuple[Program, SignatureTable, TypeDefTable]:
    """Parse, validate and infer; raises on the first problem."""
    program = get_program(path)
    sigs, defs = infer_program_types(program)
    return program, sigs, defs


def resolve_seed(seed: Optional[int]) -> int:
    """An explicit seed wins, then GPP_SEED, then 0."""
    if seed is not None:
        return seed
    fallback = get_settings().seed
    return fallback if fallback is not None else 0
