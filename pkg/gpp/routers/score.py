"""Score router – log-density of a model on a latent and an observation trace."""
from __future__ import annotations

import argparse
import json
from pathlib import Path
from typing import Any, Optional

from gpp.crud import read_trace
from gpp.dependencies import get_checked_program
from gpp.exceptions import TraceMismatch
from gpp.schemas.records import IMPOSSIBLE
from gpp.schemas.values import BoolV, NatV, RealV, Triv, Value
from gpp.services.interpreter import eval_proc


def register(subparsers: argparse._SubParsersAction) -> None:
    p = subparsers.add_parser("score", help="evaluate a model's log-density on given traces")
    p.add_argument("path", type=Path, help="source file")
    p.add_argument("--model", required=True)
    p.add_argument("--latent", type=Path, default=None, help="trace JSON for the consumed channel")
    p.add_argument("--obs", type=Path, default=None, help="trace JSON for the provided channel")
    p.add_argument("--json", action="store_true", help="print log_density and result as JSON")
    p.set_defaults(handler=handle)


def value_to_json(v: Value) -> Any:
    if isinstance(v, Triv):
        return None
    if isinstance(v, (BoolV, NatV, RealV)):
        return v.value
    return repr(v)


def score(path: Path, model: str, latent: Optional[Path], obs: Optional[Path]) -> tuple[float, Optional[Value]]:
    """(log-density, model result); the result is None when the traces do not fit."""
    program, _, _ = get_checked_program(path)
    sl, so = read_trace(latent), read_trace(obs)
    try:
        return eval_proc(program, model, (), sl, so)
    except TraceMismatch:
        return IMPOSSIBLE, None


def handle(args: argparse.Namespace) -> int:
    w, value = score(args.path, args.model, args.latent, args.obs)
    if args.json:
        print(json.dumps({"log_density": repr(w) if w == IMPOSSIBLE else w,
                          "value": None if value is None else value_to_json(value)}))
    else:
        print(repr(w))
    return 0
