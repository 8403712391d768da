"""Check router – validate a source file and print inferred signatures and protocols."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Optional

import structlog

from gpp.dependencies import get_program
from gpp.schemas.types import GuideType, ProcSignature
from gpp.services.parser import format_base_type, format_guide_type, format_typedef
from gpp.services.typecheck import infer_program_types, proc_protocols
from gpp.services.validation import validate_program

log = structlog.get_logger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    p = subparsers.add_parser("check", help="validate a program and print its inferred guide types")
    p.add_argument("path", type=Path, help="source file")
    p.add_argument("--json", action="store_true", help="print a JSON document instead of text")
    p.set_defaults(handler=handle)


def format_signature(name: str, sig: ProcSignature) -> str:
    args = ", ".join(format_base_type(t) for t in sig.arg_types)
    out = f"proc {name}({args}) : {format_base_type(sig.ret_type)}"
    if sig.consume_op:
        out += f" consume {sig.consume_op[0]} : {sig.consume_op[1]}"
    if sig.provide_op:
        out += f" provide {sig.provide_op[0]} : {sig.provide_op[1]}"
    return out


def _opt(a: Optional[GuideType]) -> Optional[str]:
    return None if a is None else format_guide_type(a)


def handle(args: argparse.Namespace) -> int:
    program = get_program(args.path)
    diagnostics = validate_program(program)
    if diagnostics:
        for d in diagnostics:
            print(d.render(), file=sys.stderr)
        log.info("check_failed", path=str(args.path), diagnostics=len(diagnostics))
        return 1
    sigs, defs = infer_program_types(program)

    procs: list[dict[str, Any]] = []
    for d in program.procs:
        a, b = proc_protocols(program, sigs, d.name)
        procs.append({
            "name": d.name,
            "signature": format_signature(d.name, sigs[d.name]),
            "consume": None if d.consume is None else {"channel": d.consume, "protocol": _opt(a)},
            "provide": None if d.provide is None else {"channel": d.provide, "protocol": _opt(b)},
        })

    if args.json:
        print(json.dumps({"procs": procs, "typedefs": [format_typedef(td) for td in defs.values()]},
                         indent=2))
        return 0
    for entry in procs:
        print(entry["signature"])
        for role in ("consume", "provide"):
            if entry[role] is not None:
                print(f"  {entry[role]['channel']}: {entry[role]['protocol']}")
    for td in defs.values():
        print(format_typedef(td))
    return 0
