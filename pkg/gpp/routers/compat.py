"""Compat router – decide whether a guide (or MH proposal) is sound for a model."""
from __future__ import annotations

import argparse
import json
from pathlib import Path
from typing import Any

from gpp.dependencies import get_program
from gpp.schemas.records import CompatReport
from gpp.schemas.syntax import Program
from gpp.schemas.types import TraceOf
from gpp.services.parser import format_guide_type
from gpp.services.typecheck import check_model_guide, check_proposal


def register(subparsers: argparse._SubParsersAction) -> None:
    p = subparsers.add_parser("compat", help="check a model/guide pair for absolute continuity")
    p.add_argument("path", type=Path, help="source file")
    p.add_argument("--model", required=True)
    p.add_argument("--guide", required=True, help="guide or MH proposal procedure")
    p.add_argument("--json", action="store_true", help="print the report as JSON")
    p.set_defaults(handler=handle)


def is_proposal(program: Program, name: str) -> bool:
    d = program.get_proc(name)
    return d is not None and any(isinstance(t, TraceOf) for _, t in d.params)


def compat_report(program: Program, model: str, guide: str) -> CompatReport:
    if is_proposal(program, guide):
        return check_proposal(program, model, guide)
    return check_model_guide(program, model, guide)


def report_to_dict(r: CompatReport) -> dict[str, Any]:
    return {
        "channel": r.channel,
        "latent_type": format_guide_type(r.latent_type),
        "obs_type": None if r.obs_type is None else format_guide_type(r.obs_type),
        "oplus_free": r.oplus_free,
        "amp_free": r.amp_free,
        "equal": r.equal,
        "verdict": r.verdict,
        "mismatch": r.mismatch,
    }


def handle(args: argparse.Namespace) -> int:
    report = compat_report(get_program(args.path), args.model, args.guide)
    data = report_to_dict(report)
    if args.json:
        print(json.dumps(data, indent=2))
    else:
        print(f"verdict: {data['verdict']}")
        print(f"channel: {data['channel']}")
        print(f"latent: {data['latent_type']}")
        if data["obs_type"] is not None:
            print(f"obs: {data['obs_type']}")
        print(f"equal: {str(data['equal']).lower()}  oplus-free: {str(data['oplus_free']).lower()}  "
              f"amp-free: {str(data['amp_free']).lower()}")
        if data["mismatch"]:
            print(f"mismatch: {data['mismatch']}")
    return 0 if report.accepted else 1
