"""Infer router – print the type operators inferred for every procedure."""
from __future__ import annotations

import argparse
from pathlib import Path

from gpp.dependencies import get_checked_program
from gpp.services.parser import format_typedef


def register(subparsers: argparse._SubParsersAction) -> None:
    p = subparsers.add_parser("infer", help="print inferred typedefs only")
    p.add_argument("path", type=Path, help="source file")
    p.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    program, _, defs = get_checked_program(args.path)
    declared = set(program.typedef_table)
    for op, td in defs.items():
        if op not in declared:
            print(format_typedef(td))
    return 0
