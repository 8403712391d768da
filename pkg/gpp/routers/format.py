"""Format router – pretty-print a program in canonical layout."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from gpp.dependencies import get_program
from gpp.services.parser import format_program


def register(subparsers: argparse._SubParsersAction) -> None:
    p = subparsers.add_parser("format", help="pretty-print a program")
    p.add_argument("path", type=Path, help="source file")
    p.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    sys.stdout.write(format_program(get_program(args.path)))
    return 0
