"""Command-line entry point."""
from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

import structlog

from gpp import __version__
from gpp.config import Settings, get_settings
from gpp.exceptions import GppError
from gpp.routers import check, compat, format as format_router, infer, run, score

log = structlog.get_logger(__name__)


# ── Logging config ────────────────────────────────────────────────────────────
def configure_logging(settings: Settings) -> None:
    renderer = (
        structlog.processors.JSONRenderer()
        if settings.log_format == "json"
        else structlog.dev.ConsoleRenderer(colors=False)
    )
    structlog.configure(
        processors=[
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(
            logging.getLevelName(settings.log_level.upper())
        ),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )


# ── Parser ────────────────────────────────────────────────────────────────────
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gpp", description="guide-typed probabilistic programs")
    parser.add_argument("--version", action="version", version=f"gpp {__version__}")
    parser.add_argument("--log-level", dest="log_level", default=None,
                        help="debug, info, warning or error (default from GPP_LOG_LEVEL)")
    parser.add_argument("--log-format", dest="log_format", choices=("console", "json"), default=None)
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for router in (check, compat, score, run, infer, format_router):
        router.register(subparsers)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    settings = get_settings()
    overrides = {k: v for k, v in (("log_level", args.log_level), ("log_format", args.log_format)) if v}
    if overrides:
        settings = settings.model_copy(update=overrides)
    configure_logging(settings)

    try:
        return args.handler(args)
    except GppError as exc:
        print(exc.render(), file=sys.stderr)
        log.debug("command_failed", command=args.command, kind=exc.kind)
        return 1


if __name__ == "__main__":
    sys.exit(main())
