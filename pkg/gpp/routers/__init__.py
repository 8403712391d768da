"""Subcommand handlers; each module exposes ``register(subparsers)``."""
