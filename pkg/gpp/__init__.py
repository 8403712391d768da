"""gpp – guide-typed probabilistic programs: checker, interpreter and inference engines."""

__version__ = "0.1.0"
