"""gpp test suite."""
