"""File I/O: program sources, trace JSON, JSON-lines records and YAML run configs."""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Iterable, Optional

import yaml

from gpp.exceptions import ConfigError, TraceFormatError
from gpp.schemas.records import ChainState, Particle
from gpp.schemas.trace import EMPTY_TRACE, GuidanceTrace, trace_from_json, trace_to_json
from gpp.schemas.vi import ElboRecord


def read_text(path: Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from None


def read_trace(path: Optional[Path]) -> GuidanceTrace:
    """Load a trace file; no path means the empty trace."""
    if path is None:
        return EMPTY_TRACE
    text = read_text(path)
    try:
        return trace_from_json(text)
    except TraceFormatError as exc:
        raise TraceFormatError(f"{path}: {exc.message}") from None


def load_run_config(path: Path) -> dict[str, Any]:
    """Read a YAML run configuration as a plain mapping (validated by RunConfig later)."""
    try:
        data = yaml.safe_load(read_text(path))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at the top level")
    return data


# ── Records ───────────────────────────────────────────────────────────────────
def _weight(w: float) -> Any:
    # JSON has no infinities
    if math.isinf(w):
        return "-inf" if w < 0 else "inf"
    return w


def particle_record(q: Particle) -> dict[str, Any]:
    return {
        "trace": trace_to_json(q.trace),
        "log_weight": _weight(q.log_importance),
        "guide_log_weight": _weight(q.guide_log_weight),
        "model_log_weight": _weight(q.model_log_weight),
    }


def chain_record(s: ChainState) -> dict[str, Any]:
    return {
        "step": s.step,
        "trace": trace_to_json(s.trace),
        "log_weight": _weight(s.model_log_weight),
        "accepted": s.accepted,
        "backward_impossible": s.backward_impossible,
    }


def elbo_record(r: ElboRecord) -> dict[str, Any]:
    return r.model_dump()


def dumps_record(record: dict[str, Any]) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def write_jsonl(path: Path, records: Iterable[dict[str, Any]]) -> int:
    """Write one JSON object per line; returns the number of records."""
    count = 0
    with Path(path).open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(dumps_record(record) + "\n")
            count += 1
    return count
