"""Error hierarchy shared by the parser, checker, interpreter and engines."""
from __future__ import annotations

from typing import Iterable, Optional

from gpp.schemas.syntax import SourceSpan


class GppError(Exception):
    """Base error; renders as ``file:line:col: kind: message``."""

    kind = "error"

    def __init__(self, message: str, span: Optional[SourceSpan] = None) -> None:
        super().__init__(message)
        self.message = message
        self.span = span

    def render(self) -> str:
        where = f"{self.span}: " if self.span is not None else ""
        return f"{where}{self.kind}: {self.message}"

    def __str__(self) -> str:
        return self.render()


# ── Syntax ────────────────────────────────────────────────────────────────────
class ParseError(GppError):
    kind = "parse error"

    def __init__(
        self,
        message: str,
        span: Optional[SourceSpan] = None,
        expected: Iterable[str] = (),
    ) -> None:
        self.expected = tuple(sorted(set(expected)))
        if self.expected:
            message = f"{message} (expected {', '.join(self.expected)})"
        super().__init__(message, span)


# ── Static checking ───────────────────────────────────────────────────────────
class ProgramTypeError(GppError):
    kind = "type error"

    def __init__(
        self,
        message: str,
        span: Optional[SourceSpan] = None,
        proc: Optional[str] = None,
    ) -> None:
        if proc is not None:
            message = f"in proc {proc}: {message}"
        super().__init__(message, span)
        self.proc = proc


class UnknownOperator(GppError):
    kind = "unknown operator"


class ChannelMismatch(GppError):
    kind = "channel mismatch"


class IncompatibleGuide(GppError):
    kind = "incompatible guide"


# ── Evaluation ────────────────────────────────────────────────────────────────
class EvalError(GppError):
    kind = "evaluation error"


class UnboundVariable(EvalError):
    kind = "unbound variable"


class DistParamOutOfDomain(EvalError):
    kind = "distribution parameter out of domain"


class DivisionByZero(EvalError):
    kind = "division by zero"


class MathDomainError(EvalError):
    kind = "math domain error"


class TraceGetOutOfBounds(EvalError):
    kind = "trace index out of bounds"


class TraceGetTypeMismatch(EvalError):
    kind = "trace value type mismatch"


class UnknownChannel(EvalError):
    kind = "unknown channel"


class StepLimitExceeded(EvalError):
    kind = "step limit exceeded"


# ── Trace pairing ─────────────────────────────────────────────────────────────
class TraceMismatch(GppError):
    kind = "trace mismatch"


class Stuck(GppError):
    kind = "stuck"

    def __init__(self, message: str, rule: str, cursors: tuple[int, int]) -> None:
        super().__init__(f"{message} [rule {rule}, cursors a={cursors[0]} b={cursors[1]}]")
        self.rule = rule
        self.cursors = cursors


class ObservationExhausted(GppError):
    kind = "observation exhausted"


class ObservationMismatch(GppError):
    kind = "observation mismatch"


class DeadlockError(GppError):
    kind = "deadlock"


# ── Inference ─────────────────────────────────────────────────────────────────
class InferenceError(GppError):
    kind = "inference error"


class AllImpossible(InferenceError):
    kind = "all particles impossible"


class InitImpossible(InferenceError):
    kind = "initial trace impossible"


class NonFiniteGradient(InferenceError):
    kind = "non-finite gradient"


class ViParamMismatch(InferenceError):
    kind = "variational parameter mismatch"


# ── Input ─────────────────────────────────────────────────────────────────────
class TraceFormatError(GppError):
    kind = "trace format error"


class ConfigError(GppError):
    kind = "config error"
