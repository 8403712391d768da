"""Abstract syntax: expressions, commands, procedures and programs."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal, Optional, Union

from gpp.schemas.types import BaseType, TypeDef


@dataclass(frozen=True, slots=True)
class SourceSpan:
    file: str
    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def __post_init__(self) -> None:
        if (self.end_line, self.end_col) < (self.start_line, self.start_col):
            raise ValueError("span end precedes start")

    def __str__(self) -> str:
        return f"{self.file}:{self.start_line}:{self.start_col}"


def _span() -> Optional[SourceSpan]:
    return field(default=None, compare=False, repr=False)


# ── Expressions ───────────────────────────────────────────────────────────────
@dataclass(frozen=True, slots=True)
class Var:
    name: str
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True, slots=True)
class TrivLit:
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True, slots=True)
class BoolLit:
    value: bool
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True, slots=True)
class RealLit:
    value: float
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True, slots=True)
class NatLit:
    value: int
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True, slots=True)
class Cond:
    cond: Expression
    then: Expression
    else_: Expression
    span: Optional[SourceSpan] = _span()


BinOpName = Literal["+", "-", "*", "/", "<", "<=", "==", "and", "or"]


@dataclass(frozen=True, slots=True)
class BinOp:
    op: BinOpName
    lhs: Expression
    rhs: Expression
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True, slots=True)
class Lambda:
    param: str
    param_type: BaseType
    body: Expression
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True, slots=True)
class App:
    fn: Expression
    arg: Expression
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True, slots=True)
class Let:
    bound: Expression
    name: str
    body: Expression
    span: Optional[SourceSpan] = _span()


DistFamily = Literal["Ber", "Unif", "Beta", "Gamma", "Normal", "Cat", "Geo", "Pois"]

# number of parameters per family; Cat is variadic (None)
DIST_ARITY: dict[str, Optional[int]] = {
    "Ber": 1,
    "Unif": 0,
    "Beta": 2,
    "Gamma": 2,
    "Normal": 2,
    "Cat": None,
    "Geo": 1,
    "Pois": 1,
}


@dataclass(frozen=True, slots=True)
class DistExpr:
    """Distribution constructor, e.g. ``Normal(mean, stddev)`` or ``Cat(w1, .., wn)``."""

    family: DistFamily
    args: tuple[Expression, ...]
    span: Optional[SourceSpan] = _span()


PrimName = Literal["sqrt", "log", "exp"]
PRIM_NAMES: frozenset[str] = frozenset({"sqrt", "log", "exp"})


@dataclass(frozen=True, slots=True)
class PrimApp:
    """Built-in numeric function applied to one argument, e.g. ``sqrt(s)``."""

    fn: PrimName
    arg: Expression
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True, slots=True)
class TraceGet:
    annot: BaseType
    trace: Expression
    index: Expression
    span: Optional[SourceSpan] = _span()


Expression = Union[
    Var, TrivLit, BoolLit, RealLit, NatLit, Cond, BinOp, Lambda, App, Let, DistExpr, PrimApp, TraceGet
]


# ── Commands ──────────────────────────────────────────────────────────────────
@dataclass(frozen=True, slots=True)
class Ret:
    expr: Expression
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True, slots=True)
class Bnd:
    first: Command
    binder: str
    rest: Command
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True, slots=True)
class Call:
    proc: str
    args: tuple[Expression, ...]
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True, slots=True)
class SampleRecv:
    dist: Expression
    chan: str
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True, slots=True)
class SampleSend:
    dist: Expression
    chan: str
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True, slots=True)
class BranchRecv:
    then: Command
    else_: Command
    chan: str
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True, slots=True)
class BranchSend:
    pred: Expression
    then: Command
    else_: Command
    chan: str
    span: Optional[SourceSpan] = _span()


Command = Union[Ret, Bnd, Call, SampleRecv, SampleSend, BranchRecv, BranchSend]

WILDCARD = "_"


# ── Programs ──────────────────────────────────────────────────────────────────
@dataclass(frozen=True, slots=True)
class ProcDecl:
    name: str
    params: tuple[tuple[str, BaseType], ...]
    ret_type: Optional[BaseType]
    consume: Optional[str]
    provide: Optional[str]
    body: Command
    span: Optional[SourceSpan] = _span()

    def role_of(self, chan: str) -> Optional[str]:
        """Return ``"consume"``/``"provide"`` for a header channel, else None."""
        if chan == self.consume:
            return "consume"
        if chan == self.provide:
            return "provide"
        return None


@dataclass(frozen=True)
class Program:
    typedefs: tuple[TypeDef, ...] = ()
    procs: tuple[ProcDecl, ...] = ()

    @cached_property
    def proc_table(self) -> dict[str, ProcDecl]:
        return {d.name: d for d in self.procs}

    @cached_property
    def typedef_table(self) -> dict[str, TypeDef]:
        return {t.op: t for t in self.typedefs}

    def get_proc(self, name: str) -> Optional[ProcDecl]:
        return self.proc_table.get(name)
