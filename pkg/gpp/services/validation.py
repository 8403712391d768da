"""Structural validation of programs (names, channels, call targets, typedef scoping)."""
from __future__ import annotations

from typing import Iterator, Optional

from gpp.schemas.records import Diagnostic
from gpp.schemas.syntax import (
    App,
    BinOp,
    Bnd,
    BranchRecv,
    BranchSend,
    Call,
    Command,
    Cond,
    DistExpr,
    Expression,
    Lambda,
    Let,
    PrimApp,
    ProcDecl,
    Program,
    Ret,
    SampleRecv,
    SampleSend,
    TraceGet,
)
from gpp.schemas.types import Arrow, BaseType, Dist, TraceOf
from gpp.services.guide_types import free_type_vars, operators_of


def iter_commands(m: Command) -> Iterator[Command]:
    stack = [m]
    while stack:
        c = stack.pop()
        yield c
        if isinstance(c, Bnd):
            stack.extend((c.rest, c.first))
        elif isinstance(c, (BranchSend, BranchRecv)):
            stack.extend((c.else_, c.then))


def iter_expressions(m: Command) -> Iterator[Expression]:
    """Every expression (and subexpression) occurring in ``m``."""
    roots: list[Expression] = []
    for c in iter_commands(m):
        if isinstance(c, Ret):
            roots.append(c.expr)
        elif isinstance(c, Call):
            roots.extend(c.args)
        elif isinstance(c, (SampleRecv, SampleSend)):
            roots.append(c.dist)
        elif isinstance(c, BranchSend):
            roots.append(c.pred)
    stack = list(reversed(roots))
    while stack:
        e = stack.pop()
        yield e
        if isinstance(e, Cond):
            stack.extend((e.else_, e.then, e.cond))
        elif isinstance(e, BinOp):
            stack.extend((e.rhs, e.lhs))
        elif isinstance(e, Lambda):
            stack.append(e.body)
        elif isinstance(e, App):
            stack.extend((e.arg, e.fn))
        elif isinstance(e, Let):
            stack.extend((e.body, e.bound))
        elif isinstance(e, DistExpr):
            stack.extend(reversed(e.args))
        elif isinstance(e, PrimApp):
            stack.append(e.arg)
        elif isinstance(e, TraceGet):
            stack.extend((e.index, e.trace))


def _mentions_trace(t: BaseType) -> bool:
    if isinstance(t, TraceOf):
        return True
    if isinstance(t, Arrow):
        return _mentions_trace(t.arg) or _mentions_trace(t.res)
    if isinstance(t, Dist):
        return _mentions_trace(t.carrier)
    return False


def _channel_of(c: Command) -> Optional[str]:
    if isinstance(c, (SampleRecv, SampleSend, BranchRecv, BranchSend)):
        return c.chan
    return None


def _check_proc(d: ProcDecl, p: Program) -> Iterator[Diagnostic]:
    if d.consume is not None and d.consume == d.provide:
        yield Diagnostic("channel-clash", f"channel {d.consume!r} is both consumed and provided",
                         d.name, d.span)
    names = [n for n, _ in d.params]
    for n in sorted({n for n in names if names.count(n) > 1}):
        yield Diagnostic("duplicate-param", f"parameter {n!r} is declared twice", d.name, d.span)
    for n, t in d.params:
        if isinstance(t, Arrow) and _mentions_trace(t):
            yield Diagnostic("trace-position", f"parameter {n!r} nests a trace type", d.name, d.span)
    if d.ret_type is not None and _mentions_trace(d.ret_type):
        yield Diagnostic("trace-position", "return type cannot be a trace", d.name, d.span)
    for c in iter_commands(d.body):
        chan = _channel_of(c)
        if chan is not None and d.role_of(chan) is None:
            yield Diagnostic("unknown-channel", f"channel {chan!r} is not in the header", d.name, c.span)
        if isinstance(c, Call):
            callee = p.get_proc(c.proc)
            if callee is None:
                yield Diagnostic("unknown-proc", f"call to undefined procedure {c.proc!r}", d.name, c.span)
            elif len(callee.params) != len(c.args):
                yield Diagnostic(
                    "call-arity",
                    f"{c.proc} takes {len(callee.params)} argument(s), got {len(c.args)}",
                    d.name,
                    c.span,
                )
    for e in iter_expressions(d.body):
        if isinstance(e, Lambda) and _mentions_trace(e.param_type):
            yield Diagnostic("trace-position", "lambda parameters cannot be traces", d.name, e.span)


def validate_program(p: Program) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    seen: set[str] = set()
    for d in p.procs:
        if d.name in seen:
            out.append(Diagnostic("duplicate-proc", f"procedure {d.name!r} is declared twice", d.name, d.span))
        seen.add(d.name)
    ops: set[str] = set()
    for td in p.typedefs:
        if td.op in ops:
            out.append(Diagnostic("duplicate-typedef", f"operator {td.op!r} is declared twice", td.op))
        ops.add(td.op)
    for td in p.typedefs:
        extra = free_type_vars(td.body) - {td.param}
        if extra:
            out.append(Diagnostic("typedef-free-var",
                                  f"free type variable(s) {', '.join(sorted(extra))}", td.op))
        for op in sorted(operators_of(td.body) - ops):
            out.append(Diagnostic("unknown-operator", f"operator {op!r} is not defined", td.op))
    for d in p.procs:
        out.extend(_check_proc(d, p))
    return out
