"""Interpreter – expression evaluation and the command step machine.

Commands run on :class:`Process`, a trampolined machine with an explicit
continuation stack. A process never touches a channel itself: every channel
operation surfaces as a request that a driver answers. Two drivers live
here (trace replay with weights, and weight-free reduction); the joint
guide/model scheduler lives in ``gpp.services.scheduler``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional, Sequence, Union

from gpp.config import get_settings
from gpp.exceptions import (
    DivisionByZero,
    MathDomainError,
    EvalError,
    StepLimitExceeded,
    Stuck,
    TraceGetOutOfBounds,
    TraceGetTypeMismatch,
    TraceMismatch,
    UnknownChannel,
)
from gpp.schemas.records import IMPOSSIBLE, LogWeight
from gpp.schemas.syntax import (
    App,
    BinOp,
    Bnd,
    BoolLit,
    BranchRecv,
    BranchSend,
    Call,
    Command,
    Cond,
    DistExpr,
    Expression,
    Lambda,
    Let,
    NatLit,
    PrimApp,
    ProcDecl,
    Program,
    RealLit,
    Ret,
    SampleRecv,
    SampleSend,
    SourceSpan,
    TraceGet,
    TrivLit,
    Var,
)
from gpp.schemas.trace import CBranch, CSample, Fold, GuidanceTrace, Message, PBranch, PSample
from gpp.schemas.types import Bool
from gpp.schemas.values import (
    FALSE,
    TRIV,
    TRUE,
    BoolV,
    Closure,
    DistV,
    Environment,
    NatV,
    PrimDist,
    RealV,
    TraceV,
    Triv,
    Value,
)
from gpp.services.distributions import as_slot_value, log_density, make_dist, support_contains, value_in_scalar

Role = Literal["consume", "provide"]
Direction = Literal["recv", "send"]


# ── Expressions ───────────────────────────────────────────────────────────────
def _number(v: Value, span: Optional[SourceSpan]) -> float:
    if isinstance(v, (RealV, NatV)):
        return float(v.value)
    raise EvalError(f"expected a number, got {v!r}", span)


def apply_op(op: str, lhs: Value, rhs: Value, span: Optional[SourceSpan] = None) -> Value:
    if op in ("and", "or"):
        if not (isinstance(lhs, BoolV) and isinstance(rhs, BoolV)):
            raise EvalError(f"operator {op} expects booleans", span)
        return BoolV(lhs.value and rhs.value) if op == "and" else BoolV(lhs.value or rhs.value)
    if op == "==":
        if isinstance(lhs, Triv) and isinstance(rhs, Triv):
            return TRUE
        if isinstance(lhs, BoolV) and isinstance(rhs, BoolV):
            return BoolV(lhs.value == rhs.value)
        return BoolV(_number(lhs, span) == _number(rhs, span))
    if op in ("+", "*") and isinstance(lhs, NatV) and isinstance(rhs, NatV):
        return NatV(lhs.value + rhs.value if op == "+" else lhs.value * rhs.value)
    x, y = _number(lhs, span), _number(rhs, span)
    if op == "+":
        return RealV(x + y)
    if op == "-":
        return RealV(x - y)
    if op == "*":
        return RealV(x * y)
    if op == "/":
        if y == 0.0:
            raise DivisionByZero(f"{x} / 0", span)
        return RealV(x / y)
    if op == "<":
        return BoolV(x < y)
    if op == "<=":
        return BoolV(x <= y)
    raise EvalError(f"unknown operator {op!r}", span)


def apply_prim(fn: str, arg: Value, span: Optional[SourceSpan] = None) -> Value:
    x = _number(arg, span)
    if fn == "sqrt":
        if x < 0.0:
            raise MathDomainError(f"sqrt({x})", span)
        return RealV(math.sqrt(x))
    if fn == "log":
        if x <= 0.0:
            raise MathDomainError(f"log({x})", span)
        return RealV(math.log(x))
    if fn == "exp":
        # the result must stay a positive finite real
        if not -745.0 < x < 709.0:
            raise MathDomainError(f"exp({x}) leaves the positive reals", span)
        return RealV(math.exp(x))
    raise EvalError(f"unknown function {fn!r}", span)


def _trace_get(e: TraceGet, trace: Value, index: Value) -> Value:
    if not isinstance(trace, TraceV):
        raise EvalError("get expects a trace", e.span)
    if not isinstance(index, NatV):
        raise EvalError("trace index must be a natural number", e.span)
    msgs = trace.trace.messages
    if not 0 <= index.value < len(msgs):
        raise TraceGetOutOfBounds(f"index {index.value} outside trace of length {len(msgs)}", e.span)
    msg = msgs[index.value]
    if isinstance(msg, (PSample, CSample)):
        v: Value = msg.value
    elif isinstance(msg, (PBranch, CBranch)) and isinstance(e.annot, Bool):
        v = BoolV(msg.choice)
    else:
        raise TraceGetTypeMismatch(f"message {index.value} is {type(msg).__name__}", e.span)
    if not value_in_scalar(v, e.annot):
        raise TraceGetTypeMismatch(f"message {index.value} does not carry the annotated type", e.span)
    return v


def eval_expr(env: Environment, e: Expression) -> Value:
    if isinstance(e, Var):
        return env.lookup(e.name)
    if isinstance(e, RealLit):
        return RealV(e.value)
    if isinstance(e, NatLit):
        return NatV(e.value)
    if isinstance(e, BoolLit):
        return TRUE if e.value else FALSE
    if isinstance(e, TrivLit):
        return TRIV
    if isinstance(e, BinOp):
        return apply_op(e.op, eval_expr(env, e.lhs), eval_expr(env, e.rhs), e.span)
    if isinstance(e, Cond):
        c = eval_expr(env, e.cond)
        if not isinstance(c, BoolV):
            raise EvalError("condition is not a boolean", e.cond.span)
        return eval_expr(env, e.then if c.value else e.else_)
    if isinstance(e, DistExpr):
        params = [_number(eval_expr(env, a), a.span) for a in e.args]
        try:
            return DistV(make_dist(e.family, params))
        except EvalError as exc:
            exc.span = exc.span or e.span
            raise
    if isinstance(e, Let):
        return eval_expr(env.extend(e.name, eval_expr(env, e.bound)), e.body)
    if isinstance(e, Lambda):
        return Closure(env, e.param, e.param_type, e.body)
    if isinstance(e, App):
        fn = eval_expr(env, e.fn)
        if not isinstance(fn, Closure):
            raise EvalError("applying a non-function", e.span)
        return eval_expr(fn.env.extend(fn.param, eval_expr(env, e.arg)), fn.body)
    if isinstance(e, PrimApp):
        return apply_prim(e.fn, eval_expr(env, e.arg), e.span)
    if isinstance(e, TraceGet):
        return _trace_get(e, eval_expr(env, e.trace), eval_expr(env, e.index))
    raise TypeError(f"not an expression: {e!r}")


# ── Step machine ──────────────────────────────────────────────────────────────
@dataclass(frozen=True, slots=True)
class SampleRequest:
    direction: Direction
    role: Role
    dist: PrimDist
    span: Optional[SourceSpan] = None


@dataclass(frozen=True, slots=True)
class BranchRequest:
    direction: Direction
    role: Role
    pred: Optional[bool] = None  # the evaluated predicate of a send
    span: Optional[SourceSpan] = None


@dataclass(frozen=True, slots=True)
class FoldRequest:
    roles: tuple[Role, ...]
    proc: str
    span: Optional[SourceSpan] = None


@dataclass(frozen=True, slots=True)
class Done:
    value: Value


Request = Union[SampleRequest, BranchRequest, FoldRequest]
Event = Union[SampleRequest, BranchRequest, FoldRequest, Done]


@dataclass(slots=True)
class _Kont:
    binder: str
    rest: Command
    env: Environment
    decl: ProcDecl


class Process:
    """One execution of a procedure body, advanced request by request."""

    def __init__(
        self,
        program: Program,
        decl: ProcDecl,
        args: Sequence[Value] = (),
        env: Optional[Environment] = None,
        max_steps: Optional[int] = None,
    ) -> None:
        if len(args) != len(decl.params):
            raise EvalError(f"{decl.name} takes {len(decl.params)} argument(s), got {len(args)}", decl.span)
        base = env if env is not None else Environment.empty()
        for (name, _), value in zip(decl.params, args):
            base = base.extend(name, value)
        self.program = program
        self.max_steps = max_steps if max_steps is not None else get_settings().max_steps
        self.steps = 0
        self._stack: list[_Kont] = []
        self._cmd: Optional[Command] = decl.body
        self._env = base
        self._decl = decl
        self._value: Value = TRIV
        self._waiting: Optional[tuple] = None

    def _role(self, chan: str, span: Optional[SourceSpan]) -> Role:
        role = self._decl.role_of(chan)
        if role is None:
            raise UnknownChannel(f"channel {chan!r} is not declared by {self._decl.name}", span)
        return role

    def _call(self, m: Call) -> Optional[FoldRequest]:
        callee = self.program.get_proc(m.proc)
        if callee is None:
            raise EvalError(f"call to undefined procedure {m.proc!r}", m.span)
        if len(callee.params) != len(m.args):
            raise EvalError(f"{m.proc} takes {len(callee.params)} argument(s)", m.span)
        env = Environment.empty()
        for (name, _), a in zip(callee.params, m.args):
            env = env.extend(name, eval_expr(self._env, a))
        roles: tuple[Role, ...] = tuple(
            r for r, ch in (("consume", callee.consume), ("provide", callee.provide)) if ch is not None
        )
        if not roles:
            self._cmd, self._env, self._decl = callee.body, env, callee
            return None
        self._waiting = ("call", callee, env)
        self._cmd = None
        return FoldRequest(roles, callee.name, m.span)

    def advance(self) -> Event:
        """Run until the next channel request, or until the body returns."""
        if self._waiting is not None:
            raise RuntimeError("process is waiting for a reply; use send()")
        while True:
            self.steps += 1
            if self.steps > self.max_steps:
                raise StepLimitExceeded(f"{self.steps - 1} steps executed in {self._decl.name}")
            m = self._cmd
            if m is None:
                if not self._stack:
                    return Done(self._value)
                k = self._stack.pop()
                self._cmd, self._env, self._decl = k.rest, k.env.extend(k.binder, self._value), k.decl
                continue
            if isinstance(m, Bnd):
                self._stack.append(_Kont(m.binder, m.rest, self._env, self._decl))
                self._cmd = m.first
            elif isinstance(m, Ret):
                self._value = eval_expr(self._env, m.expr)
                self._cmd = None
            elif isinstance(m, Call):
                req = self._call(m)
                if req is not None:
                    return req
            elif isinstance(m, (SampleRecv, SampleSend)):
                role = self._role(m.chan, m.span)
                d = eval_expr(self._env, m.dist)
                if not isinstance(d, DistV):
                    raise EvalError("sample expects a distribution", m.dist.span)
                self._waiting = ("value",)
                self._cmd = None
                direction: Direction = "recv" if isinstance(m, SampleRecv) else "send"
                return SampleRequest(direction, role, d.dist, m.span)
            elif isinstance(m, BranchSend):
                role = self._role(m.chan, m.span)
                pred = eval_expr(self._env, m.pred)
                if not isinstance(pred, BoolV):
                    raise EvalError("branch predicate is not a boolean", m.pred.span)
                self._waiting = ("branch", m)
                self._cmd = None
                return BranchRequest("send", role, pred.value, m.span)
            elif isinstance(m, BranchRecv):
                role = self._role(m.chan, m.span)
                self._waiting = ("branch", m)
                self._cmd = None
                return BranchRequest("recv", role, None, m.span)
            else:
                raise TypeError(f"not a command: {m!r}")

    def send(self, reply: Union[Value, bool, None] = None) -> Event:
        """Answer the pending request and advance to the next one.

        Samples are answered with the value, branches with the selected arm
        (True for ``then``), folds with None.
        """
        waiting, self._waiting = self._waiting, None
        if waiting is None:
            raise RuntimeError("process has no pending request")
        kind = waiting[0]
        if kind == "value":
            self._value = reply  # type: ignore[assignment]
        elif kind == "branch":
            m = waiting[1]
            self._cmd = m.then if reply else m.else_
        else:
            _, callee, env = waiting
            self._cmd, self._env, self._decl = callee.body, env, callee
        return self.advance()


# ── Replay drivers ────────────────────────────────────────────────────────────
_SAMPLE_KIND = {
    ("consume", "recv"): PSample,
    ("provide", "send"): PSample,
    ("consume", "send"): CSample,
    ("provide", "recv"): CSample,
}
_BRANCH_KIND = {
    ("consume", "send"): CBranch,
    ("provide", "recv"): CBranch,
    ("consume", "recv"): PBranch,
    ("provide", "send"): PBranch,
}


class _Replay:
    """Answers requests from fixed traces; ``weighted`` selects evaluation over reduction."""

    def __init__(self, sa: GuidanceTrace, sb: GuidanceTrace, weighted: bool) -> None:
        self.traces = {"consume": sa.messages, "provide": sb.messages}
        self.cursor = {"consume": 0, "provide": 0}
        self.weighted = weighted
        self.weight: LogWeight = 0.0

    def _cursors(self) -> tuple[int, int]:
        return self.cursor["consume"], self.cursor["provide"]

    def fail(self, message: str, rule: str, span: Optional[SourceSpan] = None) -> None:
        if self.weighted:
            raise TraceMismatch(message, span)
        raise Stuck(message, rule, self._cursors())

    def take(self, role: Role, expected: type, rule: str, span: Optional[SourceSpan]) -> Message:
        i = self.cursor[role]
        msgs = self.traces[role]
        chan = "a" if role == "consume" else "b"
        if i >= len(msgs):
            self.fail(f"trace {chan} exhausted, {expected.__name__} expected", rule, span)
        msg = msgs[i]
        if not isinstance(msg, expected):
            self.fail(f"trace {chan}[{i}] is {type(msg).__name__}, {expected.__name__} expected", rule, span)
        self.cursor[role] = i + 1
        return msg

    def answer(self, req: Request) -> Union[Value, bool, None]:
        if isinstance(req, SampleRequest):
            rule = f"sample-{req.direction}-{req.role}"
            msg = self.take(req.role, _SAMPLE_KIND[(req.role, req.direction)], rule, req.span)
            v = as_slot_value(req.dist, msg.value)
            if not support_contains(req.dist, v):
                self.fail(f"value {msg.value!r} outside the support of {req.dist.family}", rule, req.span)
            if self.weighted:
                self.weight += log_density(req.dist, v)
            return v
        if isinstance(req, BranchRequest):
            rule = f"branch-{req.direction}-{req.role}"
            msg = self.take(req.role, _BRANCH_KIND[(req.role, req.direction)], rule, req.span)
            if req.direction == "send" and msg.choice != req.pred:
                if not self.weighted:
                    self.fail("recorded selection differs from the predicate", rule, req.span)
                self.weight = IMPOSSIBLE
            return msg.choice
        for role in req.roles:
            self.take(role, Fold, "call", req.span)
        return None

    def finish(self) -> None:
        for role in ("consume", "provide"):
            left = len(self.traces[role]) - self.cursor[role]
            if left:
                chan = "a" if role == "consume" else "b"
                self.fail(f"{left} message(s) remain on trace {chan}", "return")


def _run_replay(process: Process, replay: _Replay) -> Value:
    event = process.advance()
    while not isinstance(event, Done):
        event = process.send(replay.answer(event))
    replay.finish()
    return event.value


def _top_decl(m: Command, consume: Optional[str], provide: Optional[str]) -> ProcDecl:
    return ProcDecl("<top>", (), None, consume, provide, m)


def eval_cmd(
    p: Program,
    env: Environment,
    sa: GuidanceTrace,
    sb: GuidanceTrace,
    m: Command,
    *,
    consume: Optional[str] = None,
    provide: Optional[str] = None,
) -> tuple[LogWeight, Value]:
    """Weighted evaluation of ``m`` against exact traces ``sa`` (consumed) and ``sb`` (provided)."""
    replay = _Replay(sa, sb, weighted=True)
    value = _run_replay(Process(p, _top_decl(m, consume, provide), env=env), replay)
    return replay.weight, value


def reduce_cmd(
    p: Program,
    env: Environment,
    sa: GuidanceTrace,
    sb: GuidanceTrace,
    m: Command,
    *,
    consume: Optional[str] = None,
    provide: Optional[str] = None,
) -> Value:
    """Probability-free reduction; raises Stuck where evaluation would fail or weigh zero."""
    replay = _Replay(sa, sb, weighted=False)
    return _run_replay(Process(p, _top_decl(m, consume, provide), env=env), replay)


def _proc(p: Program, name: str) -> ProcDecl:
    d = p.get_proc(name)
    if d is None:
        raise EvalError(f"unknown procedure {name!r}")
    return d


def eval_proc(
    p: Program,
    name: str,
    args: Sequence[Value],
    sa: GuidanceTrace,
    sb: GuidanceTrace,
) -> tuple[LogWeight, Value]:
    """Weighted evaluation of a procedure body run as a top-level program."""
    replay = _Replay(sa, sb, weighted=True)
    value = _run_replay(Process(p, _proc(p, name), args), replay)
    return replay.weight, value


def reduce_proc(
    p: Program,
    name: str,
    args: Sequence[Value],
    sa: GuidanceTrace,
    sb: GuidanceTrace,
) -> Value:
    replay = _Replay(sa, sb, weighted=False)
    return _run_replay(Process(p, _proc(p, name), args), replay)


def model_log_density(
    p: Program,
    model: str,
    so: GuidanceTrace,
    sl: GuidanceTrace,
    args: Sequence[Value] = (),
) -> LogWeight:
    """Density of the model on latent ``sl`` and observation ``so``; IMPOSSIBLE when they do not fit."""
    try:
        w, _ = eval_proc(p, model, args, sl, so)
    except TraceMismatch:
        return IMPOSSIBLE
    return w
