"""Type checker – basic types, backward guide-type inference and model/guide compatibility."""
from __future__ import annotations

import time
from typing import Callable, Mapping, Optional

import structlog

from gpp.exceptions import ChannelMismatch, ProgramTypeError
from gpp.schemas.records import CompatReport
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
from gpp.schemas.types import (
    BOOL,
    END,
    NAT,
    POS_REAL,
    REAL,
    UNIT,
    UNIT_REAL,
    Arrow,
    BaseType,
    ChoiceC,
    Dist,
    FinNat,
    GuideType,
    Nat,
    OpApp,
    PosReal,
    ProcSignature,
    Real,
    SampleP,
    TraceOf,
    TyVar,
    TypeDef,
    UnitReal,
    is_scalar,
)
from gpp.schemas.values import BoolV, Closure, DistV, NatV, RealV, TraceV, Triv, Value
from gpp.services.distributions import result_type, value_in_scalar
from gpp.services.guide_types import (
    check_trace,
    guide_type_mismatch,
    is_amp_free,
    is_oplus_free,
)
from gpp.services.parser import format_base_type, format_guide_type
from gpp.services.validation import validate_program

log = structlog.get_logger(__name__)

TypingContext = Mapping[str, BaseType]
SignatureTable = dict[str, ProcSignature]
TypeDefTable = dict[str, TypeDef]

# type variable used as the continuation parameter of every inferred operator
CONT_VAR = "X"


# ── Subtyping ─────────────────────────────────────────────────────────────────
_REAL_RANK = {UnitReal: 0, PosReal: 1, Real: 2}


def subtype(t1: BaseType, t2: BaseType) -> bool:
    if t1 == t2:
        return True
    r1, r2 = _REAL_RANK.get(type(t1)), _REAL_RANK.get(type(t2))
    if r1 is not None and r2 is not None:
        return r1 <= r2
    if isinstance(t1, FinNat):
        return isinstance(t2, Nat) or (isinstance(t2, FinNat) and t1.n <= t2.n)
    if isinstance(t1, Arrow) and isinstance(t2, Arrow):
        return subtype(t2.arg, t1.arg) and subtype(t1.res, t2.res)
    return False


def join(t1: BaseType, t2: BaseType) -> Optional[BaseType]:
    """Least upper bound under ``subtype``, or None when the types are unrelated."""
    if subtype(t1, t2):
        return t2
    if subtype(t2, t1):
        return t1
    return None


def literal_type(e: Expression) -> BaseType:
    if isinstance(e, RealLit):
        if 0.0 < e.value < 1.0:
            return UNIT_REAL
        if e.value > 0.0:
            return POS_REAL
        return REAL
    if isinstance(e, NatLit):
        return FinNat(e.value + 1)
    raise TypeError(f"not a numeric literal: {e!r}")


# ── Operator table ────────────────────────────────────────────────────────────
# signatures are tried in order; the first whose parameters accept the
# argument types decides the result type
_MIXED_REAL = [(NAT, REAL, REAL), (REAL, NAT, REAL)]
_MIXED_BOOL = [(NAT, REAL, BOOL), (REAL, NAT, BOOL)]
OP_TABLE: dict[str, list[tuple[BaseType, BaseType, BaseType]]] = {
    "+": [(POS_REAL, POS_REAL, POS_REAL), (REAL, REAL, REAL), (NAT, NAT, NAT), *_MIXED_REAL],
    "*": [(UNIT_REAL, UNIT_REAL, UNIT_REAL), (POS_REAL, POS_REAL, POS_REAL), (REAL, REAL, REAL),
          (NAT, NAT, NAT), *_MIXED_REAL],
    "-": [(REAL, REAL, REAL), (NAT, NAT, REAL), *_MIXED_REAL],
    "/": [(POS_REAL, POS_REAL, POS_REAL), (REAL, REAL, REAL), (NAT, NAT, REAL), *_MIXED_REAL],
    "<": [(REAL, REAL, BOOL), (NAT, NAT, BOOL), *_MIXED_BOOL],
    "<=": [(REAL, REAL, BOOL), (NAT, NAT, BOOL), *_MIXED_BOOL],
    "==": [(BOOL, BOOL, BOOL), (UNIT, UNIT, BOOL), (REAL, REAL, BOOL), (NAT, NAT, BOOL),
           *_MIXED_BOOL],
    "and": [(BOOL, BOOL, BOOL)],
    "or": [(BOOL, BOOL, BOOL)],
}

# built-in functions, tried in order like OP_TABLE; domain errors are runtime
PRIM_TABLE: dict[str, list[tuple[BaseType, BaseType]]] = {
    "sqrt": [(UNIT_REAL, UNIT_REAL), (POS_REAL, POS_REAL), (REAL, REAL), (NAT, REAL)],
    "log": [(REAL, REAL), (NAT, REAL)],
    "exp": [(REAL, POS_REAL), (NAT, POS_REAL)],
}

# (parameter bound, carrier) per distribution family; Cat is variadic
_DIST_RULES: dict[str, tuple[tuple[BaseType, ...], BaseType]] = {
    "Ber": ((UNIT_REAL,), BOOL),
    "Unif": ((), UNIT_REAL),
    "Beta": ((POS_REAL, POS_REAL), UNIT_REAL),
    "Gamma": ((POS_REAL, POS_REAL), POS_REAL),
    "Normal": ((REAL, POS_REAL), REAL),
    "Geo": ((UNIT_REAL,), NAT),
    "Pois": ((POS_REAL,), NAT),
}


def _fmt(t: BaseType) -> str:
    return format_base_type(t)


def _err(message: str, span: Optional[SourceSpan]) -> ProgramTypeError:
    return ProgramTypeError(message, span)


# ── Expressions ───────────────────────────────────────────────────────────────
def type_of_expr(g: TypingContext, e: Expression) -> BaseType:
    if isinstance(e, Var):
        t = g.get(e.name)
        if t is None:
            raise _err(f"unbound variable {e.name!r}", e.span)
        return t
    if isinstance(e, TrivLit):
        return UNIT
    if isinstance(e, BoolLit):
        return BOOL
    if isinstance(e, (RealLit, NatLit)):
        return literal_type(e)
    if isinstance(e, Cond):
        c = type_of_expr(g, e.cond)
        if not subtype(c, BOOL):
            raise _err(f"condition must be bool, got {_fmt(c)}", e.cond.span)
        t1, t2 = type_of_expr(g, e.then), type_of_expr(g, e.else_)
        t = join(t1, t2)
        if t is None:
            raise _err(f"conditional arms disagree: {_fmt(t1)} vs {_fmt(t2)}", e.span)
        return t
    if isinstance(e, BinOp):
        lt, rt = type_of_expr(g, e.lhs), type_of_expr(g, e.rhs)
        for a1, a2, res in OP_TABLE[e.op]:
            if subtype(lt, a1) and subtype(rt, a2):
                return res
        raise _err(f"operator {e.op} does not accept ({_fmt(lt)}, {_fmt(rt)})", e.span)
    if isinstance(e, Lambda):
        return Arrow(e.param_type, type_of_expr({**g, e.param: e.param_type}, e.body))
    if isinstance(e, App):
        ft = type_of_expr(g, e.fn)
        if not isinstance(ft, Arrow):
            raise _err(f"applying a non-function of type {_fmt(ft)}", e.fn.span)
        at = type_of_expr(g, e.arg)
        if not subtype(at, ft.arg):
            raise _err(f"argument of type {_fmt(at)} where {_fmt(ft.arg)} expected", e.arg.span)
        return ft.res
    if isinstance(e, Let):
        return type_of_expr({**g, e.name: type_of_expr(g, e.bound)}, e.body)
    if isinstance(e, DistExpr):
        return _type_of_dist(g, e)
    if isinstance(e, PrimApp):
        at = type_of_expr(g, e.arg)
        for param, res in PRIM_TABLE[e.fn]:
            if subtype(at, param):
                return res
        raise _err(f"{e.fn} does not accept {_fmt(at)}", e.span)
    if isinstance(e, TraceGet):
        if not is_scalar(e.annot):
            raise _err("trace accessor annotation must be a scalar type", e.span)
        tt = type_of_expr(g, e.trace)
        if not isinstance(tt, TraceOf):
            raise _err(f"get expects a trace, got {_fmt(tt)}", e.trace.span)
        it = type_of_expr(g, e.index)
        if not subtype(it, NAT):
            raise _err(f"trace index must be nat, got {_fmt(it)}", e.index.span)
        return e.annot
    raise TypeError(f"not an expression: {e!r}")


def _type_of_dist(g: TypingContext, e: DistExpr) -> BaseType:
    arg_types = [type_of_expr(g, a) for a in e.args]
    if e.family == "Cat":
        for a, t in zip(e.args, arg_types):
            if not subtype(t, POS_REAL):
                raise _err(f"Cat weight must be preal, got {_fmt(t)}", a.span)
        return Dist(FinNat(len(e.args)))
    bounds, carrier = _DIST_RULES[e.family]
    if len(bounds) != len(arg_types):
        raise _err(f"{e.family} takes {len(bounds)} argument(s)", e.span)
    for a, t, bound in zip(e.args, arg_types, bounds):
        if not subtype(t, bound):
            raise _err(f"{e.family} parameter must be {_fmt(bound)}, got {_fmt(t)}", a.span)
    return Dist(carrier)


# ── Values ────────────────────────────────────────────────────────────────────
def type_of_value(v: Value) -> BaseType:
    """Minimal type of a value."""
    if isinstance(v, Triv):
        return UNIT
    if isinstance(v, BoolV):
        return BOOL
    if isinstance(v, RealV):
        return literal_type(RealLit(v.value))
    if isinstance(v, NatV):
        return FinNat(v.value + 1)
    if isinstance(v, DistV):
        return Dist(result_type(v.dist))
    if isinstance(v, TraceV):
        return TraceOf()
    env_types = {name: type_of_value(val) for name, val in v.env.items()}
    return Arrow(v.param_type, type_of_expr({**env_types, v.param: v.param_type}, v.body))


def check_value(v: Value, t: BaseType, defs: Optional[Mapping[str, TypeDef]] = None) -> bool:
    if is_scalar(t):
        return value_in_scalar(v, t)
    if isinstance(t, Dist):
        return isinstance(v, DistV) and result_type(v.dist) == t.carrier
    if isinstance(t, TraceOf):
        if not isinstance(v, TraceV):
            return False
        return t.protocol is None or check_trace(v.trace, t.protocol, defs or {})
    if isinstance(t, Arrow):
        if not isinstance(v, Closure) or not subtype(t.arg, v.param_type):
            return False
        try:
            return subtype(type_of_value(v).res, t.res)
        except ProgramTypeError:
            return False
    return False


# ── Commands ──────────────────────────────────────────────────────────────────
class _Signatures:
    """Argument and return types of procedures, resolving unannotated returns on demand."""

    def __init__(self, program: Program) -> None:
        self.program = program
        self._ret: dict[str, BaseType] = {}
        self._active: set[str] = set()

    def decl(self, name: str, span: Optional[SourceSpan]) -> ProcDecl:
        d = self.program.get_proc(name)
        if d is None:
            raise _err(f"call to undefined procedure {name!r}", span)
        return d

    def ret_type(self, name: str, span: Optional[SourceSpan] = None) -> BaseType:
        d = self.decl(name, span)
        if d.ret_type is not None:
            return d.ret_type
        if name in self._ret:
            return self._ret[name]
        if name in self._active:
            raise ProgramTypeError(
                "recursive procedure needs a return type annotation", d.span, proc=name
            )
        self._active.add(name)
        try:
            t = _cmd_type(self, dict(d.params), d.body, d)
        finally:
            self._active.discard(name)
        self._ret[name] = t
        return t


class _TableSignatures(_Signatures):
    def __init__(self, table: Mapping[str, ProcSignature]) -> None:
        self.table = table

    def arg_types(self, name: str, span: Optional[SourceSpan]) -> tuple[BaseType, ...]:
        sig = self.table.get(name)
        if sig is None:
            raise _err(f"call to undefined procedure {name!r}", span)
        return sig.arg_types

    def ret_type(self, name: str, span: Optional[SourceSpan] = None) -> BaseType:
        sig = self.table.get(name)
        if sig is None:
            raise _err(f"call to undefined procedure {name!r}", span)
        return sig.ret_type


def _arg_types(sigs: _Signatures, name: str, span: Optional[SourceSpan]) -> tuple[BaseType, ...]:
    if isinstance(sigs, _TableSignatures):
        return sigs.arg_types(name, span)
    return tuple(t for _, t in sigs.decl(name, span).params)


def _check_call_args(sigs: _Signatures, g: TypingContext, m: Call) -> None:
    params = _arg_types(sigs, m.proc, m.span)
    if len(params) != len(m.args):
        raise _err(f"{m.proc} takes {len(params)} argument(s), got {len(m.args)}", m.span)
    for a, pt in zip(m.args, params):
        at = type_of_expr(g, a)
        if not subtype(at, pt):
            raise _err(f"argument of type {_fmt(at)} where {_fmt(pt)} expected", a.span)


def _dist_carrier(g: TypingContext, e: Expression) -> BaseType:
    t = type_of_expr(g, e)
    if not isinstance(t, Dist):
        raise _err(f"sample expects a distribution, got {_fmt(t)}", e.span)
    return t.carrier


def _check_chan(decl: Optional[ProcDecl], chan: str, span: Optional[SourceSpan]) -> None:
    if decl is not None and decl.role_of(chan) is None:
        raise _err(f"channel {chan!r} is not declared in the procedure header", span)


def _cmd_type(sigs: _Signatures, g: TypingContext, m: Command, decl: Optional[ProcDecl]) -> BaseType:
    # Bnd chains are right-nested; iterate over them to keep recursion shallow
    env = dict(g)
    while isinstance(m, Bnd):
        env[m.binder] = _cmd_type(sigs, env, m.first, decl)
        m = m.rest
    if isinstance(m, Ret):
        return type_of_expr(env, m.expr)
    if isinstance(m, Call):
        _check_call_args(sigs, env, m)
        return sigs.ret_type(m.proc, m.span)
    if isinstance(m, (SampleRecv, SampleSend)):
        _check_chan(decl, m.chan, m.span)
        return _dist_carrier(env, m.dist)
    if isinstance(m, (BranchSend, BranchRecv)):
        _check_chan(decl, m.chan, m.span)
        if isinstance(m, BranchSend):
            pt = type_of_expr(env, m.pred)
            if not subtype(pt, BOOL):
                raise _err(f"branch predicate must be bool, got {_fmt(pt)}", m.pred.span)
        t1 = _cmd_type(sigs, env, m.then, decl)
        t2 = _cmd_type(sigs, env, m.else_, decl)
        t = join(t1, t2)
        if t is None:
            raise _err(f"branch arms disagree: {_fmt(t1)} vs {_fmt(t2)}", m.span)
        return t
    raise TypeError(f"not a command: {m!r}")


def base_type_of_cmd(s: Mapping[str, ProcSignature], g: TypingContext, m: Command) -> BaseType:
    """Result basic type of ``m`` under signatures ``s`` (forward pass)."""
    return _cmd_type(_TableSignatures(s), g, m, None)


# ── Backward guide-type inference ─────────────────────────────────────────────
def _types_equal(a: Optional[GuideType], b: Optional[GuideType]) -> bool:
    return a == b


def _fmt_opt(a: Optional[GuideType]) -> str:
    return "-" if a is None else format_guide_type(a)


def infer_cmd_pre(
    s: Mapping[str, ProcSignature],
    g: TypingContext,
    m: Command,
    a: Optional[str],
    b: Optional[str],
    a_post: Optional[GuideType],
    b_post: Optional[GuideType],
) -> tuple[Optional[GuideType], Optional[GuideType]]:
    """Pre-types of the consumed channel ``a`` and provided channel ``b``.

    Absent channels are passed and returned as None.
    """
    return _infer(_TableSignatures(s), g, m, a, b, a_post, b_post)


def _infer(
    sigs: _Signatures,
    g: TypingContext,
    m: Command,
    a: Optional[str],
    b: Optional[str],
    a_post: Optional[GuideType],
    b_post: Optional[GuideType],
) -> tuple[Optional[GuideType], Optional[GuideType]]:
    if isinstance(m, Ret):
        type_of_expr(g, m.expr)
        return a_post, b_post
    if isinstance(m, Bnd):
        # collect the chain, then walk it backwards
        chain: list[tuple[Command, str, dict[str, BaseType]]] = []
        env = dict(g)
        while isinstance(m, Bnd):
            chain.append((m.first, m.binder, env))
            env = {**env, m.binder: _cmd_type(sigs, env, m.first, None)}
            m = m.rest
        a_cur, b_cur = _infer(sigs, env, m, a, b, a_post, b_post)
        for first, _, first_env in reversed(chain):
            a_cur, b_cur = _infer(sigs, first_env, first, a, b, a_cur, b_cur)
        return a_cur, b_cur
    if isinstance(m, Call):
        _check_call_args(sigs, g, m)
        sig = _callee_signature(sigs, m)
        if sig.consume_op is not None:
            if a is None:
                raise _err(f"{m.proc} consumes a channel but the caller has none", m.span)
            a_post = OpApp(sig.consume_op[1], a_post)
        if sig.provide_op is not None:
            if b is None:
                raise _err(f"{m.proc} provides a channel but the caller has none", m.span)
            b_post = OpApp(sig.provide_op[1], b_post)
        return a_post, b_post
    if isinstance(m, SampleRecv):
        carrier = _dist_carrier(g, m.dist)
        if m.chan == a:
            return SampleP(carrier, a_post), b_post
        _reject_chan(m.chan, b, "sample[recv] on the provided channel", m.span)
    if isinstance(m, SampleSend):
        carrier = _dist_carrier(g, m.dist)
        if m.chan == b:
            return a_post, SampleP(carrier, b_post)
        _reject_chan(m.chan, a, "sample[send] on the consumed channel", m.span)
    if isinstance(m, BranchSend):
        pt = type_of_expr(g, m.pred)
        if not subtype(pt, BOOL):
            raise _err(f"branch predicate must be bool, got {_fmt(pt)}", m.pred.span)
        if m.chan == a:
            a1, b1 = _infer(sigs, g, m.then, a, b, a_post, b_post)
            a2, b2 = _infer(sigs, g, m.else_, a, b, a_post, b_post)
            if not _types_equal(b1, b2):
                raise _err(
                    f"branch arms disagree on channel {b}: {_fmt_opt(b1)} vs {_fmt_opt(b2)}", m.span
                )
            return ChoiceC(a1, a2), b1
        _reject_chan(m.chan, b, "branch send on the provided channel", m.span)
    if isinstance(m, BranchRecv):
        if m.chan == b:
            a1, b1 = _infer(sigs, g, m.then, a, b, a_post, b_post)
            a2, b2 = _infer(sigs, g, m.else_, a, b, a_post, b_post)
            if not _types_equal(a1, a2):
                raise _err(
                    f"branch arms disagree on channel {a}: {_fmt_opt(a1)} vs {_fmt_opt(a2)}", m.span
                )
            return a1, ChoiceC(b1, b2)
        _reject_chan(m.chan, a, "branch recv on the consumed channel", m.span)
    raise TypeError(f"not a command: {m!r}")


def _reject_chan(chan: str, other: Optional[str], what: str, span: Optional[SourceSpan]) -> None:
    if chan == other:
        raise _err(f"{what} would need a dual guide type, which is not supported", span)
    raise _err(f"channel {chan!r} is not declared in the procedure header", span)


def _callee_signature(sigs: _Signatures, m: Call) -> ProcSignature:
    if isinstance(sigs, _TableSignatures):
        sig = sigs.table.get(m.proc)
        if sig is None:
            raise _err(f"call to undefined procedure {m.proc!r}", m.span)
        return sig
    raise TypeError("guide inference needs a signature table")


# ── Programs ──────────────────────────────────────────────────────────────────
def _fresh_op(base: str, taken: set[str]) -> str:
    name, k = base, 1
    while name in taken:
        name = f"{base}_{k}"
        k += 1
    taken.add(name)
    return name


def build_signatures(p: Program) -> SignatureTable:
    """Signatures with fresh operator names; return types resolved by the forward pass."""
    resolver = _Signatures(p)
    taken = set(p.typedef_table)
    table: SignatureTable = {}
    for d in p.procs:
        try:
            ret = resolver.ret_type(d.name, d.span)
        except ProgramTypeError as exc:
            if exc.proc is None:
                raise ProgramTypeError(exc.message, exc.span, proc=d.name) from None
            raise
        consume_op = (d.consume, _fresh_op(f"{d.name}_{d.consume}", taken)) if d.consume else None
        provide_op = (d.provide, _fresh_op(f"{d.name}_{d.provide}", taken)) if d.provide else None
        table[d.name] = ProcSignature(tuple(t for _, t in d.params), ret, consume_op, provide_op)
    return table


def infer_program_types(p: Program) -> tuple[SignatureTable, TypeDefTable]:
    started = time.perf_counter()
    diagnostics = validate_program(p)
    if diagnostics:
        first = diagnostics[0]
        raise ProgramTypeError(first.message, first.span, proc=first.decl)
    sigs = build_signatures(p)
    resolver = _TableSignatures(sigs)
    defs: TypeDefTable = dict(p.typedef_table)
    post = TyVar(CONT_VAR)
    for d in p.procs:
        sig = sigs[d.name]
        try:
            a_pre, b_pre = _infer(
                resolver,
                dict(d.params),
                d.body,
                d.consume,
                d.provide,
                post if d.consume else None,
                post if d.provide else None,
            )
            body_type = _cmd_type(resolver, dict(d.params), d.body, d)
        except ProgramTypeError as exc:
            if exc.proc is None:
                raise ProgramTypeError(exc.message, exc.span, proc=d.name) from None
            raise
        if not subtype(body_type, sig.ret_type):
            raise ProgramTypeError(
                f"body returns {_fmt(body_type)} but {_fmt(sig.ret_type)} is declared",
                d.span,
                proc=d.name,
            )
        if sig.consume_op is not None:
            defs[sig.consume_op[1]] = TypeDef(sig.consume_op[1], CONT_VAR, a_pre)
        if sig.provide_op is not None:
            defs[sig.provide_op[1]] = TypeDef(sig.provide_op[1], CONT_VAR, b_pre)
    log.debug(
        "types_inferred",
        procs=len(p.procs),
        typedefs=len(defs),
        elapsed_ms=round((time.perf_counter() - started) * 1000, 3),
    )
    return sigs, defs


def proc_protocols(
    p: Program, sigs: Mapping[str, ProcSignature], name: str
) -> tuple[Optional[GuideType], Optional[GuideType]]:
    """Closed protocols of a top-level run of ``name`` (posts instantiated with End)."""
    d = p.get_proc(name)
    if d is None:
        raise ProgramTypeError(f"unknown procedure {name!r}")
    return infer_cmd_pre(
        sigs,
        dict(d.params),
        d.body,
        d.consume,
        d.provide,
        END if d.consume else None,
        END if d.provide else None,
    )


def check_model_guide(p: Program, model: str, guide: str) -> CompatReport:
    sigs, defs = infer_program_types(p)
    mdecl, gdecl = p.get_proc(model), p.get_proc(guide)
    if mdecl is None or gdecl is None:
        missing = model if mdecl is None else guide
        raise ProgramTypeError(f"unknown procedure {missing!r}")
    if mdecl.consume is None:
        raise ChannelMismatch(f"model {model} consumes no latent channel", mdecl.span)
    if gdecl.consume is not None:
        raise ChannelMismatch(
            f"guide {guide} must not consume a channel, found {gdecl.consume!r}", gdecl.span
        )
    if gdecl.provide != mdecl.consume:
        raise ChannelMismatch(
            f"guide {guide} provides {gdecl.provide!r} but model {model} consumes {mdecl.consume!r}",
            gdecl.span,
        )
    _, a_guide = proc_protocols(p, sigs, guide)
    a_model, b_model = proc_protocols(p, sigs, model)
    mismatch = guide_type_mismatch(a_guide, a_model, defs)
    oplus_free = is_oplus_free(a_guide, defs)
    amp_free = b_model is None or is_amp_free(b_model, defs)
    equal = mismatch is None
    if mismatch is None and not oplus_free:
        mismatch = "latent protocol contains a provider choice (+)"
    elif mismatch is None and not amp_free:
        mismatch = "observation protocol contains a consumer choice &"
    verdict = "accept" if equal and oplus_free and amp_free else "reject"
    log.info("compat_checked", model=model, guide=guide, verdict=verdict)
    return CompatReport(
        channel=mdecl.consume,
        latent_type=a_guide,
        obs_type=b_model,
        oplus_free=oplus_free,
        amp_free=amp_free,
        equal=equal,
        verdict=verdict,
        mismatch=None if verdict == "accept" else mismatch,
        typedefs=tuple(defs.values()),
    )


def check_proposal(p: Program, model: str, proposal: str) -> CompatReport:
    """Compat report for an MH proposal; it must take exactly one trace parameter."""
    d = p.get_proc(proposal)
    if d is None:
        raise ProgramTypeError(f"unknown procedure {proposal!r}")
    if len(d.params) != 1 or not isinstance(d.params[0][1], TraceOf):
        raise ProgramTypeError("an MH proposal takes exactly one trace parameter", d.span, proc=proposal)
    report = check_model_guide(p, model, proposal)
    declared = d.params[0][1].protocol
    if declared is not None and report.accepted:
        defs = {td.op: td for td in report.typedefs}
        diff = guide_type_mismatch(declared, report.latent_type, defs)
        if diff is not None:
            raise ProgramTypeError(
                f"trace parameter protocol differs from the latent protocol: {diff}",
                d.span,
                proc=proposal,
            )
    return report
