"""Guide-type algebra – substitution, equality, freeness and trace typing."""
from __future__ import annotations

from collections import deque
from typing import Mapping, Optional

import numpy as np

from gpp.exceptions import UnknownOperator
from gpp.schemas.trace import CBranch, CSample, FOLD, Fold, GuidanceTrace, Message, PBranch, PSample
from gpp.schemas.types import (
    BaseType,
    Bool,
    ChoiceC,
    ChoiceP,
    End,
    FinNat,
    GuideType,
    Nat,
    OpApp,
    PosReal,
    Real,
    SampleC,
    SampleP,
    TyVar,
    TypeDef,
    Unit,
    UnitReal,
)
from gpp.schemas.values import TRIV, BoolV, NatV, RealV, ScalarValue
from gpp.services.distributions import value_in_scalar
from gpp.services.parser import format_base_type, format_guide_type

TypeDefs = Mapping[str, TypeDef]


# ── Structure ─────────────────────────────────────────────────────────────────
def substitute(a: GuideType, var: str, b: GuideType) -> GuideType:
    """Replace free occurrences of ``var`` in ``a`` by ``b``."""
    if isinstance(a, TyVar):
        return b if a.name == var else a
    if isinstance(a, End):
        return a
    if isinstance(a, OpApp):
        return OpApp(a.op, substitute(a.arg, var, b))
    if isinstance(a, SampleP):
        return SampleP(a.carrier, substitute(a.cont, var, b))
    if isinstance(a, SampleC):
        return SampleC(a.carrier, substitute(a.cont, var, b))
    if isinstance(a, ChoiceP):
        return ChoiceP(substitute(a.left, var, b), substitute(a.right, var, b))
    return ChoiceC(substitute(a.left, var, b), substitute(a.right, var, b))


def free_type_vars(a: GuideType) -> set[str]:
    out: set[str] = set()
    stack = [a]
    while stack:
        t = stack.pop()
        if isinstance(t, TyVar):
            out.add(t.name)
        elif isinstance(t, OpApp):
            stack.append(t.arg)
        elif isinstance(t, (SampleP, SampleC)):
            stack.append(t.cont)
        elif isinstance(t, (ChoiceP, ChoiceC)):
            stack.extend((t.left, t.right))
    return out


def operators_of(a: GuideType) -> set[str]:
    out: set[str] = set()
    stack = [a]
    while stack:
        t = stack.pop()
        if isinstance(t, OpApp):
            out.add(t.op)
            stack.append(t.arg)
        elif isinstance(t, (SampleP, SampleC)):
            stack.append(t.cont)
        elif isinstance(t, (ChoiceP, ChoiceC)):
            stack.extend((t.left, t.right))
    return out


def lookup_typedef(defs: TypeDefs, op: str) -> TypeDef:
    try:
        return defs[op]
    except KeyError:
        raise UnknownOperator(f"type operator {op!r} is not defined") from None


def unfold(app: OpApp, defs: TypeDefs) -> GuideType:
    td = lookup_typedef(defs, app.op)
    return substitute(td.body, td.param, app.arg)


def guide_type_equal(a: GuideType, b: GuideType) -> bool:
    """Syntactic equality with nominal operators."""
    return a == b


def _free_of(a: GuideType, defs: TypeDefs, bad: type) -> bool:
    seen: set[str] = set()
    stack = [a]
    while stack:
        t = stack.pop()
        if isinstance(t, bad):
            return False
        if isinstance(t, OpApp):
            stack.append(t.arg)
            if t.op not in seen:
                seen.add(t.op)
                stack.append(lookup_typedef(defs, t.op).body)
        elif isinstance(t, (SampleP, SampleC)):
            stack.append(t.cont)
        elif isinstance(t, (ChoiceP, ChoiceC)):
            stack.extend((t.left, t.right))
    return True


def is_oplus_free(a: GuideType, defs: Optional[TypeDefs] = None) -> bool:
    return _free_of(a, defs or {}, ChoiceP)


def is_amp_free(a: GuideType, defs: Optional[TypeDefs] = None) -> bool:
    return _free_of(a, defs or {}, ChoiceC)


# ── Equivalence up to operator renaming ───────────────────────────────────────
class _Renaming:
    """Bisimulation check: operators are matched by a consistent bijection."""

    def __init__(self, defs: TypeDefs) -> None:
        self.defs = defs
        self.fwd: dict[str, str] = {}
        self.bwd: dict[str, str] = {}
        self.pending: deque[tuple[str, str]] = deque()

    def compare(self, a: GuideType, b: GuideType, var_map: dict[str, str], where: str) -> Optional[str]:
        pos = 0
        stack = [(a, b, pos)]
        while stack:
            x, y, pos = stack.pop()
            if type(x) is not type(y):
                return (f"{where}message {pos}: expected {format_guide_type(x)} "
                        f"but found {format_guide_type(y)}")
            if isinstance(x, TyVar):
                if var_map.get(x.name, x.name) != y.name:
                    return f"{where}message {pos}: type variable {x.name} vs {y.name}"
            elif isinstance(x, (SampleP, SampleC)):
                if x.carrier != y.carrier:
                    return (f"{where}message {pos}: carrier {format_base_type(x.carrier)} "
                            f"vs {format_base_type(y.carrier)}")
                stack.append((x.cont, y.cont, pos + 1))
            elif isinstance(x, (ChoiceP, ChoiceC)):
                stack.append((x.right, y.right, pos + 1))
                stack.append((x.left, y.left, pos + 1))
            elif isinstance(x, OpApp):
                known = self.fwd.get(x.op)
                if known is None and y.op in self.bwd:
                    return f"{where}message {pos}: operator {x.op} vs {y.op}"
                if known is not None and known != y.op:
                    return f"{where}message {pos}: operator {x.op} vs {y.op}"
                if known is None:
                    self.fwd[x.op] = y.op
                    self.bwd[y.op] = x.op
                    self.pending.append((x.op, y.op))
                stack.append((x.arg, y.arg, pos + 1))
        return None

    def run(self, a: GuideType, b: GuideType) -> Optional[str]:
        diff = self.compare(a, b, {}, "")
        while diff is None and self.pending:
            op_a, op_b = self.pending.popleft()
            ta, tb = lookup_typedef(self.defs, op_a), lookup_typedef(self.defs, op_b)
            diff = self.compare(ta.body, tb.body, {ta.param: tb.param}, f"in operator {op_a} vs {op_b}, ")
        return diff


def guide_type_mismatch(a: GuideType, b: GuideType, defs: TypeDefs) -> Optional[str]:
    """Describe the first difference between ``a`` and ``b`` up to operator renaming."""
    return _Renaming(defs).run(a, b)


def guide_type_equiv(a: GuideType, b: GuideType, defs: TypeDefs) -> bool:
    return guide_type_mismatch(a, b, defs) is None


def typedef_equiv(op_a: str, op_b: str, defs: TypeDefs) -> bool:
    """Operators equal up to renaming of operators and their parameter."""
    ta, tb = lookup_typedef(defs, op_a), lookup_typedef(defs, op_b)
    hole = TyVar("__arg__")
    return guide_type_equiv(OpApp(ta.op, hole), OpApp(tb.op, hole), defs)


# ── Trace typing ──────────────────────────────────────────────────────────────
def check_trace(s: GuidanceTrace, a: GuideType, defs: TypeDefs) -> bool:
    """True iff ``s`` inhabits ``a``; each message is checked against one constructor."""
    msgs = s.messages
    i, n = 0, len(msgs)
    t = a
    while True:
        if isinstance(t, End):
            return i == n
        if isinstance(t, TyVar) or i == n:
            return False
        msg = msgs[i]
        if isinstance(t, SampleP):
            if not (isinstance(msg, PSample) and value_in_scalar(msg.value, t.carrier)):
                return False
            t = t.cont
        elif isinstance(t, SampleC):
            if not (isinstance(msg, CSample) and value_in_scalar(msg.value, t.carrier)):
                return False
            t = t.cont
        elif isinstance(t, ChoiceP):
            if not isinstance(msg, PBranch):
                return False
            t = t.left if msg.choice else t.right
        elif isinstance(t, ChoiceC):
            if not isinstance(msg, CBranch):
                return False
            t = t.left if msg.choice else t.right
        else:
            if not isinstance(msg, Fold):
                return False
            t = unfold(t, defs)
        i += 1


def random_scalar(t: BaseType, rng: np.random.Generator) -> ScalarValue:
    """Draw an arbitrary inhabitant of a scalar type."""
    if isinstance(t, Unit):
        return TRIV
    if isinstance(t, Bool):
        return BoolV(bool(rng.random() < 0.5))
    if isinstance(t, UnitReal):
        u = float(rng.random())
        return RealV(u if u > 0.0 else 0.5)
    if isinstance(t, PosReal):
        x = float(rng.exponential(2.0))
        return RealV(x if x > 0.0 else 1.0)
    if isinstance(t, Real):
        return RealV(float(rng.normal(0.0, 3.0)))
    if isinstance(t, FinNat):
        return NatV(int(rng.integers(0, t.n)))
    if isinstance(t, Nat):
        return NatV(int(rng.geometric(0.3)) - 1)
    raise TypeError(f"not a scalar type: {t!r}")


def generate_trace(
    a: GuideType,
    defs: TypeDefs,
    rng: np.random.Generator,
    budget: int = 64,
) -> Optional[GuidanceTrace]:
    """Sample a trace inhabiting closed ``a``; None if it would exceed ``budget`` messages."""
    out: list[Message] = []
    t = a
    while not isinstance(t, End):
        if len(out) >= budget or isinstance(t, TyVar):
            return None
        if isinstance(t, SampleP):
            out.append(PSample(random_scalar(t.carrier, rng)))
            t = t.cont
        elif isinstance(t, SampleC):
            out.append(CSample(random_scalar(t.carrier, rng)))
            t = t.cont
        elif isinstance(t, (ChoiceP, ChoiceC)):
            choice = bool(rng.random() < 0.5)
            out.append(PBranch(choice) if isinstance(t, ChoiceP) else CBranch(choice))
            t = t.left if choice else t.right
        else:
            out.append(FOLD)
            t = unfold(t, defs)
    return GuidanceTrace(tuple(out))
