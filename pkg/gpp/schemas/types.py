"""Basic types, guide types, type definitions and procedure signatures."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union


# ── Basic types ───────────────────────────────────────────────────────────────
@dataclass(frozen=True, slots=True)
class Unit:
    pass


@dataclass(frozen=True, slots=True)
class Bool:
    pass


@dataclass(frozen=True, slots=True)
class UnitReal:
    """Reals in the open interval (0, 1)."""


@dataclass(frozen=True, slots=True)
class PosReal:
    """Strictly positive reals."""


@dataclass(frozen=True, slots=True)
class Real:
    pass


@dataclass(frozen=True, slots=True)
class FinNat:
    """Naturals strictly below ``n``."""

    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"FinNat bound must be >= 1, got {self.n}")


@dataclass(frozen=True, slots=True)
class Nat:
    pass


@dataclass(frozen=True, slots=True)
class Arrow:
    arg: BaseType
    res: BaseType


@dataclass(frozen=True, slots=True)
class Dist:
    carrier: BaseType

    def __post_init__(self) -> None:
        if not is_scalar(self.carrier):
            raise ValueError("distribution carrier must be a scalar type")


@dataclass(frozen=True, slots=True)
class TraceOf:
    """First-class guidance trace; ``protocol`` is None for an unannotated ``trace``."""

    protocol: Optional[GuideType] = None


ScalarType = Union[Unit, Bool, UnitReal, PosReal, Real, FinNat, Nat]
BaseType = Union[Unit, Bool, UnitReal, PosReal, Real, FinNat, Nat, Arrow, Dist, TraceOf]

UNIT = Unit()
BOOL = Bool()
UNIT_REAL = UnitReal()
POS_REAL = PosReal()
REAL = Real()
NAT = Nat()

_SCALARS = (Unit, Bool, UnitReal, PosReal, Real, FinNat, Nat)


def is_scalar(t: BaseType) -> bool:
    return isinstance(t, _SCALARS)


# ── Guide types ───────────────────────────────────────────────────────────────
@dataclass(frozen=True, slots=True)
class TyVar:
    name: str


@dataclass(frozen=True, slots=True)
class End:
    """The ended channel."""


@dataclass(frozen=True, slots=True)
class OpApp:
    op: str
    arg: GuideType


@dataclass(frozen=True, slots=True)
class SampleP:
    """Provider sends a sample of ``carrier`` then continues as ``cont``."""

    carrier: BaseType
    cont: GuideType


@dataclass(frozen=True, slots=True)
class SampleC:
    """Consumer sends a sample of ``carrier`` then continues as ``cont``."""

    carrier: BaseType
    cont: GuideType


@dataclass(frozen=True, slots=True)
class ChoiceP:
    """Provider selects a branch."""

    left: GuideType
    right: GuideType


@dataclass(frozen=True, slots=True)
class ChoiceC:
    """Consumer selects a branch."""

    left: GuideType
    right: GuideType


GuideType = Union[TyVar, End, OpApp, SampleP, SampleC, ChoiceP, ChoiceC]

END = End()


@dataclass(frozen=True, slots=True)
class TypeDef:
    op: str
    param: str
    body: GuideType


@dataclass(frozen=True, slots=True)
class ProcSignature:
    arg_types: tuple[BaseType, ...]
    ret_type: BaseType
    consume_op: Optional[tuple[str, str]] = None
    provide_op: Optional[tuple[str, str]] = None

    def __post_init__(self) -> None:
        if self.consume_op and self.provide_op and self.consume_op[0] == self.provide_op[0]:
            raise ValueError("consumed and provided channel names must differ")


TypeDefTable = dict[str, TypeDef]
