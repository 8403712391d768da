"""Runtime values, primitive distributions and environments."""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterator, Mapping, Optional, Union

from gpp.exceptions import UnboundVariable
from gpp.schemas.syntax import DistFamily, Expression
from gpp.schemas.types import BaseType

if TYPE_CHECKING:
    from gpp.schemas.trace import GuidanceTrace


@dataclass(frozen=True, slots=True)
class PrimDist:
    """A primitive distribution with evaluated parameters.

    Construct through ``gpp.services.distributions.make_dist`` so that the
    parameter domain is checked.
    """

    family: DistFamily
    params: tuple[float, ...] = ()


@dataclass(frozen=True, slots=True)
class Triv:
    pass


@dataclass(frozen=True, slots=True)
class BoolV:
    value: bool


@dataclass(frozen=True, slots=True)
class RealV:
    value: float


@dataclass(frozen=True, slots=True)
class NatV:
    value: int


@dataclass(frozen=True, slots=True)
class Closure:
    env: Environment
    param: str
    param_type: BaseType
    body: Expression


@dataclass(frozen=True, slots=True)
class DistV:
    dist: PrimDist


@dataclass(frozen=True, slots=True)
class TraceV:
    trace: GuidanceTrace


Value = Union[Triv, BoolV, RealV, NatV, Closure, DistV, TraceV]
ScalarValue = Union[Triv, BoolV, RealV, NatV]

TRIV = Triv()
TRUE = BoolV(True)
FALSE = BoolV(False)


def is_scalar_value(v: Value) -> bool:
    return isinstance(v, (Triv, BoolV, RealV, NatV))


class Environment:
    """Persistent variable → value map; ``extend`` returns a new environment."""

    __slots__ = ("_bindings",)

    def __init__(self, bindings: Optional[Mapping[str, Value]] = None) -> None:
        self._bindings: dict[str, Value] = dict(bindings or {})

    @classmethod
    def empty(cls) -> Environment:
        return cls()

    def extend(self, name: str, value: Value) -> Environment:
        new = Environment.__new__(Environment)
        new._bindings = {**self._bindings, name: value}
        return new

    def lookup(self, name: str) -> Value:
        try:
            return self._bindings[name]
        except KeyError:
            raise UnboundVariable(f"variable {name!r} is not bound") from None

    def __contains__(self, name: object) -> bool:
        return name in self._bindings

    def __iter__(self) -> Iterator[str]:
        return iter(self._bindings)

    def items(self):
        return self._bindings.items()

    def __len__(self) -> int:
        return len(self._bindings)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Environment) and self._bindings == other._bindings

    def __hash__(self) -> int:
        return hash(tuple(sorted(self._bindings)))

    def __repr__(self) -> str:
        return f"Environment({self._bindings!r})"

    def __getstate__(self):
        return self._bindings

    def __setstate__(self, state) -> None:
        self._bindings = state
