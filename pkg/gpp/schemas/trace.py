"""Guidance messages, traces and their JSON wire format."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Literal, Optional, Sequence, Union, overload

from pydantic import BaseModel, ConfigDict, TypeAdapter, ValidationError, model_validator

from gpp.exceptions import TraceFormatError
from gpp.schemas.values import BoolV, NatV, RealV, ScalarValue, TRIV, Triv


@dataclass(frozen=True, slots=True)
class PSample:
    value: ScalarValue


@dataclass(frozen=True, slots=True)
class CSample:
    value: ScalarValue


@dataclass(frozen=True, slots=True)
class PBranch:
    choice: bool


@dataclass(frozen=True, slots=True)
class CBranch:
    choice: bool


@dataclass(frozen=True, slots=True)
class Fold:
    pass


Message = Union[PSample, CSample, PBranch, CBranch, Fold]

FOLD = Fold()


@dataclass(frozen=True, slots=True)
class GuidanceTrace:
    messages: tuple[Message, ...] = ()

    def __len__(self) -> int:
        return len(self.messages)

    def __iter__(self) -> Iterator[Message]:
        return iter(self.messages)

    @overload
    def __getitem__(self, i: int) -> Message: ...

    @overload
    def __getitem__(self, i: slice) -> GuidanceTrace: ...

    def __getitem__(self, i):
        if isinstance(i, slice):
            return GuidanceTrace(self.messages[i])
        return self.messages[i]

    def __add__(self, other: GuidanceTrace) -> GuidanceTrace:
        return concat_traces(self, other)

    @classmethod
    def of(cls, *messages: Message) -> GuidanceTrace:
        return cls(tuple(messages))


EMPTY_TRACE = GuidanceTrace()


def concat_traces(s1: GuidanceTrace, s2: GuidanceTrace) -> GuidanceTrace:
    if not s1.messages:
        return s2
    if not s2.messages:
        return s1
    return GuidanceTrace(s1.messages + s2.messages)


# ── JSON wire format ──────────────────────────────────────────────────────────
MessageKind = Literal["psample", "csample", "pbranch", "cbranch", "fold"]


class MessageModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: MessageKind
    value: Optional[Union[bool, int, float]] = None

    @model_validator(mode="after")
    def _value_matches_kind(self) -> MessageModel:
        if self.kind in ("pbranch", "cbranch") and not isinstance(self.value, bool):
            raise ValueError(f"{self.kind} needs a boolean value")
        if self.kind == "fold" and self.value is not None:
            raise ValueError("fold carries no value")
        return self


_messages_adapter = TypeAdapter(list[MessageModel])


def _decode_scalar(raw: Union[bool, int, float, None]) -> ScalarValue:
    if raw is None:
        return TRIV
    if isinstance(raw, bool):
        return BoolV(raw)
    if isinstance(raw, int) and raw >= 0:
        return NatV(raw)
    return RealV(float(raw))


def _encode_scalar(v: ScalarValue) -> Union[bool, int, float, None]:
    if isinstance(v, Triv):
        return None
    if isinstance(v, BoolV):
        return v.value
    if isinstance(v, NatV):
        return v.value
    return float(v.value)


def message_from_model(m: MessageModel) -> Message:
    if m.kind == "psample":
        return PSample(_decode_scalar(m.value))
    if m.kind == "csample":
        return CSample(_decode_scalar(m.value))
    if m.kind == "pbranch":
        return PBranch(bool(m.value))
    if m.kind == "cbranch":
        return CBranch(bool(m.value))
    return FOLD


def message_to_dict(msg: Message) -> dict:
    if isinstance(msg, PSample):
        return {"kind": "psample", "value": _encode_scalar(msg.value)}
    if isinstance(msg, CSample):
        return {"kind": "csample", "value": _encode_scalar(msg.value)}
    if isinstance(msg, PBranch):
        return {"kind": "pbranch", "value": msg.choice}
    if isinstance(msg, CBranch):
        return {"kind": "cbranch", "value": msg.choice}
    return {"kind": "fold"}


def trace_to_json(trace: GuidanceTrace) -> list[dict]:
    return [message_to_dict(m) for m in trace]


def trace_from_json(data: Union[str, bytes, Sequence[dict]]) -> GuidanceTrace:
    """Decode a trace from JSON text or an already-parsed list of objects."""
    try:
        if isinstance(data, (str, bytes)):
            models = _messages_adapter.validate_json(data)
        else:
            models = _messages_adapter.validate_python(list(data))
    except ValidationError as exc:
        first = exc.errors()[0]
        loc = ".".join(str(p) for p in first.get("loc", ()))
        raise TraceFormatError(f"invalid trace at {loc or '<root>'}: {first['msg']}") from None
    return GuidanceTrace(tuple(message_from_model(m) for m in models))
