"""Scheduler – generative joint execution of a guide/model pair.

The guide and the model each run on their own :class:`Process`. Requests on
the model's observation channel are answered from the observation trace;
requests on the shared latent channel are answered only once both sides are
blocked on it, at which point the sending side draws and both sides score.
"""
from __future__ import annotations

from typing import Optional, Sequence, Union

import numpy as np

from gpp.exceptions import DeadlockError, EvalError, ObservationExhausted, ObservationMismatch
from gpp.schemas.records import IMPOSSIBLE, ExecutionRecord, LogWeight
from gpp.schemas.syntax import ProcDecl, Program
from gpp.schemas.trace import CBranch, CSample, FOLD, Fold, GuidanceTrace, Message, PBranch, PSample
from gpp.schemas.values import Value
from gpp.services.distributions import as_slot_value, log_density, sample, support_contains
from gpp.services.interpreter import BranchRequest, Done, Event, FoldRequest, Process, SampleRequest


def _describe(event: Event) -> str:
    if isinstance(event, Done):
        return "return"
    if isinstance(event, SampleRequest):
        return f"sample[{event.direction}] on {event.role} channel"
    if isinstance(event, BranchRequest):
        return f"branch[{event.direction}] on {event.role} channel"
    return f"call {event.proc}"


class _Observations:
    """Cursor over the observation trace for the model's provided channel."""

    def __init__(self, so: GuidanceTrace) -> None:
        self.msgs = so.messages
        self.pos = 0

    def take(self, expected: type) -> Message:
        if self.pos >= len(self.msgs):
            raise ObservationExhausted(f"observation trace ended after {self.pos} message(s); "
                                       f"{expected.__name__} expected")
        msg = self.msgs[self.pos]
        if not isinstance(msg, expected):
            raise ObservationMismatch(f"observation {self.pos} is {type(msg).__name__}, "
                                      f"{expected.__name__} expected")
        self.pos += 1
        return msg

    def finish(self) -> None:
        if self.pos != len(self.msgs):
            raise ObservationMismatch(f"{len(self.msgs) - self.pos} observation message(s) left unread")


class _Joint:
    def __init__(self, guide: Process, model: Process, so: GuidanceTrace, rng: np.random.Generator) -> None:
        self.guide = guide
        self.model = model
        self.obs = _Observations(so)
        self.rng = rng
        self.latent: list[Message] = []
        self.wg: LogWeight = 0.0
        self.wm: LogWeight = 0.0

    # ── observation side ──────────────────────────────────────────────────
    def _observe(self, req: Union[SampleRequest, BranchRequest, FoldRequest]) -> Union[Value, bool, None]:
        if isinstance(req, SampleRequest):
            msg = self.obs.take(PSample if req.direction == "send" else CSample)
            v = as_slot_value(req.dist, msg.value)
            if not support_contains(req.dist, v):
                raise ObservationMismatch(f"observation {self.obs.pos - 1} ({msg.value!r}) is outside "
                                          f"the support of {req.dist.family}", req.span)
            self.wm += log_density(req.dist, v)
            return v
        if isinstance(req, BranchRequest):
            msg = self.obs.take(PBranch if req.direction == "send" else CBranch)
            if req.direction == "send" and msg.choice != req.pred:
                self.wm = IMPOSSIBLE
            return msg.choice
        self.obs.take(Fold)
        return None

    def _drain_model(self, event: Event) -> Event:
        while True:
            if isinstance(event, (SampleRequest, BranchRequest)) and event.role == "provide":
                event = self.model.send(self._observe(event))
            elif isinstance(event, FoldRequest) and event.roles == ("provide",):
                event = self.model.send(self._observe(event))
            else:
                return event

    # ── latent side ───────────────────────────────────────────────────────
    def _exchange(self, g: Event, m: Event) -> tuple[Event, Event]:
        if isinstance(g, SampleRequest) and isinstance(m, SampleRequest) and g.direction != m.direction:
            if g.direction == "send":
                v = sample(g.dist, self.rng)
                self.latent.append(PSample(v))
            else:
                v = sample(m.dist, self.rng)
                self.latent.append(CSample(v))
            self.wg += log_density(g.dist, v)
            self.wm += log_density(m.dist, v)
            return self.guide.send(v), self.model.send(v)
        if isinstance(g, BranchRequest) and isinstance(m, BranchRequest) and g.direction != m.direction:
            if m.direction == "send":
                choice = bool(m.pred)
                self.latent.append(CBranch(choice))
            else:
                choice = bool(g.pred)
                self.latent.append(PBranch(choice))
            return self.guide.send(choice), self.model.send(choice)
        if isinstance(g, FoldRequest) and isinstance(m, FoldRequest) and "consume" in m.roles:
            self.latent.append(FOLD)
            if "provide" in m.roles:
                self.obs.take(Fold)
            return self.guide.send(None), self.model.send(None)
        raise DeadlockError(f"guide blocked on {_describe(g)} while model blocked on {_describe(m)}")

    def run(self) -> tuple[Value, Value]:
        g = self.guide.advance()
        m = self._drain_model(self.model.advance())
        while True:
            if isinstance(g, (SampleRequest, BranchRequest)) and g.role == "consume":
                raise DeadlockError("guide uses a consumed channel that has no provider")
            if isinstance(g, FoldRequest) and "consume" in g.roles:
                raise DeadlockError(f"guide call to {g.proc} consumes a channel that has no provider")
            if isinstance(g, Done) and isinstance(m, Done):
                self.obs.finish()
                return g.value, m.value
            if isinstance(g, Done) or isinstance(m, Done):
                raise DeadlockError(f"guide blocked on {_describe(g)} while model blocked on {_describe(m)}")
            g, m = self._exchange(g, m)
            m = self._drain_model(m)


def _decl(p: Program, name: str) -> ProcDecl:
    d = p.get_proc(name)
    if d is None:
        raise EvalError(f"unknown procedure {name!r}")
    return d


def joint_execute(
    p: Program,
    guide: str,
    model: str,
    guide_args: Sequence[Value],
    model_args: Sequence[Value],
    so: GuidanceTrace,
    rng: np.random.Generator,
    max_steps: Optional[int] = None,
) -> ExecutionRecord:
    """Run ``guide`` and ``model`` as coroutines sharing the model's consumed channel."""
    joint = _Joint(
        Process(p, _decl(p, guide), guide_args, max_steps=max_steps),
        Process(p, _decl(p, model), model_args, max_steps=max_steps),
        so,
        rng,
    )
    guide_result, model_result = joint.run()
    return ExecutionRecord(
        latent=GuidanceTrace(tuple(joint.latent)),
        obs=so,
        guide_log_weight=joint.wg,
        model_log_weight=joint.wm,
        guide_result=guide_result,
        model_result=model_result,
    )
