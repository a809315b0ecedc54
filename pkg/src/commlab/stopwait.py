"""Discrete-time stop-and-wait network simulation.

One sender, one receiver, unreliable links in both directions: packets and
ACKs are independently lost with probability p, survivors are delayed by a
whole number of steps drawn uniformly from [dmin, dmax]. The sender logic
is supplied from outside, either as a Python callable or step by step from
a script through the sw_* builtins; everything it does lands in a trace
that can be replayed and judged afterwards.

Per-step order: ACK arrivals reach the sender (advancing the current
sequence number and disarming the timer), then data arrivals reach the
receiver (in-order delivery, duplicates re-ACKed), then the timer state is
settled, then the sender acts. Anything posted during a step is seen at
the earliest one step later, so an arrival never reacts to same-step
events even when dmin = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .baselib import arg_int, arg_number, arity
from .errors import LabRuntimeError
from .interpreter import BuiltinRegistry, Interpreter
from .values import Cell, Value, Vec, truthy

RULE_NO_NEXT = ("An ACK for the current was received, "
                "but the sender did not send the next packet")
RULE_NO_RESEND = ("The timeout expired, "
                  "but the sender did not resend the current packet")
RULE_EXTRA_SEND = ("The sender sent a packet, "
                   "but no packet should have been sent")


@dataclass(frozen=True)
class NetConfig:
    p: float
    dmin: int
    dmax: int
    timeout: int
    horizon: int

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"loss probability must be in [0, 1], got {self.p}")
        if not 0 <= self.dmin <= self.dmax:
            raise ValueError(
                f"delay bounds must satisfy 0 <= dmin <= dmax, "
                f"got [{self.dmin}, {self.dmax}]")
        if not self.dmax < self.timeout:
            raise ValueError(
                f"timeout {self.timeout} must exceed the maximum delay {self.dmax}")
        if not self.timeout <= self.horizon:
            raise ValueError(
                f"horizon {self.horizon} must be at least the timeout {self.timeout}")


@dataclass
class ProtocolTrace:
    sent: list[tuple[int, int]] = field(default_factory=list)
    acks: list[tuple[int, int]] = field(default_factory=list)
    delivered: list[int] = field(default_factory=list)
    n: int = 0


class StopWaitNet:
    """Simulation state; step() then send() once per time step."""

    def __init__(self, n: int, p: float, dmin: int, dmax: int, timeout: int,
                 rng: np.random.Generator):
        if n < 1:
            raise ValueError(f"packet count must be >= 1, got {n}")
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"loss probability must be in [0, 1], got {p}")
        if not 0 <= dmin <= dmax:
            raise ValueError(
                f"delay bounds must satisfy 0 <= dmin <= dmax, got [{dmin}, {dmax}]")
        if not dmax < timeout:
            raise ValueError(
                f"timeout {timeout} must exceed the maximum delay {dmax}")
        self.n = n
        self.p = p
        self.dmin = dmin
        self.dmax = dmax
        self.timeout = timeout
        self.rng = rng
        self.t = 0
        self.cur = 1                 # lowest unacknowledged sequence number
        self.last_send: int | None = None
        self.expected = 1            # receiver's next wanted sequence number
        self.data_inflight: list[tuple[int, int]] = []   # (arrival step, seq)
        self.ack_inflight: list[tuple[int, int]] = []
        self.sent: list[tuple[int, int]] = []
        self.acks: list[tuple[int, int]] = []
        self.delivered: list[int] = []
        self.ack_arrived = False
        self.timer_expired = False
        self.send_decided = False

    def _post(self, inflight: list[tuple[int, int]], seq: int) -> None:
        # one loss draw, then one delay draw; fixed order keeps runs
        # reproducible from the seed
        if self.rng.random() < self.p:
            return
        delay = int(self.rng.integers(self.dmin, self.dmax + 1))
        inflight.append((self.t + delay, seq))

    def _due(self, inflight: list[tuple[int, int]]) -> list[tuple[int, int]]:
        due = [x for x in inflight if x[0] <= self.t]
        inflight[:] = [x for x in inflight if x[0] > self.t]
        due.sort(key=lambda x: x[0])
        return due

    def step(self) -> None:
        self.t += 1
        self.send_decided = False
        self.ack_arrived = False
        for _, seq in self._due(self.ack_inflight):
            self.acks.append((self.t, seq))
            if seq == self.cur:
                self.cur += 1
                self.last_send = None
                self.ack_arrived = True
        for _, seq in self._due(self.data_inflight):
            if seq == self.expected:
                self.delivered.append(seq)
                self.expected += 1
                self._post(self.ack_inflight, seq)
            elif seq < self.expected:
                self._post(self.ack_inflight, seq)   # duplicate: re-ACK only
        self.timer_expired = (self.last_send is not None
                              and self.t == self.last_send + self.timeout)

    def send(self, do_send: bool) -> None:
        self.send_decided = True
        if not do_send or self.cur > self.n:
            return
        self.sent.append((self.t, self.cur))
        self.last_send = self.t
        self._post(self.data_inflight, self.cur)

    def trace(self) -> ProtocolTrace:
        return ProtocolTrace(list(self.sent), list(self.acks),
                             list(self.delivered), self.n)


def stopwait_simulate(n: int, cfg: NetConfig, sender_step, rng: np.random.Generator) -> ProtocolTrace:
    """Drive the network for cfg.horizon steps with a Python sender hook.

    sender_step(cur_seq, ack_arrived, timer_expired) decides, per step,
    whether to send packet cur_seq.
    """
    net = StopWaitNet(n, cfg.p, cfg.dmin, cfg.dmax, cfg.timeout, rng)
    for _ in range(cfg.horizon):
        net.step()
        do_send = sender_step(net.cur, net.ack_arrived, net.timer_expired)
        net.send(bool(do_send))
    return net.trace()


@dataclass
class Violation:
    step: int
    message: str


def trace_violations(trace: ProtocolTrace, timeout: int, horizon: int) -> list[Violation]:
    """Replay a trace against the sender rules; empty list means compliant.

    The sender owes a send exactly when the ACK for the current packet
    arrives (and packets remain) or when its timer expires; any other send
    after the first is unprompted. Before the first send it owes nothing,
    and sending the first packet at any step is acceptable.
    """
    acks_by_step: dict[int, list[int]] = {}
    for t, seq in trace.acks:
        acks_by_step.setdefault(t, []).append(seq)
    send_steps = {t for t, _ in trace.sent}
    out: list[Violation] = []
    cur = 1
    last_send: int | None = None
    seen_send = False
    for t in range(1, horizon + 1):
        ack_arrived = False
        for seq in acks_by_step.get(t, []):
            if seq == cur:
                cur += 1
                last_send = None
                ack_arrived = True
        timer_expired = last_send is not None and t == last_send + timeout
        sent_now = t in send_steps
        if ack_arrived and cur <= trace.n and not sent_now:
            out.append(Violation(t, RULE_NO_NEXT))
        if timer_expired and not sent_now:
            out.append(Violation(t, RULE_NO_RESEND))
        if sent_now and seen_send and not (ack_arrived or timer_expired):
            out.append(Violation(t, RULE_EXTRA_SEND))
        if sent_now:
            seen_send = True
            last_send = t
    return out


def trace_complete(trace: ProtocolTrace) -> bool:
    return trace.delivered == list(range(1, trace.n + 1))


# --- script surface ---

_STATE_KEY = "stopwait_net"


def _net(interp: Interpreter, line: int, col: int) -> StopWaitNet:
    net = interp.hidden.get(_STATE_KEY)
    if net is None:
        raise LabRuntimeError("call sw_init before other sw_ functions", line, col)
    return net


def _stepped_net(interp: Interpreter, name: str, line: int, col: int) -> StopWaitNet:
    net = _net(interp, line, col)
    if net.t == 0:
        raise LabRuntimeError(f"call sw_step before {name}", line, col)
    return net


def _mirror(interp: Interpreter, net: StopWaitNet) -> None:
    ws = interp.workspace
    ws["__sw_n"] = float(net.n)
    ws["__sw_to"] = float(net.timeout)
    ws["__sw_steps"] = float(net.t)
    ws["__sw_sent"] = Cell([Vec([float(t), float(s)]) for t, s in net.sent])
    ws["__sw_acks"] = Cell([Vec([float(t), float(s)]) for t, s in net.acks])
    ws["__sw_delivered"] = Vec(float(s) for s in net.delivered)


def trace_from_workspace(workspace: dict[str, Value]) -> tuple[ProtocolTrace, int, int] | None:
    """Recover (trace, timeout, steps run) from a finished run's hidden
    variables; None when the run never initialized the simulation."""
    needed = ("__sw_n", "__sw_to", "__sw_steps", "__sw_sent", "__sw_acks",
              "__sw_delivered")
    if any(k not in workspace for k in needed):
        return None
    sent = [(int(v.items[0]), int(v.items[1])) for v in workspace["__sw_sent"].items]
    acks = [(int(v.items[0]), int(v.items[1])) for v in workspace["__sw_acks"].items]
    delivered = [int(s) for s in workspace["__sw_delivered"].items]
    trace = ProtocolTrace(sent, acks, delivered, int(workspace["__sw_n"]))
    return trace, int(workspace["__sw_to"]), int(workspace["__sw_steps"])


def _sw_init(interp: Interpreter, args: list[Value], line: int, col: int):
    arity("sw_init", args, 5, 5, line, col)
    n = arg_int("sw_init", args, 0, line, col, minimum=1)
    p = arg_number("sw_init", args, 1, line, col)
    dmin = arg_int("sw_init", args, 2, line, col)
    dmax = arg_int("sw_init", args, 3, line, col)
    timeout = arg_int("sw_init", args, 4, line, col)
    try:
        net = StopWaitNet(n, p, dmin, dmax, timeout, interp.rng)
    except ValueError as e:
        raise LabRuntimeError(str(e), line, col) from None
    interp.hidden[_STATE_KEY] = net
    _mirror(interp, net)
    return None


def _sw_step(interp: Interpreter, args: list[Value], line: int, col: int):
    arity("sw_step", args, 0, 0, line, col)
    net = _net(interp, line, col)
    if net.t > 0 and not net.send_decided:
        raise LabRuntimeError("call sw_send before the next sw_step", line, col)
    net.step()
    _mirror(interp, net)
    return None


def _sw_send(interp: Interpreter, args: list[Value], line: int, col: int):
    arity("sw_send", args, 1, 1, line, col)
    net = _stepped_net(interp, "sw_send", line, col)
    if net.send_decided:
        raise LabRuntimeError("sw_send may be called once per step", line, col)
    net.send(truthy(args[0], line, col))
    _mirror(interp, net)
    return None


def _sw_reader(name: str, read):
    def reader(interp: Interpreter, args: list[Value], line: int, col: int):
        arity(name, args, 0, 0, line, col)
        return read(_stepped_net(interp, name, line, col))
    return reader


def register(registry: BuiltinRegistry) -> BuiltinRegistry:
    registry.register("sw_init", _sw_init)
    registry.register("sw_step", _sw_step)
    registry.register("sw_send", _sw_send)
    registry.register("sw_cur", _sw_reader("sw_cur", lambda net: float(net.cur)))
    registry.register("sw_ack_arrived",
                      _sw_reader("sw_ack_arrived", lambda net: net.ack_arrived))
    registry.register("sw_timer_expired",
                      _sw_reader("sw_timer_expired", lambda net: net.timer_expired))
    registry.register("sw_delivered",
                      _sw_reader("sw_delivered",
                                 lambda net: Vec(float(s) for s in net.delivered)))
    return registry
