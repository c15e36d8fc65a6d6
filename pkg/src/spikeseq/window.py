"""Start / stop / inverse-start neurons implementing the moving search window.

All three are LIF neurons with ``du = 1``; the weights follow in closed
form from ``resting_period`` (R) and ``wait_time`` (W):

start (S)   dv=0, bias=1, threshold=R. Fires every R steps at rest.
            Input spikes reach it with weight -(W + R + 1), which keeps
            v_mem negative for longer than W steps. A stop spike arrives one
            step later with weight (W + 2)(W + R + 1) + R, enough to cancel
            one inhibition per step of the window and force a spike, after
            which the reset puts S back at rest.
inverse (I) dv=1, bias=1, threshold=1, weight -1 from S in the same step,
            so it fires exactly when S is silent.
stop (P)    dv=0, bias=1, threshold=W+1, weight -R from S in the same step
            and a delayed self weight R-1. Its membrane equals the number
            of steps since S last fired, so it fires W+1 steps after the
            last resting spike of S. With R = 1 that is exactly W steps
            after the opening input.

The window is open while S's membrane is negative. Feed-forward edges
(input to S, S to I and P) act within a step; feedback edges (P to S,
P to itself) act one step later.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .neuron import LIFPopulation, NeuronParams

START, STOP, INVERSE = 0, 1, 2


@dataclass(frozen=True)
class WindowConfig:
    resting_period: int = 1
    wait_time: int = 200
    window_len: int = 100

    def __post_init__(self):
        if self.resting_period < 1 or self.wait_time < 1 or self.window_len < 1:
            raise ConfigurationError("window parameters must be positive integers")
        if self.wait_time < self.window_len:
            raise ConfigurationError("wait_time must be >= window_len")
        if self.wait_time < self.resting_period:
            raise ConfigurationError("wait_time must be >= resting_period")

    @property
    def open_weight(self) -> float:
        return float(self.wait_time + self.resting_period + 1)

    @property
    def reset_weight(self) -> float:
        return float((self.wait_time + 2) * self.open_weight + self.resting_period)

    def neuron_params(self) -> list[NeuronParams]:
        r, w = self.resting_period, self.wait_time
        return [
            NeuronParams(du=1.0, dv=0.0, v_threshold=float(r), bias=1.0),
            NeuronParams(du=1.0, dv=0.0, v_threshold=float(w + 1), bias=1.0),
            NeuronParams(du=1.0, dv=1.0, v_threshold=1.0, bias=1.0),
        ]


@dataclass
class WindowState:
    active: bool = False
    origin: int | None = None
    # S, P, I membranes; S and P start one step below rest so the first
    # resting spike of S lands at t = resting_period.
    v_mem: np.ndarray = field(default_factory=lambda: np.array([-1.0, -1.0, 0.0]))
    i_syn: np.ndarray = field(default_factory=lambda: np.zeros(3))
    stop_pending: bool = False
    stop_firing: bool = False
    reset_pending: bool = False

    def copy(self) -> "WindowState":
        return WindowState(self.active, self.origin, self.v_mem.copy(), self.i_syn.copy(),
                           self.stop_pending, self.stop_firing, self.reset_pending)


def _population(config: WindowConfig, state: WindowState) -> LIFPopulation:
    pop = LIFPopulation(config.neuron_params())
    pop.v_mem = state.v_mem.copy()
    pop.i_syn = state.i_syn.copy()
    return pop


def step_window(state: WindowState, config: WindowConfig, any_input_spike: bool,
                now: int) -> tuple[WindowState, bool, bool]:
    """Advance the three auxiliary neurons by one step.

    Returns the new state and whether the start and inverse-start neurons
    fired. ``state.stop_firing`` reports the stop neuron.
    """
    r = config.resting_period
    new = state.copy()
    pop = _population(config, state)

    # S integrates this step's input and last step's stop spike.
    s_in = (-config.open_weight if any_input_spike else 0.0) + \
           (config.reset_weight if state.stop_pending else 0.0)
    s_spike = _step_one(pop, START, s_in, now)
    # I and P see S's spike in the same step; P also sees its own last spike.
    i_spike = _step_one(pop, INVERSE, -1.0 if s_spike else 0.0, now)
    p_in = (-float(r) if s_spike else 0.0) + (float(r - 1) if state.stop_pending else 0.0)
    p_spike = _step_one(pop, STOP, p_in, now)

    new.v_mem, new.i_syn = pop.v_mem, pop.i_syn
    new.stop_pending = bool(p_spike)
    new.stop_firing = bool(p_spike)
    was_active = state.active
    new.active = bool(pop.v_mem[START] < 0.0)
    if new.active and not was_active:
        new.origin = now
    if s_spike and was_active:
        new.origin = None
    return new, bool(s_spike), bool(i_spike)


def _step_one(pop: LIFPopulation, k: int, weighted_input: float, now: int) -> bool:
    i = pop.i_syn[k] * (1.0 - pop.du[k]) + weighted_input
    v = pop.v_mem[k] * (1.0 - pop.dv[k]) + i + pop.bias[k]
    pop.i_syn[k] = i
    if v >= pop.v_threshold[k]:
        pop.v_mem[k] = 0.0
        return True
    pop.v_mem[k] = v
    return False


@dataclass(frozen=True)
class WindowSpan:
    origin: int
    close: int  # exclusive: the step at which the stop neuron fired

    @property
    def length(self) -> int:
        return self.close - self.origin


@dataclass
class WindowRun:
    spans: list[WindowSpan]
    events: list[tuple[str, int]]
    start: np.ndarray
    stop: np.ndarray
    inverse: np.ndarray
    v_mem: np.ndarray  # (steps, 3) for S, P, I


def run_window(any_input: np.ndarray, config: WindowConfig, steps: int | None = None) -> WindowRun:
    """Drive the circuit with a boolean per-step input indicator.

    Windows still open when the simulation ends are closed at ``steps``.
    """
    any_input = np.asarray(any_input, dtype=bool)
    steps = any_input.size if steps is None else int(steps)
    state = WindowState()
    spans, events = [], []
    start = np.zeros(steps, bool)
    stop = np.zeros(steps, bool)
    inverse = np.zeros(steps, bool)
    v_trace = np.zeros((steps, 3))
    for t in range(steps):
        inp = bool(any_input[t]) if t < any_input.size else False
        prev = state
        state, s, i = step_window(state, config, inp, t)
        start[t], stop[t], inverse[t] = s, state.stop_firing, i
        v_trace[t] = state.v_mem
        if state.active and not prev.active:
            events.append(("open", t))
        if state.stop_firing and prev.active:
            events.append(("close", t))
            spans.append(WindowSpan(prev.origin if prev.origin is not None else t, t))
        if s and prev.active:
            events.append(("reset", t))
    if state.active and state.origin is not None and (not spans or spans[-1].origin != state.origin):
        spans.append(WindowSpan(state.origin, steps))
    return WindowRun(spans, events, start, stop, inverse, v_trace)


def write_window_events(events, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("event,timestep\n")
        for name, t in events:
            fh.write(f"{name},{t}\n")
