"""Discrete-time leaky integrate-and-fire dynamics.

Each step a neuron updates

    i_syn[t] = i_syn[t-1] * (1 - du) + sum_j g_j * s_j
    v_mem[t] = v_mem[t-1] * (1 - dv) + i_syn[t] + bias

and spikes when ``v_mem >= v_threshold``; the membrane then resets to 0
while the synaptic current is left alone. There is no refractory period.

Inside :func:`run_train` a spike emitted at step ``t`` (by the input or
by another neuron) is integrated by its targets at step ``t + 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, NumericOverflowError
from .spikes import SpikeTrain


@dataclass(frozen=True)
class NeuronParams:
    du: float = 1.0
    dv: float = 1.0
    v_threshold: float = 1.0
    bias: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.du <= 1.0 and 0.0 <= self.dv <= 1.0):
            raise ConfigurationError(f"decay factors must lie in [0, 1]: du={self.du}, dv={self.dv}")
        if not self.v_threshold > 0:
            raise ConfigurationError(f"v_threshold must be positive, got {self.v_threshold}")

    def replace(self, **changes) -> "NeuronParams":
        fields = {**self.__dict__, **changes}
        return NeuronParams(**fields)


@dataclass(frozen=True)
class NeuronState:
    i_syn: float = 0.0
    v_mem: float = 0.0


@dataclass(frozen=True)
class Synapse:
    """Connection into neuron ``target``.

    ``source`` is an input channel, or another neuron of the same
    population when ``from_neuron`` is set.
    """

    source: int
    target: int
    weight: float
    from_neuron: bool = False


def step_neuron(state: NeuronState, params: NeuronParams, weighted_input: float,
                neuron=0, timestep=None) -> tuple[NeuronState, bool]:
    i_syn = state.i_syn * (1.0 - params.du) + weighted_input
    v_mem = state.v_mem * (1.0 - params.dv) + i_syn + params.bias
    if not (math.isfinite(i_syn) and math.isfinite(v_mem)):
        raise NumericOverflowError(neuron, timestep)
    if v_mem >= params.v_threshold:
        return NeuronState(i_syn, 0.0), True
    return NeuronState(i_syn, v_mem), False


class LIFPopulation:
    """Vectorised state for ``n`` neurons sharing the update rule above."""

    def __init__(self, params: NeuronParams | Sequence[NeuronParams], n: int | None = None):
        if isinstance(params, NeuronParams):
            if n is None:
                raise ConfigurationError("population size required with a single NeuronParams")
            params = [params] * n
        params = list(params)
        self.n = len(params)
        self.du = np.array([p.du for p in params], dtype=float)
        self.dv = np.array([p.dv for p in params], dtype=float)
        self.v_threshold = np.array([p.v_threshold for p in params], dtype=float)
        self.bias = np.array([p.bias for p in params], dtype=float)
        self.i_syn = np.zeros(self.n)
        self.v_mem = np.zeros(self.n)
        self.v_last = np.zeros(self.n)  # membrane before the reset, for traces

    def reset(self):
        self.i_syn[:] = 0.0
        self.v_mem[:] = 0.0

    def step(self, weighted_input, drive=None, timestep=None) -> np.ndarray:
        """Advance one step. ``drive`` is an extra per-neuron bias for this step only."""
        self.i_syn = self.i_syn * (1.0 - self.du) + weighted_input
        v = self.v_mem * (1.0 - self.dv) + self.i_syn + self.bias
        if drive is not None:
            v = v + drive
        bad = ~np.isfinite(v) | ~np.isfinite(self.i_syn)
        if bad.any():
            raise NumericOverflowError(int(np.flatnonzero(bad)[0]), timestep)
        spiked = v >= self.v_threshold
        self.v_last = v
        self.v_mem = np.where(spiked, 0.0, v)
        return spiked


def run_train(train: SpikeTrain, synapses: Sequence[Synapse],
              params: NeuronParams | Sequence[NeuronParams], num_neurons: int | None = None,
              steps: int | None = None) -> SpikeTrain:
    """Simulate a population driven by ``train`` and return its output spikes.

    ``steps`` defaults to ``train.duration + 1`` so that spikes in the final
    input step still get integrated.
    """
    if isinstance(params, NeuronParams):
        if num_neurons is None:
            num_neurons = 1 + max((s.target for s in synapses), default=0)
        population = LIFPopulation(params, num_neurons)
    else:
        population = LIFPopulation(params)
        if num_neurons is not None and num_neurons != population.n:
            raise ConfigurationError("num_neurons disagrees with the params list")
    n = population.n
    w_in = np.zeros((n, train.num_channels))
    w_rec = np.zeros((n, n))
    for s in synapses:
        if not 0 <= s.target < n:
            raise ConfigurationError(f"synapse target {s.target} outside population of {n}")
        if not math.isfinite(s.weight):
            raise ConfigurationError(f"synapse weight must be finite, got {s.weight}")
        if s.from_neuron:
            if not 0 <= s.source < n:
                raise ConfigurationError(f"synapse source neuron {s.source} does not exist")
            w_rec[s.target, s.source] += s.weight
        else:
            if not 0 <= s.source < train.num_channels:
                raise ConfigurationError(
                    f"synapse source channel {s.source} outside input of {train.num_channels} channels")
            w_in[s.target, s.source] += s.weight

    steps = train.duration + 1 if steps is None else int(steps)
    raster = train.dense()
    prev_in = np.zeros(train.num_channels)
    prev_out = np.zeros(n)
    out_t, out_c = [], []
    for t in range(steps):
        spiked = population.step(w_in @ prev_in + w_rec @ prev_out, timestep=t)
        idx = np.flatnonzero(spiked)
        out_t.extend([t] * idx.size)
        out_c.extend(idx.tolist())
        prev_in = raster[t].astype(float) if t < train.duration else np.zeros(train.num_channels)
        prev_out = spiked.astype(float)
    return SpikeTrain(np.array(out_t, dtype=np.int64), np.array(out_c, dtype=np.int64), n, steps)
