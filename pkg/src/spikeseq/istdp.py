"""Layer 2: spike-contribution neurons trained with inverted STDP.

One neuron per channel. Each filtered spike expected on a channel gets
its own weight slot; at run time a spike uses the slot whose expected
time is nearest. A constant bias (the slow excitatory drive) makes the
membrane rise monotonically, so every neuron eventually fires and the
update rule only has to move that firing time onto ``t_stop``:

    never fired (t_post = 0):  g += lam * (1 - exp((t_post - t_pre) / tau))
    t_post < t_stop:           g -= lam * exp(-(t_post - t_pre) / tau)
    t_post > t_stop:           g += lam * (1 - exp(-(t_post - t_stop) / tau))
    t_post == t_stop:          unchanged

A spike also feeds back onto its own neuron with a strong inhibitory
weight so each neuron fires at most once per window.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import ConfigurationError, TrainingError
from .neuron import LIFPopulation, NeuronParams
from .spikes import SpikeTrain


@dataclass(frozen=True)
class ISTDPParams:
    tau: float = 30.0
    lam: float = 8e-4
    t_stop: int = 150
    max_epochs: int = 50
    slow_drive: float = 1.0 / 300.0
    init_weight: float = 1e-4
    convergence_tol: int = 2
    horizon: int = 450
    self_inhibition: float = 10.0

    def __post_init__(self):
        if self.tau <= 0 or self.lam <= 0:
            raise ConfigurationError("tau and lam must be positive")
        if self.t_stop <= 0 or self.t_stop >= self.horizon:
            raise ConfigurationError("need 0 < t_stop < horizon")
        if self.max_epochs < 1:
            raise ConfigurationError("max_epochs must be >= 1")
        if self.slow_drive <= 0:
            raise ConfigurationError("slow_drive must be positive")


def istdp_update(g_prev: float, t_pre: int, t_post: int, params: ISTDPParams) -> float:
    lam, tau = params.lam, params.tau
    if t_post == 0:
        return g_prev + lam * (1.0 - math.exp((t_post - t_pre) / tau))
    if t_post < params.t_stop:
        return g_prev - lam * math.exp(-(t_post - t_pre) / tau)
    if t_post > params.t_stop:
        return g_prev + lam * (1.0 - math.exp(-(t_post - params.t_stop) / tau))
    return g_prev


@dataclass
class SynapseWeights:
    """Per (channel, slot) weights plus the expected time of each slot."""

    num_channels: int
    centers: list[np.ndarray] = field(default_factory=list)
    weights: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def from_filtered(cls, filtered: SpikeTrain, init_weight: float) -> "SynapseWeights":
        centers = [filtered.channel_times(c).astype(np.int64) for c in range(filtered.num_channels)]
        weights = [np.full(ct.size, float(init_weight)) for ct in centers]
        return cls(filtered.num_channels, centers, weights)

    def copy(self) -> "SynapseWeights":
        return SynapseWeights(self.num_channels, [c.copy() for c in self.centers],
                              [w.copy() for w in self.weights])

    def slot_of(self, channel: int, time: int) -> int | None:
        centers = self.centers[channel]
        if centers.size == 0:
            return None
        return int(np.argmin(np.abs(centers - time)))

    def trained_channels(self) -> list[int]:
        return [c for c in range(self.num_channels) if self.centers[c].size]

    def to_text(self) -> str:
        lines = ["channel,slot,weight"]
        for c in range(self.num_channels):
            for k, w in enumerate(self.weights[c]):
                lines.append(f"{c},{k},{float(w)!r}")
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path, filtered: SpikeTrain) -> "SynapseWeights":
        """Read weights; slot times come from the canonical filtered train."""
        sw = cls.from_filtered(filtered, 0.0)
        for line in Path(path).read_text(encoding="utf-8").splitlines()[1:]:
            if not line.strip():
                continue
            c, k, w = line.split(",")
            sw.weights[int(c)][int(k)] = float(w)
        return sw


def run_layer2(filtered: SpikeTrain, weights: SynapseWeights, params: ISTDPParams,
               neuron_params: NeuronParams, steps: int, trace: dict | None = None) -> SpikeTrain:
    """Simulate layer 2 on window-relative layer-1 output for ``steps`` steps."""
    if filtered.num_channels != weights.num_channels:
        raise ConfigurationError("filtered train and weights disagree on channel count")
    n = weights.num_channels
    pop = LIFPopulation(neuron_params.replace(bias=params.slow_drive), n)
    drive = np.zeros((steps + 1, n))
    for t, c in filtered:
        k = weights.slot_of(c, t)
        if k is not None and t + 1 <= steps:
            drive[t + 1, c] += weights.weights[c][k]
    fired_before = np.zeros(n)
    out_t, out_c = [], []
    if trace is not None:
        trace["v_mem"] = np.zeros((steps, n))
        trace["i_syn"] = np.zeros((steps, n))
        trace["spikes"] = np.zeros((steps, n), bool)
    for t in range(steps):
        fired = pop.step(drive[t] - params.self_inhibition * fired_before, timestep=t)
        fired_before = fired.astype(float)
        idx = np.flatnonzero(fired)
        out_t.extend([t] * idx.size)
        out_c.extend(idx.tolist())
        if trace is not None:
            trace["v_mem"][t] = pop.v_last
            trace["i_syn"][t] = pop.i_syn
            trace["spikes"][t] = fired
    return SpikeTrain(np.array(out_t, np.int64), np.array(out_c, np.int64), n, steps)


def first_spike_times(out: SpikeTrain) -> np.ndarray:
    """First spike per channel, 0 where the neuron never fired."""
    t_post = np.zeros(out.num_channels, dtype=np.int64)
    for c in range(out.num_channels):
        times = out.channel_times(c)
        if times.size:
            t_post[c] = times[0]
    return t_post


def train_layer2(filtered: SpikeTrain, params: ISTDPParams, neuron_params: NeuronParams,
                 init: SynapseWeights | None = None,
                 history: Callable[[int, np.ndarray, SynapseWeights], None] | None = None
                 ) -> SynapseWeights:
    """Train slot weights until every trained channel fires at ``t_stop``.

    ``history`` receives (epoch, t_post per channel, weights) before each
    update. Channels without filtered spikes keep their initial weights.
    """
    weights = init.copy() if init is not None else SynapseWeights.from_filtered(filtered, params.init_weight)
    trained = weights.trained_channels()
    t_post = np.zeros(weights.num_channels, dtype=np.int64)
    for epoch in range(params.max_epochs):
        out = run_layer2(filtered, weights, params, neuron_params, params.horizon)
        t_post = first_spike_times(out)
        if history is not None:
            history(epoch, t_post.copy(), weights.copy())
        if all(t_post[c] == params.t_stop for c in trained):
            break
        for c in trained:
            # t_pre is when the spike reaches the neuron, one step after emission
            t_pre = weights.centers[c] + 1
            weights.weights[c] = np.array([
                istdp_update(g, int(tp), int(t_post[c]), params)
                for g, tp in zip(weights.weights[c], t_pre)])
    else:
        out = run_layer2(filtered, weights, params, neuron_params, params.horizon)
        t_post = first_spike_times(out)
    residuals = {c: (abs(int(t_post[c]) - params.t_stop) if t_post[c] else None) for c in trained}
    bad = {c: r for c, r in residuals.items() if r is None or r > params.convergence_tol}
    if bad:
        raise TrainingError(f"layer 2 did not converge for channels {sorted(bad)}",
                            layer="layer2", residuals=residuals)
    return weights
