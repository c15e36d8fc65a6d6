"""Layer 3: weighted coincidence detector.

Each channel's synapse onto the detector carries

    G_ch = N_avg_ch * alpha * delta,  N_avg_ch = total spikes / epochs

and the detector threshold is ``alpha * sum(G)``, so a verdict needs
channels holding at least a fraction ``alpha`` of the weighted spike mass.

With ``gate_center`` set, only layer-2 spikes within
``coincidence_window`` steps of it reach the detector. Without a gate the
detector relies on its own du/dv decay alone.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError
from .neuron import LIFPopulation, NeuronParams
from .spikes import SpikeTrain

# keeps an exactly-at-threshold sum from failing on rounding
_THRESHOLD_SLACK = 1.0 - 1e-9


@dataclass(frozen=True)
class Layer3Params:
    alpha: float = 0.95
    delta: float = 1.0
    coincidence_window: int = 5
    v_threshold: float | None = None  # None: alpha * sum of channel weights
    gate_center: int | None = 150

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ConfigurationError("alpha must lie in (0, 1]")
        if self.delta <= 0:
            raise ConfigurationError("delta must be positive")
        if self.coincidence_window < 0:
            raise ConfigurationError("coincidence_window must be >= 0")
        if self.v_threshold is not None and self.v_threshold <= 0:
            raise ConfigurationError("v_threshold must be positive")


@dataclass(frozen=True)
class ChannelStats:
    total_spikes: np.ndarray
    epochs: int

    @property
    def spike_avg(self) -> np.ndarray:
        return np.array([channel_spike_avg(int(n), self.epochs) for n in self.total_spikes])


@dataclass(frozen=True)
class DetectionVerdict:
    matched: bool
    match_time: int | None = None

    def __post_init__(self):
        if self.matched != (self.match_time is not None):
            raise ValueError("match_time must be present exactly when matched")


def channel_spike_avg(total_spikes: int, epochs: int) -> float:
    if epochs < 1:
        raise DomainError("epochs must be >= 1")
    if total_spikes < 0:
        raise DomainError("total_spikes must be >= 0")
    return total_spikes / epochs


def layer3_weight(spike_avg: float, params: Layer3Params) -> float:
    return spike_avg * params.alpha * params.delta


def accumulate_stats(trains: Iterable[SpikeTrain], num_channels: int) -> ChannelStats:
    """Per-channel spike totals over a sequence of presentations, one epoch each."""
    totals = np.zeros(num_channels, dtype=np.int64)
    epochs = 0
    for tr in trains:
        totals += tr.counts()
        epochs += 1
    return ChannelStats(totals, max(epochs, 1))


def layer3_weights(stats: ChannelStats, params: Layer3Params) -> np.ndarray:
    return np.array([layer3_weight(a, params) for a in stats.spike_avg])


def detector_threshold(weights: Sequence[float], params: Layer3Params) -> float:
    if params.v_threshold is not None:
        return params.v_threshold
    total = float(np.sum(weights))
    if total <= 0:
        raise ConfigurationError("layer-3 weights sum to zero; nothing to detect")
    return params.alpha * total * _THRESHOLD_SLACK


def detect(layer2_out: SpikeTrain, weights: Sequence[float], params: Layer3Params,
           neuron_params: NeuronParams, trace: dict | None = None) -> DetectionVerdict:
    """Run the detector on window-relative layer-2 output.

    A layer-2 spike at step t reaches the detector at t + 1, so a volley
    at t_stop yields a match at t_stop + 1.
    """
    weights = np.asarray(weights, dtype=float)
    if weights.size != layer2_out.num_channels:
        raise ConfigurationError("one layer-3 weight per layer-2 channel required")
    thr = detector_threshold(weights, params)
    pop = LIFPopulation(neuron_params.replace(v_threshold=thr), 1)
    steps = layer2_out.duration + 1
    current = np.zeros(steps)
    for t, c in layer2_out:
        if params.gate_center is not None and abs(t - params.gate_center) > params.coincidence_window:
            continue
        current[t + 1] += weights[c]
    if trace is not None:
        trace["v_mem"] = np.zeros((steps, 1))
        trace["i_syn"] = np.zeros((steps, 1))
        trace["spikes"] = np.zeros((steps, 1), bool)
    first = None
    for t in range(steps):
        fired = pop.step(np.array([current[t]]), timestep=t)
        if trace is not None:
            trace["v_mem"][t] = pop.v_last
            trace["i_syn"][t] = pop.i_syn
            trace["spikes"][t] = fired
        if fired[0] and first is None:
            first = t
            if trace is None:
                break
    return DetectionVerdict(first is not None, first)


def pick_class(verdicts: Sequence[DetectionVerdict]) -> int | None:
    """Earliest match wins; ties go to the lowest class index. None if nothing matched."""
    best = None
    for k, v in enumerate(verdicts):
        if v.matched and (best is None or v.match_time < verdicts[best].match_time):
            best = k
    return best


def write_verdicts(rows, path) -> None:
    """``rows`` are (sample_id, class, verdict) triples."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", "class", "matched", "match_time"])
        for sample_id, cls, v in rows:
            w.writerow([sample_id, cls, int(v.matched), "" if v.match_time is None else v.match_time])
