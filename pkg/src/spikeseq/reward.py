"""Layer 1: reward-modulated spike selection.

Every input channel owns a reward profile, a weight per window-relative
timestep that is added to the channel's layer-1 neuron as a time-varying
drive. Training grows the profile with a triangular potentiation kernel
around each expected spike time and depresses it everywhere else; each
epoch the profile is rescaled so that max |w| <= 1. The converged profile
is thresholded into two levels: ``w_exc`` where it reaches
``threshold_frac`` and ``w_inh`` elsewhere.

A layer-1 neuron fires only when an input spike and excitatory reward
coincide, so input spikes outside the learned regions are dropped.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError
from .neuron import LIFPopulation, NeuronParams
from .spikes import SpikeTrain


@dataclass(frozen=True)
class RewardTrainConfig:
    epochs: int = 30
    learn_rate: float = 0.1
    kernel_width: int = 4
    threshold_frac: float = 0.1
    w_exc: float = 0.5
    w_inh: float = -1.0
    input_weight: float = 0.7

    def __post_init__(self):
        if self.epochs < 1 or self.kernel_width < 1:
            raise ConfigurationError("epochs and kernel_width must be >= 1")
        if self.learn_rate <= 0:
            raise ConfigurationError("learn_rate must be positive")
        if not 0 < self.threshold_frac < 1:
            raise ConfigurationError("threshold_frac must lie in (0, 1)")
        if not self.w_exc > 0 > self.w_inh:
            raise ConfigurationError("need w_exc > 0 > w_inh")


@dataclass
class RewardProfile:
    channel: int
    weights: np.ndarray

    @property
    def window_len(self) -> int:
        return int(self.weights.size)

    def excitatory_mask(self) -> np.ndarray:
        return self.weights > 0

    def drive_at(self, rel: np.ndarray, outside: float) -> np.ndarray:
        """Profile value at window-relative steps, ``outside`` beyond its range."""
        rel = np.asarray(rel)
        out = np.full(rel.shape, outside, dtype=float)
        ok = (rel >= 0) & (rel < self.window_len)
        out[ok] = self.weights[rel[ok]]
        return out

    def to_text(self) -> str:
        body = "\n".join(repr(float(w)) for w in self.weights)
        return f"# channel={self.channel} window={self.window_len}\n{body}\n"


def reward_kernel(target_times: np.ndarray, window_len: int, kernel_width: int) -> np.ndarray:
    """Per-step update direction: triangular bump around targets, -1 elsewhere."""
    k = np.full(window_len, -1.0)
    steps = np.arange(window_len)
    for t0 in np.asarray(target_times).tolist():
        dist = np.abs(steps - t0)
        bump = 1.0 - dist / (kernel_width + 1.0)
        inside = dist <= kernel_width
        k[inside] = np.maximum(np.where(k[inside] < 0, 0.0, k[inside]), bump[inside])
    return k


def train_reward_profiles(target: SpikeTrain, config: RewardTrainConfig,
                          window_len: int | None = None,
                          history: Callable[[int, list[np.ndarray]], None] | None = None
                          ) -> list[RewardProfile]:
    """Train one profile per channel of ``target`` (window-relative times).

    ``history`` is called after every epoch with the epoch index and the
    continuous profiles, before thresholding.
    """
    if len(target) == 0:
        raise DomainError("cannot train reward profiles on an empty target train")
    window_len = target.duration if window_len is None else int(window_len)
    kernels = [reward_kernel(target.channel_times(c), window_len, config.kernel_width)
               for c in range(target.num_channels)]
    weights = [np.zeros(window_len) for _ in kernels]
    for epoch in range(config.epochs):
        delta = 0.0
        for c, k in enumerate(kernels):
            w = weights[c] + config.learn_rate * k
            w /= max(1.0, float(np.max(np.abs(w))))
            delta = max(delta, float(np.max(np.abs(w - weights[c]))))
            weights[c] = w
        if history is not None:
            history(epoch, [w.copy() for w in weights])
        if delta < 1e-6:
            break
    return [RewardProfile(c, binarize(w, config)) for c, w in enumerate(weights)]


def binarize(weights: np.ndarray, config: RewardTrainConfig) -> np.ndarray:
    scale = max(float(np.max(np.abs(weights))), 1e-300)
    normalized = weights / scale
    return np.where(normalized >= config.threshold_frac, config.w_exc, config.w_inh)


def excitatory_regions(profile: RewardProfile) -> list[tuple[int, int]]:
    """Inclusive (start, stop) runs of excitatory timesteps."""
    mask = profile.excitatory_mask().astype(np.int8)
    edges = np.diff(np.concatenate([[0], mask, [0]]))
    starts = np.flatnonzero(edges == 1)
    stops = np.flatnonzero(edges == -1) - 1
    return list(zip(starts.tolist(), stops.tolist()))


def select_relative(rel_input: SpikeTrain, profiles: Sequence[RewardProfile],
                    neuron_params: NeuronParams, config: RewardTrainConfig,
                    steps: int | None = None, trace: dict | None = None) -> SpikeTrain:
    """Run layer 1 on an input already expressed relative to the window origin.

    The reward drive for relative step ``r`` reaches the neuron together
    with the input spikes of step ``r``, one step later.
    """
    if len(profiles) != rel_input.num_channels:
        raise ConfigurationError(
            f"{len(profiles)} reward profiles for {rel_input.num_channels} input channels")
    n = rel_input.num_channels
    steps = rel_input.duration + 1 if steps is None else int(steps)
    pop = LIFPopulation(neuron_params, n)
    raster = rel_input.dense()
    drive = np.stack([p.drive_at(np.arange(steps), config.w_inh) for p in profiles], axis=1)
    out_t, out_c = [], []
    if trace is not None:
        trace["v_mem"] = np.zeros((steps, n))
        trace["i_syn"] = np.zeros((steps, n))
        trace["spikes"] = np.zeros((steps, n), bool)
    for t in range(steps):
        if t == 0:
            current = np.zeros(n)
        else:
            spikes_in = raster[t - 1] if t - 1 < rel_input.duration else np.zeros(n, bool)
            current = config.input_weight * spikes_in + drive[t - 1]
        fired = pop.step(current, timestep=t)
        idx = np.flatnonzero(fired)
        out_t.extend([t] * idx.size)
        out_c.extend(idx.tolist())
        if trace is not None:
            trace["v_mem"][t] = pop.v_last
            trace["i_syn"][t] = pop.i_syn
            trace["spikes"][t] = fired
    return SpikeTrain(np.array(out_t, np.int64), np.array(out_c, np.int64), n, steps)


def apply_spike_selection(input: SpikeTrain, profiles: Sequence[RewardProfile], window_origin: int,
                          neuron_params: NeuronParams, config: RewardTrainConfig | None = None,
                          steps: int | None = None) -> SpikeTrain:
    """Filter ``input`` through layer 1 for a window opened at ``window_origin``.

    Output spikes are in absolute time; the train has ``input.duration + 1``
    steps so that a spike in the last input step can still pass.
    """
    config = config or RewardTrainConfig()
    duration = input.duration + 1
    if window_origin >= input.duration:
        return SpikeTrain.empty(input.num_channels, duration)
    rel = input.window(window_origin, input.duration)
    steps = rel.duration + 1 if steps is None else steps
    out = select_relative(rel, profiles, neuron_params, config, steps=steps)
    return out.shift(window_origin, duration=duration)


def save_profiles(profiles: Sequence[RewardProfile], path) -> None:
    Path(path).write_text("".join(p.to_text() for p in profiles), encoding="utf-8")


def load_profiles(path) -> list[RewardProfile]:
    profiles = []
    channel, expected, values = None, 0, []

    def flush():
        if channel is None:
            return
        if len(values) != expected:
            raise ConfigurationError(f"profile {channel}: expected {expected} weights, got {len(values)}")
        profiles.append(RewardProfile(channel, np.array(values, dtype=float)))

    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            flush()
            fields = dict(part.split("=") for part in line[1:].split())
            channel, expected, values = int(fields["channel"]), int(fields["window"]), []
        else:
            values.append(float(line))
    flush()
    return profiles
