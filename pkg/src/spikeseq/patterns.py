"""Random test patterns and the perturbations used by the criteria suite."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError
from .spikes import SpikeTrain

KINDS = ("jitter", "drop", "swap_channels", "insert_near", "insert_far")


def generate_pattern(num_channels: int, window_len: int, spikes_per_channel=(1, 3),
                     seed: int = 0) -> SpikeTrain:
    """Random pattern with a per-channel spike count drawn from an inclusive range."""
    lo, hi = (spikes_per_channel, spikes_per_channel) if np.isscalar(spikes_per_channel) \
        else tuple(spikes_per_channel)
    if num_channels < 1 or window_len < 1 or lo < 0 or hi < lo:
        raise DomainError("infeasible pattern parameters")
    if hi > window_len:
        raise DomainError(f"cannot place {hi} distinct spikes in {window_len} steps")
    rng = np.random.default_rng(seed)
    times, channels = [], []
    for c in range(num_channels):
        k = int(rng.integers(lo, hi + 1))
        ts = rng.choice(window_len, size=k, replace=False)
        times.extend(ts.tolist())
        channels.extend([c] * k)
    return SpikeTrain.from_arrays(times, channels, num_channels, window_len)


@dataclass(frozen=True)
class PerturbationSpec:
    """``magnitude`` is a timestep bound for jitter and an event count otherwise.

    ``tolerance`` is the jitter tolerance that defines "near" (within
    2x) and "far" (beyond 5x) for the insertion kinds.
    """

    kind: str
    magnitude: int = 1
    tolerance: int = 2

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown perturbation kind {self.kind!r}; expected one of {KINDS}")
        if self.magnitude < 0 or self.tolerance < 0:
            raise ConfigurationError("magnitude and tolerance must be >= 0")


def perturb(train: SpikeTrain, spec: PerturbationSpec, seed: int = 0) -> SpikeTrain:
    rng = np.random.default_rng(seed)
    times, channels = train.times.copy(), train.channels.copy()
    m = spec.magnitude
    if spec.kind == "jitter":
        if m == 0:
            return train
        return _jitter(train, m, rng)
    if spec.kind == "drop":
        if m > len(train):
            raise DomainError(f"cannot drop {m} of {len(train)} events")
        keep = np.ones(len(train), bool)
        keep[rng.choice(len(train), size=m, replace=False)] = False
        return SpikeTrain(times[keep], channels[keep], train.num_channels, train.duration)
    if spec.kind == "swap_channels":
        if train.num_channels < 2:
            raise DomainError("swap needs at least two channels")
        a, b = rng.choice(train.num_channels, size=2, replace=False)
        swapped = channels.copy()
        swapped[channels == a] = b
        swapped[channels == b] = a
        return SpikeTrain.from_arrays(times, swapped, train.num_channels, train.duration)
    if len(train) == 0 and m > 0:
        raise DomainError("insertion needs at least one existing event")
    if spec.kind == "insert_near":
        return _insert_near(train, m, spec.tolerance, rng)
    return _insert_far(train, m, spec.tolerance, rng)


def _jitter(train, m, rng, attempts=1000):
    """Displace every event by a uniform offset in [-m, m], clamped to the train.

    Offsets are redrawn until no two events of a channel land on the same
    step, so jitter never silently turns into a spike removal.
    """
    n = train.num_channels
    for _ in range(attempts):
        times = np.clip(train.times + rng.integers(-m, m + 1, size=len(train)), 0, train.duration - 1)
        keys = times * n + train.channels
        if np.unique(keys).size == keys.size:
            return SpikeTrain.from_arrays(times, train.channels, n, train.duration)
    raise DomainError(f"no collision-free jitter of magnitude {m} found")


def _insert_near(train, count, tol, rng):
    """Extra spikes on the channel of a random event, 1..2*tol steps away from it."""
    occupied = set(train)
    reach = max(2 * tol, 1)
    extra = []
    candidates = []
    for t, c in train:
        for d in range(1, reach + 1):
            for s in (t - d, t + d):
                if 0 <= s < train.duration and (s, c) not in occupied:
                    candidates.append((s, c))
    candidates = sorted(set(candidates))
    if len(candidates) < count:
        raise DomainError("not enough free slots for insert_near")
    for k in rng.choice(len(candidates), size=count, replace=False):
        extra.append(candidates[k])
    return _with_extra(train, extra)


def _insert_far(train, count, tol, rng):
    """Extra spikes more than 5*tol from every event, no earlier than the first one."""
    gap = 5 * tol
    t_all = train.times
    steps = np.arange(int(t_all.min()), train.duration)
    dist = np.min(np.abs(steps[:, None] - t_all[None, :]), axis=1)
    free = steps[dist > gap]
    slots = [(int(t), c) for t in free for c in range(train.num_channels)]
    if len(slots) < count:
        raise DomainError(f"insert_far: only {len(slots)} slots lie beyond {gap} steps of every event")
    extra = [slots[k] for k in rng.choice(len(slots), size=count, replace=False)]
    return _with_extra(train, extra)


def _with_extra(train, extra):
    if not extra:
        return train
    t, c = zip(*extra)
    return SpikeTrain.from_arrays(np.concatenate([train.times, t]),
                                  np.concatenate([train.channels, c]),
                                  train.num_channels, train.duration)
