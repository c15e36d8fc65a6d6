"""The full detector: window circuit plus the three trained layers."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .coincidence import (ChannelStats, DetectionVerdict, accumulate_stats, detect,
                          layer3_weights)
from .config import ExperimentConfig, load_config, save_config
from .errors import ConfigurationError, DomainError, TrainingError
from .istdp import SynapseWeights, run_layer2, train_layer2
from .reward import (RewardProfile, load_profiles, save_profiles, select_relative,
                     train_reward_profiles)
from .spikes import SpikeTrain
from .window import WindowSpan, run_window


@dataclass
class TrainedNetwork:
    config: ExperimentConfig
    target: SpikeTrain          # window-relative expected pattern
    profiles: list[RewardProfile]
    filtered: SpikeTrain        # layer-1 output for the target
    layer2: SynapseWeights
    stats: ChannelStats
    layer3: np.ndarray

    @property
    def num_channels(self) -> int:
        return self.target.num_channels

    def save(self, directory) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        save_config(self.config, d / "config.yaml")
        self.target.save(d / "target.events")
        self.filtered.save(d / "filtered.events")
        save_profiles(self.profiles, d / "profiles.txt")
        self.layer2.save(d / "layer2.csv")
        lines = ["channel,total_spikes,epochs,weight"]
        for c in range(self.num_channels):
            lines.append(f"{c},{int(self.stats.total_spikes[c])},{self.stats.epochs},{float(self.layer3[c])!r}")
        (d / "layer3.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, directory) -> "TrainedNetwork":
        d = Path(directory)
        if not (d / "config.yaml").exists():
            raise ConfigurationError(f"{d} is not a trained network directory")
        config = load_config(d / "config.yaml")
        filtered = SpikeTrain.load(d / "filtered.events")
        totals, weights, epochs = [], [], 1
        for line in (d / "layer3.csv").read_text(encoding="utf-8").splitlines()[1:]:
            if line.strip():
                _, n, epochs, w = line.split(",")
                totals.append(int(n))
                weights.append(float(w))
        return cls(config, SpikeTrain.load(d / "target.events"), load_profiles(d / "profiles.txt"),
                   filtered, SynapseWeights.load(d / "layer2.csv", filtered),
                   ChannelStats(np.array(totals, np.int64), int(epochs)), np.array(weights))


def window_origin(train: SpikeTrain, config: ExperimentConfig) -> int | None:
    """Step at which the window circuit opens for this train, None if it never does."""
    spans = run_window(train.dense().any(axis=1), config.window, steps=train.duration).spans
    return spans[0].origin if spans else None


def relative_pattern(train: SpikeTrain, config: ExperimentConfig) -> SpikeTrain:
    """Events of the first window, relative to its origin and cut at window_len."""
    origin = window_origin(train, config)
    if origin is None:
        return SpikeTrain.empty(train.num_channels, config.window.window_len)
    return train.window(origin, origin + config.window.window_len)


def median_target(samples: Sequence[SpikeTrain], config: ExperimentConfig) -> SpikeTrain:
    """Per-channel target built from window-relative samples.

    A channel gets round(median count) spikes; the k-th target spike is the
    median of the k-th spike times over samples that have one.
    """
    rel = [relative_pattern(s, config) for s in samples]
    n = samples[0].num_channels
    times, channels = [], []
    for c in range(n):
        per_sample = [r.channel_times(c) for r in rel]
        k = int(np.round(np.median([p.size for p in per_sample])))
        for j in range(k):
            vals = [p[j] for p in per_sample if p.size > j]
            if vals:
                times.append(int(np.round(np.median(vals))))
                channels.append(c)
    return SpikeTrain.from_arrays(times, channels, n, config.window.window_len)


def train_network(samples: SpikeTrain | Sequence[SpikeTrain], config: ExperimentConfig) -> TrainedNetwork:
    """Train layer 1, then layer 2 on its output, then the layer-3 weights."""
    if isinstance(samples, SpikeTrain):
        samples = [samples]
    samples = list(samples)
    if not samples:
        raise DomainError("no training samples")
    if len({s.num_channels for s in samples}) != 1:
        raise ConfigurationError("training samples differ in channel count")
    wl = config.window.window_len
    # profiles run past the window end so a late jittered spike is still judged by its bump
    profile_len = wl + config.reward.kernel_width
    target = relative_pattern(samples[0], config) if len(samples) == 1 else median_target(samples, config)
    try:
        profiles = train_reward_profiles(target, config.reward, window_len=profile_len)
    except DomainError as exc:
        raise TrainingError(f"layer 1: {exc}", layer="layer1") from exc
    filtered = select_relative(target, profiles, config.layer1, config.reward, steps=profile_len + 1)
    layer2 = train_layer2(filtered, config.istdp, config.layer2)
    presentations = []
    for s in samples:
        rel = relative_pattern(s, config)
        out = select_relative(rel, profiles, config.layer1, config.reward, steps=profile_len + 1)
        presentations.extend([out] * config.epochs_per_sample)
    stats = accumulate_stats(presentations, target.num_channels)
    weights = layer3_weights(stats, config.detector)
    if not weights.sum() > 0:
        raise TrainingError("layer 3: no channel produced layer-1 spikes", layer="layer3")
    return TrainedNetwork(config, target, profiles, filtered, layer2, stats, weights)


@dataclass
class WindowResult:
    span: WindowSpan
    verdict: DetectionVerdict   # match_time in absolute steps
    layer1: SpikeTrain          # window-relative
    layer2: SpikeTrain          # window-relative
    traces: dict = field(default_factory=dict)


def run_window_layers(net: TrainedNetwork, rel_input: SpikeTrain, steps: int,
                      traces: dict | None = None) -> tuple[SpikeTrain, SpikeTrain, DetectionVerdict]:
    """Layers 1-3 on an input already relative to a window origin."""
    cfg = net.config
    t1 = {} if traces is not None else None
    t2 = {} if traces is not None else None
    t3 = {} if traces is not None else None
    l1 = select_relative(rel_input, net.profiles, cfg.layer1, cfg.reward, steps=steps, trace=t1)
    l2 = run_layer2(l1, net.layer2, cfg.istdp, cfg.layer2, steps, trace=t2)
    verdict = detect(l2, net.layer3, cfg.detector, cfg.layer3, trace=t3)
    if traces is not None:
        traces.update(layer1=t1, layer2=t2, layer3=t3)
    return l1, l2, verdict


def detect_stream(net: TrainedNetwork, stream: SpikeTrain, trace: bool = False) -> list[WindowResult]:
    """Open windows on ``stream`` and run the layers inside each one."""
    if stream.num_channels != net.num_channels:
        raise ConfigurationError(
            f"stream has {stream.num_channels} channels, network expects {net.num_channels}")
    cfg = net.config
    run = run_window(stream.dense().any(axis=1), cfg.window, steps=stream.duration)
    results = []
    for span in run.spans:
        rel = stream.window(span.origin, span.close)
        traces = {} if trace else None
        l1, l2, v = run_window_layers(net, rel, span.length, traces)
        absolute = DetectionVerdict(True, span.origin + v.match_time) if v.matched else v
        results.append(WindowResult(span, absolute, l1, l2, traces or {}))
    return results


def detect_sample(net: TrainedNetwork, sample: SpikeTrain, trace: bool = False) -> DetectionVerdict:
    """Earliest match over all windows of the sample."""
    padded = sample.with_duration(max(sample.duration, padded_duration(sample, net.config)))
    for res in detect_stream(net, padded, trace=trace):
        if res.verdict.matched:
            return res.verdict
    return DetectionVerdict(False)


def padded_duration(sample: SpikeTrain, config: ExperimentConfig) -> int:
    """Long enough for a window opened by the first event to close."""
    first = sample.first_time() or 0
    return first + config.window.wait_time + 2
