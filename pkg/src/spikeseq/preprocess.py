"""Dataset ingestion, density-ranked channel reduction and time binning."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, IngestionError
from .spikes import SpikeTrain

GROUP_SIZE = 10


@dataclass
class LabeledSample:
    train: SpikeTrain
    label: int
    speaker: int | None = None
    sample_id: str = ""


@dataclass(frozen=True)
class ReductionPlan:
    """Two partitions into groups of ten: inputs -> stage-1 groups -> outputs.

    ``stage1_groups[g]`` lists the input channels merged into stage-1
    channel ``g``; ``stage2_groups`` does the same one level up.
    """

    stage1_groups: tuple[tuple[int, ...], ...]
    stage2_groups: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        for name, groups in (("stage1", self.stage1_groups), ("stage2", self.stage2_groups)):
            members = sorted(c for g in groups for c in g)
            if members != list(range(len(members))):
                raise ConfigurationError(f"{name} groups are not a partition")
            if any(len(g) != GROUP_SIZE for g in groups):
                raise ConfigurationError(f"{name} groups must each hold {GROUP_SIZE} channels")
        if len(self.stage2_groups) * GROUP_SIZE != len(self.stage1_groups):
            raise ConfigurationError("stage2 must partition the stage1 channels")

    @property
    def num_inputs(self) -> int:
        return len(self.stage1_groups) * GROUP_SIZE

    @property
    def num_outputs(self) -> int:
        return len(self.stage2_groups)

    def channel_map(self) -> np.ndarray:
        """Output channel for every input channel."""
        s1 = np.empty(self.num_inputs, dtype=np.int64)
        for g, members in enumerate(self.stage1_groups):
            s1[list(members)] = g
        s2 = np.empty(len(self.stage1_groups), dtype=np.int64)
        for g, members in enumerate(self.stage2_groups):
            s2[list(members)] = g
        return s2[s1]

    def to_text(self) -> str:
        lines = ["stage,group_index,member_channels"]
        for stage, groups in ((1, self.stage1_groups), (2, self.stage2_groups)):
            for g, members in enumerate(groups):
                lines.append(f"{stage},{g},{' '.join(map(str, members))}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ReductionPlan":
        stages: dict[int, dict[int, tuple]] = {1: {}, 2: {}}
        for line in text.splitlines()[1:]:
            if not line.strip():
                continue
            stage, g, members = line.split(",")
            stages[int(stage)][int(g)] = tuple(int(m) for m in members.split())
        return cls(tuple(stages[1][g] for g in sorted(stages[1])),
                   tuple(stages[2][g] for g in sorted(stages[2])))


def _rank_groups(density: np.ndarray) -> tuple[tuple[int, ...], ...]:
    # ascending density, ties by lower index; groups run from sparsest to densest
    order = np.lexsort((np.arange(density.size), density))
    return tuple(tuple(sorted(order[i:i + GROUP_SIZE].tolist()))
                 for i in range(0, density.size, GROUP_SIZE))


def build_reduction_plan(training: Sequence[LabeledSample | SpikeTrain]) -> ReductionPlan:
    trains = [s.train if isinstance(s, LabeledSample) else s for s in training]
    if not trains:
        raise DomainError("cannot build a reduction plan from no samples")
    n = trains[0].num_channels
    if n % (GROUP_SIZE * GROUP_SIZE):
        raise ConfigurationError(f"{n} channels cannot be reduced twice by {GROUP_SIZE}")
    density = np.zeros(n, dtype=np.int64)
    for tr in trains:
        if tr.num_channels != n:
            raise ConfigurationError("samples differ in channel count")
        density += tr.counts()
    stage1 = _rank_groups(density)
    merged = np.array([density[list(g)].sum() for g in stage1])
    return ReductionPlan(stage1, _rank_groups(merged))


def reduce_channels_counted(sample: SpikeTrain, plan: ReductionPlan) -> tuple[SpikeTrain, int]:
    """Merge channels through the plan; also return how many events collapsed."""
    if sample.num_channels != plan.num_inputs:
        raise ConfigurationError(
            f"sample has {sample.num_channels} channels, plan expects {plan.num_inputs}")
    mapped = plan.channel_map()[sample.channels]
    return SpikeTrain.from_arrays_counted(sample.times, mapped, plan.num_outputs, sample.duration)


def reduce_channels(sample: SpikeTrain, plan: ReductionPlan) -> SpikeTrain:
    return reduce_channels_counted(sample, plan)[0]


def bin_events(train: SpikeTrain, bin_width: int) -> SpikeTrain:
    if bin_width < 1:
        raise DomainError("bin_width must be >= 1")
    if bin_width == 1:
        return train
    return SpikeTrain.from_arrays(train.times // bin_width, train.channels, train.num_channels,
                                  math.ceil(train.duration / bin_width))


def quantize_times(seconds, resolution: float = 1e-3) -> np.ndarray:
    """Continuous spike times to integer steps by flooring."""
    # the small epsilon keeps values like 0.042/0.001 = 41.99999 on the right step
    return np.floor(np.asarray(seconds, dtype=float) / resolution + 1e-9).astype(np.int64)


def _field(group, key):
    try:
        return group[key]
    except KeyError as exc:
        raise IngestionError(f"container has no field {key!r}", field=key) from exc


def read_shd(path, resolution: float = 1e-3, num_channels: int = 700) -> list[LabeledSample]:
    """Read an SHD hdf5 container into labeled samples."""
    import h5py

    try:
        fh = h5py.File(path, "r")
    except OSError as exc:
        raise IngestionError(f"cannot open {path}: {exc}") from exc
    with fh:
        times = _field(fh, "spikes/times")
        units = _field(fh, "spikes/units")
        labels = np.asarray(_field(fh, "labels"))
        speakers = np.asarray(fh["extra/speaker"]) if "extra/speaker" in fh else None
        if not (len(times) == len(units) == len(labels)):
            raise IngestionError("spikes/times, spikes/units and labels differ in length", field="labels")
        samples = []
        for k in range(len(labels)):
            t = quantize_times(times[k], resolution)
            u = np.asarray(units[k], dtype=np.int64)
            if t.shape != u.shape:
                raise IngestionError(f"sample {k}: times and units differ in length", field="spikes/units")
            if u.size and (u.min() < 0 or u.max() >= num_channels):
                raise IngestionError(f"sample {k}: unit index outside [0, {num_channels})", field="spikes/units")
            if t.size and t.min() < 0:
                raise IngestionError(f"sample {k}: negative spike time", field="spikes/times")
            duration = int(t.max()) + 1 if t.size else 1
            train = SpikeTrain.from_arrays(t, u, num_channels, duration)
            speaker = int(speakers[k]) if speakers is not None else None
            samples.append(LabeledSample(train, int(labels[k]), speaker, f"{k:05d}"))
    return samples


def write_samples(samples: Sequence[LabeledSample], out_dir) -> Path:
    """One event file per sample plus ``manifest.csv``; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = out / "manifest.csv"
    with open(manifest, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", "label", "speaker", "file"])
        for k, s in enumerate(samples):
            sid = s.sample_id or f"{k:05d}"
            name = f"{sid}.events"
            s.train.save(out / name)
            w.writerow([sid, s.label, "" if s.speaker is None else s.speaker, name])
    return manifest


def read_manifest(manifest) -> list[LabeledSample]:
    manifest = Path(manifest)
    samples = []
    with open(manifest, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            try:
                train = SpikeTrain.load(manifest.parent / row["file"])
                speaker = int(row["speaker"]) if row["speaker"] not in ("", None) else None
                samples.append(LabeledSample(train, int(row["label"]), speaker, row["sample_id"]))
            except KeyError as exc:
                raise IngestionError(f"manifest lacks column {exc}", field=str(exc)) from exc
    return samples


def convert_shd(path, out_dir, resolution: float = 1e-3) -> list[LabeledSample]:
    samples = read_shd(path, resolution)
    write_samples(samples, out_dir)
    return samples
