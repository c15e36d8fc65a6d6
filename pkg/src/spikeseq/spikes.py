"""Spike events, spike trains and the plain-text event file format.

An event file is UTF-8 text::

    # channels=5 duration=100
    3,0
    3,4
    17,2

with one ``time,channel`` pair per line sorted by (time, channel). Extra
``#`` lines are comments; the header line is mandatory.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from .errors import ConfigurationError, DomainError

_HEADER = re.compile(r"#\s*channels\s*=\s*(\d+)\s+duration\s*=\s*(\d+)")


class SpikeEvent(NamedTuple):
    time: int
    channel: int


@dataclass(frozen=True, eq=False)
class SpikeTrain:
    """Sorted, duplicate-free set of (time, channel) events.

    ``times`` and ``channels`` are parallel int64 arrays. Use
    :meth:`from_arrays` when the input may be unsorted or contain
    duplicates; the plain constructor validates and rejects both.
    """

    times: np.ndarray
    channels: np.ndarray
    num_channels: int
    duration: int

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.int64).reshape(-1)
        channels = np.asarray(self.channels, dtype=np.int64).reshape(-1)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "channels", channels)
        object.__setattr__(self, "num_channels", int(self.num_channels))
        object.__setattr__(self, "duration", int(self.duration))
        if self.num_channels < 1:
            raise ConfigurationError("num_channels must be positive")
        if self.duration < 1:
            raise ConfigurationError("duration must be positive")
        if times.shape != channels.shape:
            raise ConfigurationError("times and channels differ in length")
        if times.size:
            if times.min() < 0 or times.max() >= self.duration:
                raise DomainError("event time outside [0, duration)")
            if channels.min() < 0 or channels.max() >= self.num_channels:
                raise DomainError("event channel outside [0, num_channels)")
            keys = times * self.num_channels + channels
            if np.any(np.diff(keys) <= 0):
                raise DomainError("events must be strictly sorted by (time, channel)")
        times.flags.writeable = False
        channels.flags.writeable = False

    @classmethod
    def from_arrays(cls, times, channels, num_channels, duration):
        """Sort and de-duplicate raw arrays into a valid train."""
        train, _ = cls.from_arrays_counted(times, channels, num_channels, duration)
        return train

    @classmethod
    def from_arrays_counted(cls, times, channels, num_channels, duration):
        """Like :meth:`from_arrays` but also return how many duplicates collapsed."""
        times = np.asarray(times, dtype=np.int64).reshape(-1)
        channels = np.asarray(channels, dtype=np.int64).reshape(-1)
        if times.size == 0:
            return cls(times, channels, num_channels, duration), 0
        keys = np.unique(times * int(num_channels) + channels)
        collapsed = times.size - keys.size
        return cls(keys // num_channels, keys % num_channels, num_channels, duration), int(collapsed)

    @classmethod
    def from_events(cls, events: Iterable, num_channels: int, duration: int):
        pairs = list(events)
        times = [int(e[0]) for e in pairs]
        channels = [int(e[1]) for e in pairs]
        return cls.from_arrays(times, channels, num_channels, duration)

    @classmethod
    def empty(cls, num_channels, duration):
        return cls(np.zeros(0, np.int64), np.zeros(0, np.int64), num_channels, duration)

    @classmethod
    def from_dense(cls, raster):
        """Build from a boolean (duration, num_channels) raster."""
        raster = np.asarray(raster, dtype=bool)
        t, c = np.nonzero(raster)
        return cls(t, c, raster.shape[1], raster.shape[0])

    def __len__(self):
        return int(self.times.size)

    def __iter__(self) -> Iterator[SpikeEvent]:
        for t, c in zip(self.times.tolist(), self.channels.tolist()):
            yield SpikeEvent(t, c)

    def __eq__(self, other):
        if not isinstance(other, SpikeTrain):
            return NotImplemented
        return (
            self.num_channels == other.num_channels
            and self.duration == other.duration
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.channels, other.channels)
        )

    def __repr__(self):
        return (f"SpikeTrain(events={len(self)}, num_channels={self.num_channels}, "
                f"duration={self.duration})")

    @property
    def events(self):
        return list(self)

    def channel_times(self, channel: int) -> np.ndarray:
        return self.times[self.channels == channel]

    def counts(self) -> np.ndarray:
        return np.bincount(self.channels, minlength=self.num_channels)

    def dense(self) -> np.ndarray:
        raster = np.zeros((self.duration, self.num_channels), dtype=bool)
        raster[self.times, self.channels] = True
        return raster

    def first_time(self):
        return int(self.times[0]) if self.times.size else None

    def with_duration(self, duration: int) -> "SpikeTrain":
        """Return a copy with a new duration; events beyond it are dropped."""
        keep = self.times < duration
        return SpikeTrain(self.times[keep], self.channels[keep], self.num_channels, duration)

    def shift(self, delta: int, duration: int | None = None) -> "SpikeTrain":
        """Translate all events by ``delta`` steps, dropping any that leave the train."""
        duration = self.duration + max(delta, 0) if duration is None else duration
        times = self.times + delta
        keep = (times >= 0) & (times < duration)
        return SpikeTrain(times[keep], self.channels[keep], self.num_channels, duration)

    def window(self, start: int, stop: int) -> "SpikeTrain":
        """Events in ``[start, stop)`` re-expressed relative to ``start``."""
        keep = (self.times >= start) & (self.times < stop)
        return SpikeTrain(self.times[keep] - start, self.channels[keep],
                          self.num_channels, max(stop - start, 1))

    def merge(self, other: "SpikeTrain") -> "SpikeTrain":
        if other.num_channels != self.num_channels:
            raise ConfigurationError("cannot merge trains with different channel counts")
        return SpikeTrain.from_arrays(
            np.concatenate([self.times, other.times]),
            np.concatenate([self.channels, other.channels]),
            self.num_channels, max(self.duration, other.duration))

    # -- text format -------------------------------------------------------

    def to_text(self) -> str:
        lines = [f"# channels={self.num_channels} duration={self.duration}"]
        lines.extend(f"{t},{c}" for t, c in self)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SpikeTrain":
        header = None
        times, channels = [], []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                m = _HEADER.match(line)
                if m and header is None:
                    header = (int(m.group(1)), int(m.group(2)))
                continue
            try:
                t, c = line.split(",")
                times.append(int(t))
                channels.append(int(c))
            except ValueError as exc:
                raise ConfigurationError(f"line {lineno}: expected 'time,channel', got {raw!r}") from exc
        if header is None:
            raise ConfigurationError("missing '# channels=<N> duration=<T>' header")
        return cls(np.array(times, dtype=np.int64), np.array(channels, dtype=np.int64), *header)

    def save(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "SpikeTrain":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))
