"""Multi-class evaluation, the five-criteria suite and the digit experiment."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .coincidence import DetectionVerdict, pick_class
from .config import ExperimentConfig
from .errors import ConfigurationError, DomainError, TrainingError
from .network import TrainedNetwork, detect_sample, train_network
from .patterns import PerturbationSpec, generate_pattern, perturb
from .preprocess import LabeledSample, bin_events, build_reduction_plan, reduce_channels
from .spikes import SpikeTrain


@dataclass
class ConfusionMatrix:
    """Rows are actual classes; columns are predicted classes then "no match"."""

    classes: list
    counts: np.ndarray = None

    def __post_init__(self):
        k = len(self.classes)
        if self.counts is None:
            self.counts = np.zeros((k, k + 1), dtype=np.int64)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape == (k, k):
            self.counts = np.hstack([self.counts, np.zeros((k, 1), np.int64)])
        if self.counts.shape != (k, k + 1) or (self.counts < 0).any():
            raise ConfigurationError("counts must be a non-negative (k, k+1) matrix")

    def add(self, actual, predicted_index: int | None) -> None:
        row = self.classes.index(actual)
        col = len(self.classes) if predicted_index is None else predicted_index
        self.counts[row, col] += 1

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def errors(self) -> int:
        return self.total - int(np.trace(self.counts[:, :len(self.classes)]))

    @property
    def error_rate(self) -> float:
        return self.errors / self.total if self.total else 0.0

    def to_csv(self) -> str:
        header = ["actual"] + [f"pred_{c}" for c in self.classes] + ["no_match"]
        lines = [",".join(header)]
        for c, row in zip(self.classes, self.counts):
            lines.append(",".join([str(c)] + [str(int(x)) for x in row]))
        lines.append(f"# error_rate={self.error_rate!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "ConfusionMatrix":
        rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
        header = rows[0].split(",")
        classes = [_parse_label(h[len("pred_"):]) for h in header[1:-1]]
        counts = [[int(x) for x in r.split(",")[1:]] for r in rows[1:]]
        return cls(classes, np.array(counts))


def _parse_label(text):
    try:
        return int(text)
    except ValueError:
        return text


def classify(nets: Sequence[TrainedNetwork], sample: SpikeTrain) -> tuple[int | None, list[DetectionVerdict]]:
    verdicts = [detect_sample(net, sample) for net in nets]
    return pick_class(verdicts), verdicts


def evaluate(bundles: dict, test: Sequence[LabeledSample], verdict_rows: list | None = None) -> ConfusionMatrix:
    """Run every test sample through every class network.

    ``bundles`` maps class label to trained network. When ``verdict_rows``
    is given it receives (sample_id, class, verdict) for each pair.
    """
    if not bundles:
        raise ConfigurationError("at least one class network is required")
    classes = list(bundles)
    nets = [bundles[c] for c in classes]
    cm = ConfusionMatrix(classes)
    for s in test:
        predicted, verdicts = classify(nets, s.train)
        cm.add(s.label, predicted)
        if verdict_rows is not None:
            verdict_rows.extend((s.sample_id, c, v) for c, v in zip(classes, verdicts))
    return cm


# -- five-criteria suite ------------------------------------------------------

CRITERIA = ("canonical", "drop", "swap", "jitter", "insert_far", "insert_near")


@dataclass
class CriteriaReport:
    passed: dict = field(default_factory=lambda: {k: 0 for k in CRITERIA})
    trials: dict = field(default_factory=lambda: {k: 0 for k in CRITERIA})
    training_failures: int = 0

    def record(self, criterion: str, ok: bool) -> None:
        self.trials[criterion] += 1
        self.passed[criterion] += int(ok)

    def rate(self, criterion: str) -> float:
        n = self.trials[criterion]
        return self.passed[criterion] / n if n else 0.0

    def to_csv(self) -> str:
        lines = ["criterion,passed,trials,rate"]
        for k in CRITERIA:
            lines.append(f"{k},{self.passed[k]},{self.trials[k]},{self.rate(k)!r}")
        lines.append(f"# training_failures={self.training_failures}")
        return "\n".join(lines) + "\n"


def criteria_pattern(config: ExperimentConfig, seed: int, num_channels: int = 5,
                     spikes_per_channel=(1, 3)) -> SpikeTrain:
    """Random pattern inside the window, padded so that far insertions fit after it."""
    p = generate_pattern(num_channels, config.window.window_len, spikes_per_channel, seed)
    return p.with_duration(config.window.wait_time + 6 * config.jitter_tolerance + 50)


def run_criteria_suite(config: ExperimentConfig, trials: int = 50, seed: int = 0,
                       num_channels: int = 5, draws: int = 1, far_extras: int = 3,
                       near_extras: int = 1) -> CriteriaReport:
    """Train on a random pattern per trial and probe it with every perturbation.

    The drop criterion removes each spike in turn and passes only when all
    of them are rejected. Other perturbations are drawn ``draws`` times.
    A trial whose training fails counts against every criterion.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    report = CriteriaReport()
    tol = config.jitter_tolerance
    ss = np.random.SeedSequence(seed)
    for trial_seed in ss.generate_state(trials):
        pattern = criteria_pattern(config, int(trial_seed), num_channels)
        try:
            net = train_network(pattern, config)
        except TrainingError:
            report.training_failures += 1
            for k in CRITERIA:
                report.record(k, False)
            continue
        hit = lambda tr: detect_sample(net, tr).matched  # noqa: E731
        report.record("canonical", hit(pattern))
        all_rejected = True
        for i in range(len(pattern)):
            keep = np.ones(len(pattern), bool)
            keep[i] = False
            dropped = SpikeTrain(pattern.times[keep], pattern.channels[keep],
                                 pattern.num_channels, pattern.duration)
            all_rejected &= not hit(dropped)
        report.record("drop", all_rejected)
        rng = np.random.default_rng(int(trial_seed))
        for _ in range(draws):
            s = int(rng.integers(2**31))
            report.record("swap", not hit(perturb(pattern, PerturbationSpec("swap_channels"), s)))
            report.record("jitter", hit(perturb(pattern, PerturbationSpec("jitter", tol, tol), s)))
            report.record("insert_far", hit(perturb(pattern, PerturbationSpec("insert_far", far_extras, tol), s)))
            report.record("insert_near",
                          not hit(perturb(pattern, PerturbationSpec("insert_near", near_extras, tol), s)))
    return report


# -- multi-class experiment ----------------------------------------------------

def split_by_class(samples: Sequence[LabeledSample], config: ExperimentConfig
                   ) -> tuple[dict, list[LabeledSample]]:
    """Per-class train/test split after an optional speaker filter.

    Samples of each class are shuffled with the config seed; the first
    ``train_per_class`` train, the next ``test_per_class`` test.
    """
    rng = np.random.default_rng(config.seed)
    train, test = {}, []
    for label in config.classes:
        pool = [s for s in samples if s.label == label and
                (config.speaker is None or s.speaker == config.speaker)]
        need = config.train_per_class + config.test_per_class
        if len(pool) < need:
            raise ConfigurationError(f"class {label}: {len(pool)} samples, split needs {need}")
        order = rng.permutation(len(pool))
        chosen = [pool[i] for i in order[:need]]
        train[label] = chosen[:config.train_per_class]
        test.extend(chosen[config.train_per_class:])
    return train, test


def train_classes(train: dict, config: ExperimentConfig) -> dict:
    return {label: train_network([s.train for s in group], config) for label, group in train.items()}


def preprocess_samples(samples: Sequence[LabeledSample], train_ids: set, config: ExperimentConfig
                       ) -> list[LabeledSample]:
    """Reduce channels with a plan built from the training samples, then bin."""
    plan = build_reduction_plan([s for s in samples if s.sample_id in train_ids])
    return [LabeledSample(bin_events(reduce_channels(s.train, plan), config.bin_width),
                          s.label, s.speaker, s.sample_id) for s in samples]


def synthetic_digits(config: ExperimentConfig, num_channels: int = 7,
                     jitter_by_class: Sequence[int] = (1, 2, 2)) -> list[LabeledSample]:
    """Stand-in digit set: one random template per class plus class-specific jitter."""
    rng = np.random.default_rng(config.seed)
    n = config.train_per_class + config.test_per_class
    samples = []
    duration = config.window.wait_time + 10
    for k, label in enumerate(config.classes):
        template = generate_pattern(num_channels, config.window.window_len, (1, 3),
                                    seed=int(rng.integers(2**31))).with_duration(duration)
        j = jitter_by_class[k % len(jitter_by_class)]
        for i in range(n):
            train = perturb(template, PerturbationSpec("jitter", j), seed=int(rng.integers(2**31)))
            samples.append(LabeledSample(train, label, 0, f"{label}-{i:03d}"))
    return samples


@dataclass
class ExperimentResult:
    matrix: ConfusionMatrix
    bundles: dict
    verdicts: list
    train_ids: set
    test_ids: set


def run_experiment(samples: Sequence[LabeledSample], config: ExperimentConfig) -> ExperimentResult:
    train, test = split_by_class(samples, config)
    bundles = train_classes(train, config)
    rows: list = []
    cm = evaluate(bundles, test, rows)
    train_ids = {s.sample_id for g in train.values() for s in g}
    return ExperimentResult(cm, bundles, rows, train_ids, {s.sample_id for s in test})


def write_matrix(cm: ConfusionMatrix, path) -> None:
    Path(path).write_text(cm.to_csv(), encoding="utf-8")


def read_verdicts(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))
