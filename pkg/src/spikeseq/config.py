"""Experiment configuration and its flat ``section.key`` YAML form.

Example file::

    seed: 7
    window.wait_time: 200
    istdp.lam: 0.0008
    layer3.alpha: 0.95

Unknown keys are rejected so that typos fail loudly.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import yaml

from .coincidence import Layer3Params
from .errors import ConfigurationError
from .istdp import ISTDPParams
from .neuron import NeuronParams
from .reward import RewardTrainConfig
from .window import WindowConfig


@dataclass(frozen=True)
class ExperimentConfig:
    layer1: NeuronParams = field(default_factory=NeuronParams)
    layer2: NeuronParams = field(default_factory=lambda: NeuronParams(du=0.0, dv=0.0))
    layer3: NeuronParams = field(default_factory=lambda: NeuronParams(du=1.0, dv=0.0))
    reward: RewardTrainConfig = field(default_factory=RewardTrainConfig)
    istdp: ISTDPParams = field(default_factory=ISTDPParams)
    detector: Layer3Params = field(default_factory=Layer3Params)
    window: WindowConfig = field(default_factory=WindowConfig)
    bin_width: int = 10
    epochs_per_sample: int = 10
    train_per_class: int = 40
    test_per_class: int = 13
    classes: tuple = (0, 3, 5)
    speaker: int | None = None
    jitter_tolerance: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.bin_width < 1 or self.epochs_per_sample < 1:
            raise ConfigurationError("bin_width and epochs_per_sample must be >= 1")
        if self.train_per_class < 1 or self.test_per_class < 0:
            raise ConfigurationError("invalid split sizes")
        if not self.istdp.t_stop < self.window.wait_time:
            raise ConfigurationError("istdp.t_stop must fall inside the search window")
        if self.detector.gate_center is not None and self.detector.gate_center != self.istdp.t_stop:
            raise ConfigurationError("layer3.gate_center must equal istdp.t_stop")

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


_SECTIONS = {"layer1": "layer1", "layer2": "layer2", "layer3_neuron": "layer3",
             "reward": "reward", "istdp": "istdp", "layer3": "detector", "window": "window"}


def to_flat(config: ExperimentConfig) -> dict:
    flat = {}
    for prefix, attr in _SECTIONS.items():
        for f in dataclasses.fields(getattr(config, attr)):
            flat[f"{prefix}.{f.name}"] = getattr(getattr(config, attr), f.name)
    for f in dataclasses.fields(config):
        if f.name not in _SECTIONS.values():
            value = getattr(config, f.name)
            flat[f.name] = list(value) if isinstance(value, tuple) else value
    return flat


def from_flat(flat: dict) -> ExperimentConfig:
    sections: dict[str, dict] = {attr: {} for attr in _SECTIONS.values()}
    top = {}
    top_names = {f.name for f in dataclasses.fields(ExperimentConfig)} - set(_SECTIONS.values())
    for key, value in (flat or {}).items():
        if "." in key:
            prefix, name = key.split(".", 1)
            if prefix not in _SECTIONS:
                raise ConfigurationError(f"unknown config section {prefix!r}")
            attr = _SECTIONS[prefix]
            cls = type(getattr(ExperimentConfig(), attr))
            if name not in {f.name for f in dataclasses.fields(cls)}:
                raise ConfigurationError(f"unknown config key {key!r}")
            sections[attr][name] = value
        elif key in top_names:
            top[key] = tuple(value) if key == "classes" else value
        else:
            raise ConfigurationError(f"unknown config key {key!r}")
    try:
        base = ExperimentConfig()
        parts = {attr: dataclasses.replace(getattr(base, attr), **vals) if vals else getattr(base, attr)
                 for attr, vals in sections.items()}
        if "istdp" in sections and "t_stop" in sections["istdp"] and "gate_center" not in sections["detector"]:
            if parts["detector"].gate_center is not None:
                parts["detector"] = dataclasses.replace(parts["detector"], gate_center=parts["istdp"].t_stop)
        return ExperimentConfig(**parts, **top)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    if data is not None and not isinstance(data, dict):
        raise ConfigurationError("config file must be a mapping of flat keys")
    return from_flat(data or {})


def dump_config(config: ExperimentConfig) -> str:
    return yaml.safe_dump(to_flat(config), sort_keys=True)


def save_config(config: ExperimentConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_config(config))
