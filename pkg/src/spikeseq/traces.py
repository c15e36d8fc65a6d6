"""Plot-data files: neuron traces, reward evolution, window events, output spikes."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .network import TrainedNetwork, WindowResult, detect_stream
from .reward import train_reward_profiles
from .spikes import SpikeTrain
from .window import run_window, write_window_events

LAYERS = ("layer1", "layer2", "layer3")


@dataclass
class RunArtifacts:
    """What a traced detection run leaves behind."""

    net: TrainedNetwork
    stream: SpikeTrain
    results: list[WindowResult] = field(default_factory=list)
    traced: bool = False


def traced_run(net: TrainedNetwork, stream: SpikeTrain) -> RunArtifacts:
    return RunArtifacts(net, stream, detect_stream(net, stream, trace=True), traced=True)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_layer_trace(results: list[WindowResult], layer: str, path) -> int:
    """CSV ``layer,neuron,t,v_mem,i_syn,spike`` in absolute time; returns the row count."""
    rows = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("layer,neuron,t,v_mem,i_syn,spike\n")
        for res in results:
            tr = res.traces.get(layer)
            if not tr:
                continue
            steps, n = tr["v_mem"].shape
            for k in range(n):
                for t in range(steps):
                    fh.write(f"{layer},{k},{res.span.origin + t},{_fmt(tr['v_mem'][t, k])},"
                             f"{_fmt(tr['i_syn'][t, k])},{int(tr['spikes'][t, k])}\n")
                    rows += 1
    return rows


def write_reward_evolution(net: TrainedNetwork, path) -> int:
    """Retrain layer 1 on the bundle's target and log every epoch; returns the block count."""
    blocks = []
    profile_len = net.profiles[0].window_len if net.profiles else net.config.window.window_len
    train_reward_profiles(net.target, net.config.reward, window_len=profile_len,
                          history=lambda epoch, ws: blocks.append((epoch, ws)))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for epoch, ws in blocks:
            fh.write(f"# epoch={epoch}\n")
            fh.write("channel,t,weight\n")
            for c, w in enumerate(ws):
                for t, x in enumerate(w):
                    fh.write(f"{c},{t},{_fmt(x)}\n")
    return len(blocks)


def write_spikes_out(results: list[WindowResult], path) -> int:
    """All layer spikes in absolute time; layer-3 spikes come from the verdicts."""
    rows = []
    for res in results:
        for name, tr in (("layer1", res.layer1), ("layer2", res.layer2)):
            rows.extend((name, c, res.span.origin + t) for t, c in tr)
        l3 = res.traces.get("layer3")
        if l3:
            rows.extend(("layer3", 0, res.span.origin + int(t)) for t in np.flatnonzero(l3["spikes"][:, 0]))
        elif res.verdict.matched:
            rows.append(("layer3", 0, res.verdict.match_time))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("layer,neuron,t\n")
        for name, c, t in rows:
            fh.write(f"{name},{c},{t}\n")
    return sum(1 for r in rows if r[0] == "layer3")


def emit_plots(artifacts: RunArtifacts, out_dir) -> dict:
    """Write every plot-data file into ``out_dir``; returns name -> path."""
    if not artifacts.traced:
        raise ConfigurationError("this run was not traced; rerun with tracing enabled")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    for layer in LAYERS:
        files[f"trace_{layer}"] = out / f"trace_{layer}.csv"
        write_layer_trace(artifacts.results, layer, files[f"trace_{layer}"])
    files["reward_evolution"] = out / "reward_evolution.csv"
    write_reward_evolution(artifacts.net, files["reward_evolution"])
    files["spikes_out"] = out / "spikes_out.csv"
    write_spikes_out(artifacts.results, files["spikes_out"])
    cfg = artifacts.net.config
    run = run_window(artifacts.stream.dense().any(axis=1), cfg.window, steps=artifacts.stream.duration)
    files["window_events"] = out / "window_events.csv"
    write_window_events(run.events, files["window_events"])
    return files
