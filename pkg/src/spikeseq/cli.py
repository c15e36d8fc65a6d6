"""Command line entry point: ``spikeseq <command> [options]``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .coincidence import write_verdicts
from .config import ExperimentConfig, load_config, save_config
from .errors import ConfigurationError, DomainError, IngestionError, TrainingError
from .evaluate import (preprocess_samples, run_criteria_suite, run_experiment, split_by_class,
                       synthetic_digits, write_matrix)
from .network import TrainedNetwork, detect_sample, train_network
from .patterns import KINDS, PerturbationSpec, generate_pattern, perturb
from .preprocess import build_reduction_plan, convert_shd, read_manifest, write_samples
from .spikes import SpikeTrain
from .traces import emit_plots, traced_run

log = logging.getLogger("spikeseq")

EXIT_OK, EXIT_TRAINING, EXIT_CONFIG = 0, 1, 2


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_convert(args, cfg):
    src = Path(args.input)
    if src.suffix == ".csv":
        samples = read_manifest(src)
        write_samples(samples, _out(args))
    else:
        samples = convert_shd(src, _out(args), resolution=args.resolution)
    log.info("wrote %d samples to %s", len(samples), args.out)


def cmd_preprocess(args, cfg):
    samples = read_manifest(args.manifest)
    train, _ = split_by_class(samples, cfg)
    train_ids = {s.sample_id for g in train.values() for s in g}
    plan = build_reduction_plan([s for s in samples if s.sample_id in train_ids])
    out = _out(args)
    (out / "plan.txt").write_text(plan.to_text(), encoding="utf-8")
    reduced = preprocess_samples(samples, train_ids, cfg)
    write_samples(reduced, out)
    log.info("reduced %d samples to %d channels", len(reduced), plan.num_outputs)


def cmd_gen(args, cfg):
    p = generate_pattern(args.channels, cfg.window.window_len, (args.min_spikes, args.max_spikes), cfg.seed)
    if args.pad:
        p = p.with_duration(p.duration + args.pad)
    if args.perturb:
        p = perturb(p, PerturbationSpec(args.perturb, args.magnitude, cfg.jitter_tolerance), cfg.seed)
    out = _out(args)
    p.save(out / args.name)
    log.info("wrote %s (%d events)", out / args.name, len(p))


def cmd_train(args, cfg):
    if args.manifest:
        samples = [s.train for s in read_manifest(args.manifest)
                   if args.label is None or s.label == args.label]
    else:
        samples = [SpikeTrain.load(p) for p in args.input]
    if not samples:
        raise ConfigurationError("no training samples selected")
    net = train_network(samples, cfg)
    net.save(_out(args))
    log.info("trained on %d samples; bundle in %s", len(samples), args.out)


def cmd_detect(args, cfg):
    net = TrainedNetwork.load(args.bundle)
    rows = []
    for path in args.input:
        train = SpikeTrain.load(path)
        rows.append((Path(path).stem, args.label, detect_sample(net, train)))
    write_verdicts(rows, _out(args) / "verdicts.csv")
    for sid, _, v in rows:
        print(f"{sid}: {'match at ' + str(v.match_time) if v.matched else 'no match'}")


def cmd_eval(args, cfg):
    samples = synthetic_digits(cfg) if args.synthetic else read_manifest(args.manifest)
    if samples and samples[0].train.num_channels % 100 == 0:
        # raw recordings: reduce channels with a plan built from the training split only
        train, _ = split_by_class(samples, cfg)
        samples = preprocess_samples(samples, {s.sample_id for g in train.values() for s in g}, cfg)
    result = run_experiment(samples, cfg)
    out = _out(args)
    save_config(cfg, out / "config.yaml")
    write_matrix(result.matrix, out / "confusion_matrix.csv")
    write_verdicts(result.verdicts, out / "verdicts.csv")
    if args.trace:
        tests = {}
        for s in samples:
            if s.sample_id in result.test_ids:
                tests.setdefault(s.label, s)
        for label, net in result.bundles.items():
            sample = tests[label]
            stream = sample.train.with_duration(max(sample.train.duration,
                                                    (sample.train.first_time() or 0) + cfg.window.wait_time + 2))
            emit_plots(traced_run(net, stream), out / "traces" / f"class_{label}")
    print(result.matrix.to_csv(), end="")


def cmd_criteria(args, cfg):
    report = run_criteria_suite(cfg, args.trials, cfg.seed, draws=args.draws)
    (_out(args) / "criteria.csv").write_text(report.to_csv(), encoding="utf-8")
    print(report.to_csv(), end="")


def cmd_plot(args, cfg):
    net = TrainedNetwork.load(args.bundle)
    stream = SpikeTrain.load(args.input)
    files = emit_plots(traced_run(net, stream), _out(args))
    for name, path in files.items():
        log.info("%s -> %s", name, path)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat YAML config file")
    common.add_argument("--seed", type=int, help="overrides the config seed")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="spikeseq", description="Temporal spike pattern detector")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", parents=[common], help="SHD container or manifest to event files")
    p.add_argument("input")
    p.add_argument("--resolution", type=float, default=1e-3, help="seconds per timestep")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("preprocess", parents=[common], help="channel reduction and binning")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("gen", parents=[common], help="random pattern, optionally perturbed")
    p.add_argument("--channels", type=int, default=5)
    p.add_argument("--min-spikes", type=int, default=1)
    p.add_argument("--max-spikes", type=int, default=3)
    p.add_argument("--pad", type=int, default=0, help="extra silent steps after the window")
    p.add_argument("--perturb", choices=KINDS)
    p.add_argument("--magnitude", type=int, default=1)
    p.add_argument("--name", default="pattern.events", help="output file name")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", parents=[common], help="train one detector network")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", nargs="+", help="event files of one class")
    src.add_argument("--manifest")
    p.add_argument("--label", type=int, help="class to take from the manifest")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("detect", parents=[common], help="run a trained network on event files")
    p.add_argument("--bundle", required=True)
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--label", default="", help="class name written to the verdict file")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", parents=[common], help="train per class and build a confusion matrix")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--manifest")
    src.add_argument("--synthetic", action="store_true", help="use the synthetic digit set")
    p.add_argument("--trace", action="store_true", help="also write plot data per class")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("criteria", parents=[common], help="five-criteria property suite")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--draws", type=int, default=1)
    p.set_defaults(func=cmd_criteria)

    p = sub.add_parser("plot", parents=[common], help="plot-data files for one input")
    p.add_argument("--bundle", required=True)
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
        args.func(args, cfg)
    except TrainingError as exc:
        print(f"training failed: {exc}", file=sys.stderr)
        if exc.residuals:
            print(f"residuals: {exc.residuals}", file=sys.stderr)
        return EXIT_TRAINING
    except (ConfigurationError, DomainError, IngestionError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
