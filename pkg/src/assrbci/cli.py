"""
The ``assrbci`` command line tool.

Subcommands::

    gen-stim   synthesize one stimulus and write it as a stereo WAV file
    simulate   simulate labelled EEG epochs for every protocol condition
    features   extract PLV feature vectors from simulated epochs to CSV
    evaluate   leave-one-out evaluation of feature CSV files
    report     tabulate evaluation results next to the published tables
    sweep      simulate, extract, evaluate and report in one go

Exit status is 0 on success, 2 for invalid input and 1 for I/O failures.
"""

import argparse
import asyncio
import concurrent.futures
import logging
import os
import sys
from typing import Optional, Sequence

from assrbci import __version__
from assrbci.config import AppConfig, dump_config, load_config
from assrbci.epochs import find_condition_dirs, load_epoch_set, save_epoch_set
from assrbci.features import (
    PlvSummary,
    extract_features,
    read_features_csv,
    write_features_csv,
)
from assrbci.formats.text import TextFormatter
from assrbci.renderer import render
from assrbci.session import (
    TASKS,
    build_report,
    evaluate_features,
    load_results,
    run_condition,
    run_sweep,
    save_result,
)
from assrbci.stimgen import (
    Direction,
    StimulusKind,
    spatialize,
    stimulus_spec_for,
    synthesize,
    write_wav,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_IO_ERROR = 1
EXIT_INVALID = 2
FEATURES_NAME = "features.csv"
CONFIG_NAME = "config.json"


def _load(path: Optional[str]) -> AppConfig:
    return load_config(path) if path else AppConfig()


def _emit(content: bytes, out: Optional[str]) -> None:
    if out:
        with open(out, "wb") as f:
            f.write(content)
    else:
        sys.stdout.write(content.decode("utf-8"))


def cmd_gen_stim(args: argparse.Namespace) -> None:
    kind = StimulusKind(args.kind)
    direction = Direction(args.dir)
    spec = stimulus_spec_for(
        kind,
        args.fm,
        args.len,
        audio_rate=args.rate,
        amplitude=args.amplitude,
        click_width=args.click_width,
    )
    out = args.out or f"{kind.value}_{args.fm:g}Hz_{args.len:g}s_{direction.value}.wav"
    write_wav(spatialize(synthesize(spec), direction), out)
    print(f"{spec.describe()}, routed {direction.value}")
    print(f"wrote {out}")


def cmd_simulate(args: argparse.Namespace) -> None:
    cfg = _load(args.config)
    seed = cfg.protocol.rng_seed if args.seed is None else args.seed
    os.makedirs(args.out_dir, exist_ok=True)
    for kind, length in cfg.protocol.conditions:
        if args.kind and kind.value not in args.kind:
            continue
        if args.length and length not in args.length:
            continue
        eset = run_condition(kind, length, cfg.protocol, cfg.sim, seed)
        path = save_epoch_set(eset, args.out_dir)
        print(f"{path}: {len(eset)} epochs")
    dump_config(cfg, os.path.join(args.out_dir, CONFIG_NAME))


def cmd_features(args: argparse.Namespace) -> None:
    cfg = _load(args.config)
    paths = find_condition_dirs(args.epoch_dir)
    if not paths:
        raise ValueError(f"No condition directories in {args.epoch_dir}")
    if args.out and len(paths) > 1:
        raise ValueError("--out needs a single condition directory")
    summary = PlvSummary()
    for path in paths:
        eset = load_epoch_set(path)
        vectors = extract_features(eset.epochs, cfg.dsp)
        out = args.out or os.path.join(path, FEATURES_NAME)
        write_features_csv(vectors, out)
        summary.observe_vectors(vectors)
        print(f"{out}: {len(vectors)} feature vectors")
    sys.stdout.write(TextFormatter().marshall_summary(summary).decode("utf-8"))


def cmd_evaluate(args: argparse.Namespace) -> None:
    cfg = _load(args.config)
    tasks = TASKS if args.task == "both" else (args.task,)
    for csv_path in args.features_csv:
        vectors = read_features_csv(csv_path)
        if not vectors:
            raise ValueError(f"{csv_path}: no feature rows")
        for task in tasks:
            result = evaluate_features(vectors, task, args.seed, cfg.nbc)
            path = save_result(result, args.out_dir)
            parts = ", ".join(
                f"{name} {r.accuracy:.4f}" for name, r in result.results.items()
            )
            print(
                f"{task} {result.kind.value} {result.length:g} s: "
                f"accuracy {result.accuracy:.4f} ({parts}) -> {path}"
            )


def cmd_report(args: argparse.Namespace) -> None:
    cfg = _load(args.config)
    results = load_results(args.results_dir)
    report = build_report(
        results,
        protocol=cfg.protocol,
        include_reference=not args.no_reference,
    )
    content, _ = render(report, [args.format])
    _emit(content, args.out)


def cmd_sweep(args: argparse.Namespace) -> None:
    cfg = _load(args.config)
    if args.n_seeds < 1:
        raise ValueError(f"--n-seeds must be >= 1, got {args.n_seeds}")
    base = cfg.protocol.rng_seed if args.seed is None else args.seed
    seeds = list(range(base, base + args.n_seeds))
    executor = None
    if args.jobs > 1:
        executor = concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs)
    try:
        results = asyncio.run(
            run_sweep(cfg.protocol, cfg.sim, seeds, cfg.dsp, cfg.nbc, executor=executor)
        )
    finally:
        if executor is not None:
            executor.shutdown()
    for result in results:
        save_result(result, args.out_dir)
    report = build_report(results, protocol=cfg.protocol)
    content, _ = render(report, [args.format])
    _emit(content, args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="assrbci",
        description="ASSR auditory BCI stimuli, simulation and evaluation",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="log progress (-v) or details (-vv)",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    p = subparsers.add_parser("gen-stim", help="write a stimulus WAV file")
    p.add_argument("--kind", required=True, choices=[k.value for k in StimulusKind])
    p.add_argument("--fm", required=True, type=float, help="modulation rate in Hz")
    p.add_argument("--len", required=True, type=float, help="duration in seconds")
    p.add_argument(
        "--dir", default=Direction.center.value, choices=[d.value for d in Direction]
    )
    p.add_argument("--rate", type=int, default=44100, help="audio samples per second")
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--click-width", type=int, default=1, help="samples per click phase")
    p.add_argument("--out", help="output file, default derived from the parameters")
    p.set_defaults(func=cmd_gen_stim)

    p = subparsers.add_parser("simulate", help="simulate EEG epochs")
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--seed", type=int, help="session seed, default from config")
    p.add_argument("--out-dir", default="epochs")
    p.add_argument(
        "--kind",
        action="append",
        choices=[k.value for k in StimulusKind],
        help="only this stimulus kind (repeatable)",
    )
    p.add_argument(
        "--length", action="append", type=float, help="only this length (repeatable)"
    )
    p.set_defaults(func=cmd_simulate)

    p = subparsers.add_parser("features", help="extract PLV feature vectors")
    p.add_argument("epoch_dir", help="a condition directory or a directory of them")
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--out", help=f"CSV path, default <condition>/{FEATURES_NAME}")
    p.set_defaults(func=cmd_features)

    p = subparsers.add_parser("evaluate", help="leave-one-out evaluation")
    p.add_argument("features_csv", nargs="+")
    p.add_argument("--task", default="both", choices=list(TASKS) + ["both"])
    p.add_argument("--seed", type=int, default=0, help="seed label of the results")
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--out-dir", default="results")
    p.set_defaults(func=cmd_evaluate)

    p = subparsers.add_parser("report", help="tabulate evaluation results")
    p.add_argument("results_dir")
    p.add_argument("--format", default="text", choices=["text", "csv"])
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--no-reference", action="store_true", help="omit published tables")
    p.add_argument("--out", help="output file, default stdout")
    p.set_defaults(func=cmd_report)

    p = subparsers.add_parser("sweep", help="run and report the full protocol")
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--seed", type=int, help="first seed, default from config")
    p.add_argument("--n-seeds", type=int, default=5)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out-dir", default="results")
    p.add_argument("--format", default="text", choices=["text", "csv"])
    p.add_argument("--out", help="report file, default stdout")
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    try:
        args.func(args)
    except ValueError as exc:
        logger.error(f"{args.command}: {exc}")
        return EXIT_INVALID
    except OSError as exc:
        logger.error(f"{args.command}: {exc}")
        return EXIT_IO_ERROR
    return EXIT_OK