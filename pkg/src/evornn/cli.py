"""Command-line interface.

Subcommands:
  evolve    run a repeated-k-fold experiment from a config file
  stats     aggregate runstats records into min/avg/max/corr tables
  rank      rank run types by standard deviations from the mean MSE
  fixtures  generate the bundled synthetic benchmark files
  replay    re-execute an event log and verify it reproduces exactly
"""

import argparse
import dataclasses
import sys
from pathlib import Path

from .config import (RunConfig, load_config, run_type_label, save_config)
from .data import (NORMALIZE_MODES, build_dataset, fold_split,
                   generate_fixture_files, load_files, make_folds)
from .harness import derive_seed, run_experiment
from .islands import read_event_log
from .runtime import ReplayMismatch, replay
from .stats import (aggregate, deviation_ranking, emit_tables,
                    load_run_stats)


def _add_override_flags(parser):
    parser.add_argument("--data", nargs="+", default=None,
                        help="time-series CSV files")
    parser.add_argument("--target", default=None, help="target column name")
    parser.add_argument("--cells", default=None,
                        help="comma-separated allowed cell types")
    parser.add_argument("--folds", type=int, default=None)
    parser.add_argument("--repeats", type=int, default=None)
    parser.add_argument("--islands", type=int, default=None)
    parser.add_argument("--population", type=int, default=None)
    parser.add_argument("--budget", type=int, default=None,
                        help="total genomes to generate per run")
    parser.add_argument("--workers", type=int, default=None,
                        help="training workers per run")
    parser.add_argument("--epochs", type=int, default=None,
                        help="training epochs per genome")
    parser.add_argument("--normalize", choices=NORMALIZE_MODES, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--output-dir", default=None)


def _build_config(args) -> RunConfig:
    if args.config:
        config = load_config(args.config)
    else:
        if not args.data or not args.target:
            raise SystemExit("either --config or both --data and --target "
                             "are required")
        config = RunConfig(data_paths=list(args.data), target_column=args.target)
    overrides = {}
    if args.data is not None and args.config:
        overrides["data_paths"] = list(args.data)
    if args.target is not None and args.config:
        overrides["target_column"] = args.target
    if args.cells is not None:
        overrides["allowed_cell_types"] = tuple(
            name.strip() for name in args.cells.split(",") if name.strip())
    for flag, field in (("folds", "folds"), ("repeats", "repeats"),
                        ("islands", "n_islands"),
                        ("population", "population_size"),
                        ("budget", "generation_budget"),
                        ("workers", "n_workers"),
                        ("normalize", "normalize"), ("seed", "seed"),
                        ("output_dir", "output_dir")):
        value = getattr(args, flag)
        if value is not None:
            overrides[field] = value
    if args.epochs is not None:
        overrides["training"] = dataclasses.replace(config.training,
                                                    epochs=args.epochs)
    return dataclasses.replace(config, **overrides) if overrides else config


def _cmd_evolve(args) -> int:
    config = _build_config(args)
    progress = sys.stderr if not args.quiet else None
    report = run_experiment(config, progress=progress,
                            max_parallel_runs=args.parallel_runs)
    for r in report.runs:
        print(f"fold={r.fold} repeat={r.repeat} seed={r.seed} "
              f"best_mse={r.stats.best_mse:.6g} dir={r.run_dir}")
    for f in report.failures:
        print(f"FAILED fold={f.fold} repeat={f.repeat}: {f.error}",
              file=sys.stderr)
    print(f"{len(report.runs)} runs completed, {len(report.failures)} failed; "
          f"outputs in {report.output_dir}")
    return 0 if report.ok else 1


def _collect_stats(runs_dir: Path) -> list:
    paths = sorted(runs_dir.rglob("runstats.json"))
    if not paths:
        raise SystemExit(f"no runstats.json files under {runs_dir}")
    return [load_run_stats(p) for p in paths]


def _cmd_stats(args) -> int:
    runs_dir = Path(args.runs)
    stats = _collect_stats(runs_dir)
    report = aggregate(stats)
    out_dir = Path(args.out) if args.out else runs_dir
    csv_path, txt_path = emit_tables(report, out_dir)
    sys.stdout.write(txt_path.read_text(encoding="utf-8"))
    print(f"tables written to {csv_path} and {txt_path}")
    return 0


def _cmd_rank(args) -> int:
    stats = _collect_stats(Path(args.runs))
    groups = {}
    for s in stats:
        groups.setdefault(s.run_type, []).append(s.best_mse)
    if len(groups) < 2:
        raise SystemExit("ranking needs runstats from at least two run types")
    tables = {
        "best": {t: min(v) for t, v in groups.items()},
        "avg": {t: sum(v) / len(v) for t, v in groups.items()},
        "worst": {t: max(v) for t, v in groups.items()},
    }
    ranking = deviation_ranking(tables, sample=not args.population_std)
    print(f"{'rank':<6}{'run type':<16}{'score':>10}")
    for i, (run_type, score) in enumerate(ranking, start=1):
        print(f"{i:<6}{run_type:<16}{score:>+10.4f}")
    return 0


def _cmd_fixtures(args) -> int:
    paths = generate_fixture_files(args.out, n_files=args.files,
                                   n_rows=args.rows, n_columns=args.columns,
                                   seed=args.seed)
    for p in paths:
        print(p)
    return 0


def _cmd_replay(args) -> int:
    config = load_config(args.config)
    events_path = Path(args.events)
    fold, repeat = args.fold, args.repeat
    stats_path = events_path.parent / "runstats.json"
    if fold is None or repeat is None:
        if not stats_path.exists():
            raise SystemExit("pass --fold and --repeat, or keep events.log "
                             "next to its runstats.json")
        stats = load_run_stats(stats_path)
        fold = stats.fold if fold is None else fold
        repeat = stats.repeat if repeat is None else repeat
    files = load_files(config.data_paths)
    plan = make_folds(files, config.folds, config.seed)
    train_files, val_files = fold_split(files, plan, fold)
    dataset = build_dataset(train_files, val_files, config.target_column,
                            normalize=config.normalize)
    from .harness import _settings_for
    events = read_event_log(events_path)
    try:
        replay(dataset, _settings_for(config), events)
    except ReplayMismatch as exc:
        print(f"replay diverged: {exc}", file=sys.stderr)
        return 1
    expected_seed = derive_seed(config.seed, fold, repeat)
    print(f"replay ok: {len(events)} events reproduced exactly "
          f"(fold={fold} repeat={repeat} seed={expected_seed})")
    return 0


def _cmd_init(args) -> int:
    config = RunConfig(data_paths=list(args.data), target_column=args.target)
    save_config(args.out, config)
    print(f"wrote {args.out} (run type {run_type_label(config.allowed_cell_types)})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evornn",
        description="neuro-evolution of recurrent networks for time-series "
                    "prediction")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="run a k-fold experiment")
    p.add_argument("--config", default=None, help="JSON run configuration")
    _add_override_flags(p)
    p.add_argument("--parallel-runs", type=int, default=1,
                   help="independent runs to execute concurrently")
    p.add_argument("--quiet", action="store_true",
                   help="suppress progress output")
    p.set_defaults(func=_cmd_evolve)

    p = sub.add_parser("stats", help="aggregate runstats into tables")
    p.add_argument("--runs", required=True,
                   help="directory searched recursively for runstats.json")
    p.add_argument("--out", default=None,
                   help="directory for tables (default: the runs directory)")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("rank", help="rank run types by deviation from mean")
    p.add_argument("--runs", required=True)
    p.add_argument("--population-std", action="store_true",
                   help="use population (n) instead of sample (n-1) stddev")
    p.set_defaults(func=_cmd_rank)

    p = sub.add_parser("fixtures", help="generate synthetic benchmark files")
    p.add_argument("--out", required=True)
    p.add_argument("--files", type=int, default=4)
    p.add_argument("--rows", type=int, default=1000)
    p.add_argument("--columns", type=int, default=12)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=_cmd_fixtures)

    p = sub.add_parser("replay", help="verify an event log reproduces")
    p.add_argument("--config", required=True)
    p.add_argument("--events", required=True, help="path to events.log")
    p.add_argument("--fold", type=int, default=None)
    p.add_argument("--repeat", type=int, default=None)
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("init", help="write a starter config file")
    p.add_argument("--out", required=True)
    p.add_argument("--data", nargs="+", required=True)
    p.add_argument("--target", required=True)
    p.set_defaults(func=_cmd_init)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
