"""Experiment orchestration: repeated k-fold runs from one RunConfig.

Each (fold, repeat) pair becomes one evolutionary run with its own derived
seed; every run writes a RunStats record, the raw event log, and the best-MSE
trajectory into its own directory.  Failed runs are recorded and the
experiment continues.
"""

import time
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import RunConfig, save_config
from .data import build_dataset, fold_split, load_files, make_folds
from .islands import EvolutionSettings, write_event_log
from .runtime import RunSettings, run
from .stats import (RunStats, save_run_stats, stats_from_report, trajectory,
                    write_trajectory)


def derive_seed(base_seed: int, fold: int, repeat: int) -> int:
    """Distinct, stable seed for each (fold, repeat) pair of one experiment."""
    seq = np.random.SeedSequence([int(base_seed), int(fold), int(repeat)])
    return int(seq.generate_state(1)[0])


@dataclass
class RunFailure:
    fold: int
    repeat: int
    error: str


@dataclass
class ExperimentRun:
    fold: int
    repeat: int
    seed: int
    stats: RunStats
    run_dir: Path
    duration: float


@dataclass
class ExperimentReport:
    config: RunConfig
    runs: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    output_dir: Path = None

    @property
    def ok(self) -> bool:
        return not self.failures

    def stats_list(self) -> list:
        return [r.stats for r in self.runs]


def run_dir_name(fold: int, repeat: int) -> str:
    return f"fold{fold}_rep{repeat}"


def _settings_for(config: RunConfig) -> RunSettings:
    evolution = EvolutionSettings(
        n_islands=config.n_islands,
        population_size=config.population_size,
        generation_budget=config.generation_budget,
        operators=config.operators,
    )
    return RunSettings(evolution=evolution, training=config.training)


def _execute_one(config, files, plan, fold, repeat, out_dir, progress,
                 train_fn):
    train_files, val_files = fold_split(files, plan, fold)
    dataset = build_dataset(train_files, val_files, config.target_column,
                            normalize=config.normalize)
    seed = derive_seed(config.seed, fold, repeat)
    run_dir = out_dir / run_dir_name(fold, repeat)
    run_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    report = run(dataset, _settings_for(config), n_workers=config.n_workers,
                 seed=seed, progress=progress, train_fn=train_fn)
    stats = stats_from_report(report, config.run_type, fold, repeat)
    save_run_stats(run_dir / "runstats.json", stats)
    write_event_log(run_dir / "events.log", report.events)
    write_trajectory(run_dir / "trajectory.csv", trajectory(report.events))
    return ExperimentRun(fold, repeat, seed, stats, run_dir,
                         time.perf_counter() - started)


def run_experiment(config: RunConfig, progress=None, train_fn=None,
                   max_parallel_runs: int = 1) -> ExperimentReport:
    """Execute folds x repeats runs and collect their statistics.

    Runs share nothing, so ``max_parallel_runs > 1`` executes them in a
    thread pool; the default is sequential.  A run that raises is recorded
    as a failure (with its traceback written next to where its outputs
    would have gone) and the rest of the experiment proceeds.
    """
    if max_parallel_runs < 1:
        raise ValueError("max_parallel_runs must be at least 1")
    out_dir = config.resolved_output_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    save_config(out_dir / "config.json", config)
    files = load_files(config.data_paths)
    plan = make_folds(files, config.folds, config.seed)

    pairs = [(fold, repeat) for repeat in range(config.repeats)
             for fold in range(config.folds)]
    report = ExperimentReport(config=config, output_dir=out_dir)

    def attempt(pair):
        fold, repeat = pair
        try:
            return _execute_one(config, files, plan, fold, repeat, out_dir,
                                progress, train_fn)
        except Exception as exc:
            detail = traceback.format_exc()
            run_dir = out_dir / run_dir_name(fold, repeat)
            run_dir.mkdir(parents=True, exist_ok=True)
            (run_dir / "error.txt").write_text(detail, encoding="utf-8")
            return RunFailure(fold, repeat, f"{type(exc).__name__}: {exc}")

    if max_parallel_runs == 1:
        outcomes = [attempt(pair) for pair in pairs]
    else:
        with ThreadPoolExecutor(max_workers=max_parallel_runs) as pool:
            outcomes = list(pool.map(attempt, pairs))

    for outcome in outcomes:
        if isinstance(outcome, RunFailure):
            report.failures.append(outcome)
        else:
            report.runs.append(outcome)
    return report
