"""Asynchronous master/worker execution of one evolutionary run.

The master thread owns the RunState (populations, RNG, event log) and hands
work to an in-process pool of worker threads through a queue; workers train
genomes at their own pace and push results back.  With one worker the whole
run is exactly sequential and therefore byte-reproducible from the seed; with
several workers the event log records the actual completion order, and
``replay`` re-executes the master's decisions from that log to reproduce the
final populations.
"""

import math
import queue
import threading
import time
import traceback
from dataclasses import dataclass, field

import numpy as np

from . import trainer as trainer_mod
from .genome import RnnGenome
from .islands import (
    EvolutionSettings, RunState, best_genome, emit_event, insert_result,
    new_run_state, next_work, parse_event,
)
from .trainer import TrainingConfig


@dataclass
class RunSettings:
    """Everything one evolutionary run needs besides the data and the seed."""

    evolution: EvolutionSettings = field(default_factory=EvolutionSettings)
    training: TrainingConfig = field(default_factory=TrainingConfig)


@dataclass
class WorkItem:
    work_id: int
    genome: RnnGenome
    island: int
    seed: int


@dataclass
class WorkResult:
    work_id: int
    genome: RnnGenome
    island: int
    duration: float
    worker_id: int
    error: str = ""


@dataclass
class RunReport:
    state: RunState
    best: RnnGenome | None
    duration: float
    n_workers: int
    seed: int
    completion_order: list
    failed_work_ids: list

    @property
    def events(self) -> list:
        return self.state.events


class ReplayMismatch(RuntimeError):
    """A replayed master decision disagreed with the recorded event log."""


def derive_item_seed(base_seed: int, work_id: int) -> int:
    """Stable per-work-item seed stream, independent of the master RNG."""
    seq = np.random.SeedSequence([int(base_seed), int(work_id)])
    return int(seq.generate_state(1)[0])


def _resolve_fitness(outcome) -> float:
    if outcome.diverged:
        return float("inf")
    fitness = float(outcome.validation_mse)
    if math.isnan(fitness):
        return float("inf")
    return fitness


def worker_loop(work_queue, result_queue, train_frames, val_frames,
                config: TrainingConfig, worker_id: int = 0,
                train_fn=None) -> None:
    """Pull work items until a None sentinel arrives; never raises.

    Training failures are reported through WorkResult.error so a bad genome
    cannot take the pool down.
    """
    train = train_fn if train_fn is not None else trainer_mod.train
    while True:
        item = work_queue.get()
        if item is None:
            break
        start = time.perf_counter()
        try:
            outcome = train(item.genome, train_frames, val_frames, config)
            genome = outcome.genome
            genome.fitness = _resolve_fitness(outcome)
            result = WorkResult(item.work_id, genome, item.island,
                                time.perf_counter() - start, worker_id)
        except Exception:
            result = WorkResult(item.work_id, item.genome, item.island,
                                time.perf_counter() - start, worker_id,
                                error=traceback.format_exc())
        result_queue.put(result)


def _emit_header(state: RunState, settings: RunSettings, seed: int) -> None:
    emit_event(state, "run", seed=seed,
               islands=settings.evolution.n_islands,
               population=settings.evolution.population_size,
               budget=settings.evolution.generation_budget)


def _progress_line(state: RunState) -> str:
    try:
        best = repr(best_genome(state).fitness)
    except ValueError:
        best = "-"
    return (f"generated={state.generated_count}/{state.generation_budget} "
            f"evaluated={state.evaluated_count} "
            f"inserted={state.inserted_count} best={best}")


def run(dataset, settings: RunSettings, n_workers: int = 1, seed: int = 0,
        progress=None, progress_interval: int = 25,
        train_fn=None) -> RunReport:
    """Execute one full evolutionary run and return its report.

    Work is issued on demand: at most n_workers items are in flight, new
    children are generated only when a worker is free to take them, and
    results are integrated in arrival order.  A work item whose training
    raised is reissued once, then counted as failed.
    """
    if n_workers < 1:
        raise ValueError("n_workers must be at least 1")
    if seed < 0:
        raise ValueError("seed must be non-negative")
    train_frames = dataset.frames("train")
    val_frames = dataset.frames("validation")
    state = new_run_state(len(dataset.input_columns), 1,
                          settings.evolution, seed)
    _emit_header(state, settings, seed)

    work_queue: queue.Queue = queue.Queue()
    result_queue: queue.Queue = queue.Queue()
    threads = [
        threading.Thread(
            target=worker_loop,
            args=(work_queue, result_queue, train_frames, val_frames,
                  settings.training, worker_id, train_fn),
            daemon=True,
        )
        for worker_id in range(n_workers)
    ]
    for t in threads:
        t.start()

    issued: dict = {}
    attempts: dict = {}
    integrated: set = set()
    failed: list = []
    completion_order: list = []
    in_flight = 0
    start = time.perf_counter()
    try:
        while True:
            while in_flight < n_workers and state.remaining() > 0:
                work = next_work(state)
                if work is None:
                    break
                item = WorkItem(work.work_id, work.genome, work.island,
                                derive_item_seed(seed, work.work_id))
                issued[item.work_id] = item
                attempts[item.work_id] = 1
                work_queue.put(item)
                in_flight += 1
            if in_flight == 0:
                if state.remaining() <= 0:
                    break
                raise RuntimeError(
                    "child generation stalled: every island failed to "
                    "produce a candidate")
            result = result_queue.get()
            in_flight -= 1
            if result.work_id in integrated:
                continue
            if result.error:
                if attempts[result.work_id] == 1:
                    attempts[result.work_id] = 2
                    work_queue.put(issued[result.work_id])
                    in_flight += 1
                else:
                    failed.append(result.work_id)
                    emit_event(state, "failed", work=result.work_id,
                               island=result.island)
                continue
            integrated.add(result.work_id)
            completion_order.append(result.work_id)
            insert_result(state, result.genome)
            if progress is not None and progress_interval > 0 \
                    and state.evaluated_count % progress_interval == 0:
                progress.write(_progress_line(state) + "\n")
                progress.flush()
    finally:
        for _ in threads:
            work_queue.put(None)
        for t in threads:
            t.join()

    if progress is not None:
        progress.write(_progress_line(state) + "\n")
        progress.flush()
    best = best_genome(state) if state.evaluated_count > 0 else None
    return RunReport(state, best, time.perf_counter() - start, n_workers,
                     seed, completion_order, failed)


def replay(dataset, settings: RunSettings, events, train_fn=None) -> RunState:
    """Re-execute the master decisions recorded in an event log.

    Children are regenerated in log order from the recorded seed, trained
    synchronously at their recorded evaluation points, and inserted exactly
    where the log says; every emitted event is compared against the recorded
    line and any disagreement raises ReplayMismatch.  Returns the final
    RunState, whose populations must match the original run's.
    """
    if not events:
        raise ReplayMismatch("event log is empty")
    name, fields = parse_event(events[0])
    if name != "run":
        raise ReplayMismatch("event log does not start with a run header")
    seed = int(fields["seed"])
    for key, value in (("islands", settings.evolution.n_islands),
                       ("population", settings.evolution.population_size),
                       ("budget", settings.evolution.generation_budget)):
        if int(fields[key]) != value:
            raise ReplayMismatch(
                f"settings disagree with log header on {key}: "
                f"{value} vs {fields[key]}")
    train = train_fn if train_fn is not None else trainer_mod.train
    train_frames = dataset.frames("train")
    val_frames = dataset.frames("validation")
    state = new_run_state(len(dataset.input_columns), 1,
                          settings.evolution, seed)
    _emit_header(state, settings, seed)
    _check_emitted(state, events, 0, 1)

    pending: dict = {}
    i = 1
    while i < len(events):
        name, fields = parse_event(events[i])
        if name in ("generated", "discarded"):
            before = len(state.events)
            work = next_work(state)
            emitted = len(state.events) - before
            if emitted == 0:
                raise ReplayMismatch(
                    f"next_work produced no events at line {i}")
            _check_emitted(state, events, before, emitted)
            if work is not None:
                pending[work.work_id] = work.genome
            i += emitted
        elif name == "evaluated":
            work_id = int(fields["work"])
            if work_id not in pending:
                raise ReplayMismatch(
                    f"evaluated event for unknown work id {work_id}")
            genome = pending.pop(work_id)
            outcome = train(genome, train_frames, val_frames,
                            settings.training)
            trained = outcome.genome
            trained.fitness = _resolve_fitness(outcome)
            before = len(state.events)
            insert_result(state, trained)
            _check_emitted(state, events, before, 2)
            i += 2
        elif name == "failed":
            # a worker fault cannot be re-executed; keep the record so the
            # event streams stay aligned
            pending.pop(int(fields["work"]), None)
            state.events.append(events[i])
            i += 1
        else:
            raise ReplayMismatch(f"unexpected event at line {i}: {name}")
    return state


def _check_emitted(state: RunState, recorded, start: int, count: int) -> None:
    for offset in range(count):
        idx = start + offset
        if idx >= len(recorded) or state.events[idx] != recorded[idx]:
            want = recorded[idx] if idx < len(recorded) else "<end of log>"
            raise ReplayMismatch(
                f"replay diverged at event {idx}:\n"
                f"  recorded: {want}\n"
                f"  replayed: {state.events[idx]}")
