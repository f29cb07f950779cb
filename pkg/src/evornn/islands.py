"""Asynchronous steady-state island population management.

This is the "master" side of the search: a round-robin cursor walks the
islands handing out one child genome per request, trained results come back
and are inserted into their island of origin when strictly better than the
current worst member.  Every decision is appended to an event log of
line-delimited records, which is the substrate for replay, statistics, and
the determinism checks.  All mutation of :class:`RunState` must happen on a
single master context; workers only ever see genome copies.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .evolution import (
    OPERATORS, OperatorConfig, draw_mutation_operator, generate_child,
)
from .genome import InnovationRegistry, RnnGenome, randomize_weights, seed_genome

EVENT_NAMES = ("run", "generated", "evaluated", "inserted", "rejected",
               "discarded", "failed")


@dataclass
class EvolutionSettings:
    """Search-shape knobs: island layout, capacity, and total child budget."""

    n_islands: int = 10
    population_size: int = 5
    generation_budget: int = 2000
    operators: OperatorConfig = field(default_factory=OperatorConfig)

    def __post_init__(self):
        if self.n_islands < 1:
            raise ValueError("n_islands must be at least 1")
        if self.population_size < 1:
            raise ValueError("population_size must be at least 1")
        if self.generation_budget < 0:
            raise ValueError("generation_budget must be non-negative")


def _member_key(g: RnnGenome):
    return (g.fitness, g.generation_id)


@dataclass
class Island:
    id: int
    population_size: int
    members: list = field(default_factory=list)

    def best(self) -> RnnGenome:
        return self.members[0]

    def worst(self) -> RnnGenome:
        return self.members[-1]

    def sort(self) -> None:
        self.members.sort(key=_member_key)


@dataclass
class RunState:
    """Everything the master owns: populations, RNG, innovation registry,
    counters, and the append-only event log."""

    islands: list
    registry: InnovationRegistry
    seed_structure: RnnGenome
    rng: np.random.Generator
    config: OperatorConfig
    generation_budget: int
    generated_count: int = 0
    evaluated_count: int = 0
    inserted_count: int = 0
    discarded_count: int = 0
    round_robin_cursor: int = 0
    bootstrap_issued: list = field(default_factory=list)
    events: list = field(default_factory=list)

    @property
    def rejected_count(self) -> int:
        return self.evaluated_count - self.inserted_count

    def remaining(self) -> int:
        return self.generation_budget - self.generated_count


@dataclass
class GeneratedWork:
    """One child handed to a worker: the genome plus its provenance."""

    work_id: int
    genome: RnnGenome
    island: int
    kind: str
    operator: str


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_event(state: RunState, name: str, **fields) -> str:
    parts = [name, f"seq={len(state.events)}"]
    parts += [f"{key}={_fmt(value)}" for key, value in fields.items()]
    line = " ".join(parts)
    state.events.append(line)
    return line


def parse_event(line: str):
    """Split an event line into its name and a key -> string-value dict."""
    parts = line.split()
    if not parts or parts[0] not in EVENT_NAMES:
        raise ValueError(f"unrecognized event line: {line!r}")
    fields = {}
    for part in parts[1:]:
        key, sep, value = part.partition("=")
        if not sep:
            raise ValueError(f"malformed event field {part!r} in {line!r}")
        fields[key] = value
    return parts[0], fields


def write_event_log(path, events) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in events:
            fh.write(line)
            fh.write("\n")


def read_event_log(path) -> list:
    with open(path, "r", encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh if line.strip()]


def new_run_state(n_inputs: int, n_outputs: int, settings: EvolutionSettings,
                  seed: int) -> RunState:
    """Fresh run: one shared seed structure, empty islands, seeded master RNG."""
    if n_inputs < 1 or n_outputs < 1:
        raise ValueError("need at least one input and one output")
    rng = np.random.default_rng(seed)
    registry = InnovationRegistry()
    structure = seed_genome(n_inputs, n_outputs, registry, rng)
    islands = [Island(i, settings.population_size)
               for i in range(settings.n_islands)]
    return RunState(
        islands=islands,
        registry=registry,
        seed_structure=structure,
        rng=rng,
        config=settings.operators,
        generation_budget=settings.generation_budget,
        bootstrap_issued=[0] * settings.n_islands,
    )


def _bootstrap_variant(state: RunState):
    """A freshly weighted copy of the seed structure plus one mutation.

    Falls back to the unmutated copy when the drawn operator is not
    applicable, so bootstrap always produces a genome.
    """
    g = state.seed_structure.copy()
    randomize_weights(g, state.rng)
    name = draw_mutation_operator(state.rng, state.config)
    child = OPERATORS[name](g, state.config, state.registry, state.rng)
    if child is None:
        return g, "none"
    return child, name


def next_work(state: RunState) -> GeneratedWork | None:
    """Produce the next child genome, advancing the round-robin cursor.

    While an island has been issued fewer children than its capacity the
    child is a seed-structure variant; afterwards children come from
    generate_child against the island's current members.  A generation
    failure logs a discard and moves on to the next island; after one full
    lap of failures (or once the budget is spent) returns None.
    """
    if state.remaining() <= 0:
        return None
    n = len(state.islands)
    for _ in range(n):
        idx = state.round_robin_cursor
        state.round_robin_cursor = (idx + 1) % n
        island = state.islands[idx]
        if state.bootstrap_issued[idx] < island.population_size:
            genome, op = _bootstrap_variant(state)
            state.bootstrap_issued[idx] += 1
            kind = "seed"
        else:
            members = [isl.members for isl in state.islands]
            result = generate_child(members, idx, state.config,
                                    state.registry, state.rng)
            if result is None:
                state.discarded_count += 1
                emit_event(state, "discarded", island=idx)
                continue
            genome = result.child
            kind = result.kind
            op = result.operator or "none"
        work_id = state.generated_count
        state.generated_count += 1
        genome.generation_id = work_id
        genome.island = idx
        emit_event(state, "generated", work=work_id, island=idx,
                   kind=kind, op=op)
        return GeneratedWork(work_id, genome, idx, kind, op)
    return None


def insert_result(state: RunState, genome: RnnGenome) -> bool:
    """Integrate one trained genome into its island of origin.

    Below capacity the genome is inserted unconditionally; at capacity it
    must be strictly better than the worst member, which is then evicted.
    Returns True when inserted.
    """
    if genome.fitness is None:
        raise ValueError("cannot insert a genome without evaluated fitness")
    if math.isnan(genome.fitness):
        raise ValueError("fitness must not be NaN; diverged runs carry +inf")
    if not 0 <= genome.island < len(state.islands):
        raise ValueError(f"invalid island of origin: {genome.island}")
    island = state.islands[genome.island]
    state.evaluated_count += 1
    emit_event(state, "evaluated", work=genome.generation_id,
               island=genome.island, fitness=genome.fitness)
    if len(island.members) < island.population_size:
        island.members.append(genome)
        island.sort()
        inserted = True
    elif genome.fitness < island.worst().fitness:
        island.members.append(genome)
        island.sort()
        island.members.pop()
        inserted = True
    else:
        inserted = False
    if inserted:
        state.inserted_count += 1
        emit_event(state, "inserted", work=genome.generation_id,
                   island=genome.island, fitness=genome.fitness)
    else:
        emit_event(state, "rejected", work=genome.generation_id,
                   island=genome.island, fitness=genome.fitness)
    return inserted


def best_genome(state: RunState) -> RnnGenome:
    """Global minimum-fitness member; ties broken by lowest generation id."""
    best = None
    for island in state.islands:
        for g in island.members:
            if best is None or _member_key(g) < _member_key(best):
                best = g
    if best is None:
        raise ValueError("no evaluated members in any island")
    return best


def replay_insertions(events, n_islands: int, population_size: int) -> list:
    """Sequentially apply the inserted events of a log.

    Returns per-island lists of (fitness, work_id) tuples sorted the same
    way live islands are sorted.  Running the records through the same
    insert-then-trim rule must land on the exact populations the concurrent
    run ended with; this is the sequential-replay oracle for the island
    semantics checks.
    """
    populations = [[] for _ in range(n_islands)]
    for line in events:
        name, fields = parse_event(line)
        if name != "inserted":
            continue
        island = int(fields["island"])
        entry = (float(fields["fitness"]), int(fields["work"]))
        members = populations[island]
        members.append(entry)
        members.sort()
        if len(members) > population_size:
            members.pop()
    return populations
