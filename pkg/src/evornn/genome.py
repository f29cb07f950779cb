"""Genome representation: a directed graph of typed neural units.

Nodes sit at a real-valued depth in [0, 1].  Feed-forward edges must go from
lower to strictly greater depth, so graphs are acyclic within a time step.
Recurrent edges may connect any depths (including self loops) and carry a
time skip, reading the source state from ``skip`` steps in the past.

Innovation ids give identical structural elements the same identity across
the whole population, which is what makes crossover by id alignment work.
Node ids are always fresh; edge ids are memoized by (source, target) and
recurrent edge ids by (source, target, skip).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import cells

INPUT = "input"
HIDDEN = "hidden"
OUTPUT = "output"

DEFAULT_MAX_SKIP = 10


@dataclass
class NodeGene:
    innovation_id: int
    kind: str                 # input | hidden | output
    cell_type: int            # cells.SIMPLE .. cells.UGRNN
    depth: float
    enabled: bool = True
    params: np.ndarray = None

    def __post_init__(self):
        if self.params is None:
            self.params = np.zeros(cells.param_count(self.cell_type))
        else:
            self.params = np.asarray(self.params, dtype=np.float64)

    def copy(self) -> "NodeGene":
        return NodeGene(self.innovation_id, self.kind, self.cell_type,
                        self.depth, self.enabled, self.params.copy())


@dataclass
class EdgeGene:
    innovation_id: int
    source_id: int
    target_id: int
    weight: float
    enabled: bool = True

    def copy(self) -> "EdgeGene":
        return EdgeGene(self.innovation_id, self.source_id, self.target_id,
                        self.weight, self.enabled)


@dataclass
class RecurrentEdgeGene:
    innovation_id: int
    source_id: int
    target_id: int
    time_skip: int
    weight: float
    enabled: bool = True

    def copy(self) -> "RecurrentEdgeGene":
        return RecurrentEdgeGene(self.innovation_id, self.source_id,
                                 self.target_id, self.time_skip,
                                 self.weight, self.enabled)


@dataclass
class InnovationRegistry:
    """Run-global id source.  Node ids are never reused; edge ids are keyed
    by endpoints so the same structural connection gets the same id in every
    genome that discovers it."""

    next_node_id: int = 0
    next_edge_id: int = 0
    next_recurrent_id: int = 0
    _edge_ids: dict = field(default_factory=dict)
    _recurrent_ids: dict = field(default_factory=dict)

    def node_innovation(self) -> int:
        nid = self.next_node_id
        self.next_node_id += 1
        return nid

    def edge_innovation(self, source_id: int, target_id: int) -> int:
        key = (source_id, target_id)
        eid = self._edge_ids.get(key)
        if eid is None:
            eid = self.next_edge_id
            self.next_edge_id += 1
            self._edge_ids[key] = eid
        return eid

    def recurrent_innovation(self, source_id: int, target_id: int,
                             time_skip: int) -> int:
        key = (source_id, target_id, time_skip)
        rid = self._recurrent_ids.get(key)
        if rid is None:
            rid = self.next_recurrent_id
            self.next_recurrent_id += 1
            self._recurrent_ids[key] = rid
        return rid


@dataclass
class RnnGenome:
    nodes: list = field(default_factory=list)
    edges: list = field(default_factory=list)
    recurrent_edges: list = field(default_factory=list)
    fitness: float | None = None
    generation_id: int = -1
    island: int = -1
    # Ids of nodes created by the operator that produced this genome; the
    # trainer applies one-time initialization (LSTM forget-bias offset) to
    # them and clears the list.
    fresh_node_ids: tuple = ()

    def node_by_id(self, innovation_id: int) -> NodeGene:
        for node in self.nodes:
            if node.innovation_id == innovation_id:
                return node
        raise KeyError(f"no node with id {innovation_id}")

    def node_map(self) -> dict:
        return {n.innovation_id: n for n in self.nodes}

    def input_ids(self) -> list:
        """All input node ids in creation order; position = data column."""
        return sorted(n.innovation_id for n in self.nodes if n.kind == INPUT)

    def output_ids(self) -> list:
        return sorted(n.innovation_id for n in self.nodes if n.kind == OUTPUT)

    def n_inputs(self) -> int:
        return sum(1 for n in self.nodes if n.kind == INPUT)

    def n_outputs(self) -> int:
        return sum(1 for n in self.nodes if n.kind == OUTPUT)

    def copy(self, reset_fitness: bool = True) -> "RnnGenome":
        g = RnnGenome(
            nodes=[n.copy() for n in self.nodes],
            edges=[e.copy() for e in self.edges],
            recurrent_edges=[e.copy() for e in self.recurrent_edges],
            fitness=None if reset_fitness else self.fitness,
            generation_id=self.generation_id,
            island=self.island,
            fresh_node_ids=self.fresh_node_ids,
        )
        return g

    def all_weight_values(self) -> np.ndarray:
        """Every learnable scalar in the genome: edge weights (both kinds,
        enabled or not) and parameter blocks of non-input nodes."""
        parts = [np.array([e.weight for e in self.edges]),
                 np.array([e.weight for e in self.recurrent_edges])]
        for n in self.nodes:
            if n.kind != INPUT:
                parts.append(n.params)
        return np.concatenate([p for p in parts if p.size]) \
            if any(p.size for p in parts) else np.zeros(0)


@dataclass
class Violation:
    code: str
    message: str
    element_id: int | None = None


def reachability_maps(genome: RnnGenome):
    """Forward closure from enabled inputs and backward closure from enabled
    outputs, over enabled nodes and enabled edges of both kinds (a recurrent
    edge moves source -> target like a feed-forward one)."""
    enabled = {n.innovation_id for n in genome.nodes if n.enabled}
    fwd_adj: dict = {}
    back_adj: dict = {}
    for e in genome.edges + genome.recurrent_edges:
        if e.enabled and e.source_id in enabled and e.target_id in enabled:
            fwd_adj.setdefault(e.source_id, []).append(e.target_id)
            back_adj.setdefault(e.target_id, []).append(e.source_id)

    def closure(seeds, adjacency):
        seen = set(seeds)
        stack = list(seeds)
        while stack:
            cur = stack.pop()
            for nxt in adjacency.get(cur, ()):
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return seen

    sources = {n.innovation_id for n in genome.nodes
               if n.enabled and n.kind == INPUT}
    sinks = {n.innovation_id for n in genome.nodes
             if n.enabled and n.kind == OUTPUT}
    return closure(sources, fwd_adj), closure(sinks, back_adj)


def reachable_set(genome: RnnGenome):
    """Ids of nodes/edges/recurrent edges lying on some enabled path from an
    input to an output.  Returns ``(node_ids, edge_ids, recurrent_ids)``."""
    fwd, back = reachability_maps(genome)
    node_ids = fwd & back
    edge_ids = {e.innovation_id for e in genome.edges
                if e.enabled and e.source_id in fwd and e.target_id in back}
    rec_ids = {e.innovation_id for e in genome.recurrent_edges
               if e.enabled and e.source_id in fwd and e.target_id in back}
    return node_ids, edge_ids, rec_ids


def validate(genome: RnnGenome, max_skip: int = DEFAULT_MAX_SKIP) -> list:
    """Structural invariant check; returns a list of Violations (empty when
    the genome is well formed)."""
    out = []
    seen_nodes = {}
    for n in genome.nodes:
        if n.innovation_id in seen_nodes:
            out.append(Violation("dup_node_id", "duplicate node innovation id",
                                 n.innovation_id))
        seen_nodes[n.innovation_id] = n
        if n.kind not in (INPUT, HIDDEN, OUTPUT):
            out.append(Violation("bad_kind", f"unknown node kind {n.kind!r}",
                                 n.innovation_id))
            continue
        if n.kind == INPUT and n.depth != 0.0:
            out.append(Violation("bad_depth", "input node depth must be 0",
                                 n.innovation_id))
        if n.kind == OUTPUT and n.depth != 1.0:
            out.append(Violation("bad_depth", "output node depth must be 1",
                                 n.innovation_id))
        if n.kind == HIDDEN and not 0.0 < n.depth < 1.0:
            out.append(Violation("bad_depth",
                                 "hidden node depth must lie strictly in (0,1)",
                                 n.innovation_id))
        if n.kind in (INPUT, OUTPUT) and n.cell_type != cells.SIMPLE:
            out.append(Violation("bad_cell", "input/output nodes must be simple",
                                 n.innovation_id))
        if n.params.shape != (cells.param_count(n.cell_type),):
            out.append(Violation("bad_params",
                                 "parameter block does not match cell type",
                                 n.innovation_id))
        elif not np.all(np.isfinite(n.params)):
            out.append(Violation("bad_params", "non-finite node parameter",
                                 n.innovation_id))
        if n.kind == OUTPUT and not n.enabled:
            out.append(Violation("disabled_output", "output nodes stay enabled",
                                 n.innovation_id))

    seen_edges = set()
    seen_pairs = set()
    for e in genome.edges:
        if e.innovation_id in seen_edges:
            out.append(Violation("dup_edge_id", "duplicate edge innovation id",
                                 e.innovation_id))
        seen_edges.add(e.innovation_id)
        src = seen_nodes.get(e.source_id)
        dst = seen_nodes.get(e.target_id)
        if src is None or dst is None:
            out.append(Violation("dangling_edge", "edge endpoint missing",
                                 e.innovation_id))
            continue
        if not src.depth < dst.depth:
            out.append(Violation("depth_order",
                                 "edge must go from lower to greater depth",
                                 e.innovation_id))
        if (e.source_id, e.target_id) in seen_pairs:
            out.append(Violation("dup_edge_pair",
                                 "two edges share the same endpoints",
                                 e.innovation_id))
        seen_pairs.add((e.source_id, e.target_id))
        if not np.isfinite(e.weight):
            out.append(Violation("bad_weight", "non-finite edge weight",
                                 e.innovation_id))

    seen_rec = set()
    seen_triples = set()
    for e in genome.recurrent_edges:
        if e.innovation_id in seen_rec:
            out.append(Violation("dup_rec_id",
                                 "duplicate recurrent edge innovation id",
                                 e.innovation_id))
        seen_rec.add(e.innovation_id)
        src = seen_nodes.get(e.source_id)
        dst = seen_nodes.get(e.target_id)
        if src is None or dst is None:
            out.append(Violation("dangling_edge",
                                 "recurrent edge endpoint missing",
                                 e.innovation_id))
            continue
        if dst.kind == INPUT:
            out.append(Violation("rec_into_input",
                                 "recurrent edge may not target an input node",
                                 e.innovation_id))
        if not 1 <= e.time_skip <= max_skip:
            out.append(Violation("bad_skip",
                                 f"time skip must lie in [1, {max_skip}]",
                                 e.innovation_id))
        key = (e.source_id, e.target_id, e.time_skip)
        if key in seen_triples:
            out.append(Violation("dup_rec_triple",
                                 "two recurrent edges share endpoints and skip",
                                 e.innovation_id))
        seen_triples.add(key)
        if not np.isfinite(e.weight):
            out.append(Violation("bad_weight",
                                 "non-finite recurrent edge weight",
                                 e.innovation_id))

    if not out:
        node_ids, _, _ = reachable_set(genome)
        for n in genome.nodes:
            if n.kind == OUTPUT and n.innovation_id not in node_ids:
                out.append(Violation("unreachable_output",
                                     "output node unreachable from inputs",
                                     n.innovation_id))
    return out


def seed_genome(n_inputs: int, n_outputs: int, registry: InnovationRegistry,
                rng: np.random.Generator | None = None,
                weight_low: float = -0.5, weight_high: float = 0.5) -> RnnGenome:
    """Minimal fully connected seed: every input wired straight to every
    output, no hidden nodes, no recurrence.  Weights and biases are uniform
    in [weight_low, weight_high]; with rng None they start at zero."""
    if n_inputs < 1 or n_outputs < 1:
        raise ValueError("seed genome needs at least one input and one output")
    g = RnnGenome()
    for _ in range(n_inputs):
        g.nodes.append(NodeGene(registry.node_innovation(), INPUT,
                                cells.SIMPLE, 0.0))
    for _ in range(n_outputs):
        nid = registry.node_innovation()
        params = np.zeros(cells.param_count(cells.SIMPLE))
        if rng is not None:
            params = rng.uniform(weight_low, weight_high, params.shape)
        g.nodes.append(NodeGene(nid, OUTPUT, cells.SIMPLE, 1.0, params=params))
    for src in g.input_ids():
        for dst in g.output_ids():
            w = float(rng.uniform(weight_low, weight_high)) if rng is not None else 0.0
            g.edges.append(EdgeGene(registry.edge_innovation(src, dst),
                                    src, dst, w))
    return g


def randomize_weights(genome: RnnGenome, rng: np.random.Generator,
                      low: float = -0.5, high: float = 0.5) -> None:
    """Fresh uniform weights for every learnable scalar, in place."""
    for e in genome.edges:
        e.weight = float(rng.uniform(low, high))
    for e in genome.recurrent_edges:
        e.weight = float(rng.uniform(low, high))
    for n in genome.nodes:
        if n.kind != INPUT:
            n.params = rng.uniform(low, high, n.params.shape)
