"""Structural mutation operators and Lamarckian crossover.

Every operator takes ``(genome, config, registry, rng)``, never mutates the
parent, and returns either a child passing :func:`evornn.genome.validate` or
None when the operator is not applicable or the result had to be discarded.
Children inherit their parents' trained weights; weights for newly created
elements are drawn from a normal distribution fitted to the parent's weight
population (mean and standard deviation), falling back to a uniform range
when the parent carries fewer than two weights.

Edge selection in operators that can act on either connection kind first
chooses the kind with probability proportional to how many enabled
connections of each kind exist (:func:`recurrent_probability`), then picks
uniformly inside the chosen kind; the combined effect is a uniform pick over
all enabled connections.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import cells
from .genome import (
    HIDDEN, INPUT, OUTPUT, EdgeGene, InnovationRegistry, NodeGene,
    RecurrentEdgeGene, RnnGenome, reachability_maps, validate,
)

MUTATION_OPERATORS = (
    "disable_edge", "enable_edge", "split_edge", "add_edge",
    "add_recurrent_edge", "add_node", "split_node", "merge_node",
    "enable_node", "disable_node", "clone",
)


def _default_mutation_weights() -> dict:
    # split_edge stays available but is switched off by default; clone is a
    # degenerate operator kept for experiments that want pure re-training.
    weights = {name: 1.0 for name in MUTATION_OPERATORS}
    weights["split_edge"] = 0.0
    weights["clone"] = 0.0
    return weights


@dataclass
class OperatorConfig:
    intra_crossover_rate: float = 0.2
    mutation_rate: float = 0.7
    inter_crossover_rate: float = 0.1
    mutation_weights: dict = field(default_factory=_default_mutation_weights)
    allowed_cell_types: tuple = tuple(range(len(cells.CELL_NAMES)))
    max_time_skip: int = 10
    crossover_low: float = -0.5
    crossover_high: float = 1.5
    weight_fallback_low: float = -0.5
    weight_fallback_high: float = 0.5
    max_retries: int = 32

    def __post_init__(self):
        rates = (self.intra_crossover_rate, self.mutation_rate,
                 self.inter_crossover_rate)
        if any(r < 0 for r in rates) or abs(sum(rates) - 1.0) > 1e-9:
            raise ValueError("generation-type rates must be >= 0 and sum to 1")
        unknown = set(self.mutation_weights) - set(MUTATION_OPERATORS)
        if unknown:
            raise ValueError(f"unknown mutation operators: {sorted(unknown)}")
        if any(w < 0 for w in self.mutation_weights.values()):
            raise ValueError("mutation weights must be non-negative")
        if not any(w > 0 for w in self.mutation_weights.values()):
            raise ValueError("at least one mutation operator must be enabled")
        if self.max_time_skip < 1:
            raise ValueError("max_time_skip must be at least 1")
        if not self.allowed_cell_types:
            raise ValueError("need at least one allowed cell type")
        for ct in self.allowed_cell_types:
            if not 0 <= ct < len(cells.CELL_NAMES):
                raise ValueError(f"unknown cell type code {ct}")
        if self.max_retries < 1:
            raise ValueError("max_retries must be at least 1")


def recurrent_probability(genome: RnnGenome) -> float:
    """Share of enabled connections that are recurrent; selecting the
    connection kind with this probability makes the overall edge pick
    uniform over the union of both kinds."""
    n_ff = sum(1 for e in genome.edges if e.enabled)
    n_rec = sum(1 for e in genome.recurrent_edges if e.enabled)
    if n_ff + n_rec == 0:
        return 0.0
    return n_rec / (n_ff + n_rec)


def _weight_distribution(genome: RnnGenome):
    vals = genome.all_weight_values()
    if vals.size < 2:
        return None
    return float(vals.mean()), float(vals.std())


def _draw_weight(rng, dist, config: OperatorConfig) -> float:
    if dist is None:
        return float(rng.uniform(config.weight_fallback_low,
                                 config.weight_fallback_high))
    mu, sigma = dist
    return mu + sigma * float(rng.standard_normal())


def _draw_params(rng, dist, config: OperatorConfig, cell_type: int) -> np.ndarray:
    return np.array([_draw_weight(rng, dist, config)
                     for _ in range(cells.param_count(cell_type))])


def _draw_cell_type(rng, config: OperatorConfig) -> int:
    types = config.allowed_cell_types
    return int(types[rng.integers(len(types))])


def _finish(child: RnnGenome, config: OperatorConfig):
    child.fitness = None
    if validate(child, config.max_time_skip):
        return None
    return child


def _sorted_nodes(nodes):
    return sorted(nodes, key=lambda n: (n.depth, n.innovation_id))


def disable_edge(genome: RnnGenome, config: OperatorConfig,
                 registry: InnovationRegistry, rng) -> RnnGenome | None:
    child = genome.copy()
    child.fresh_node_ids = ()
    ff = [e for e in child.edges if e.enabled]
    rec = [e for e in child.recurrent_edges if e.enabled]
    if not ff and not rec:
        return None
    pool = rec if rng.random() < recurrent_probability(genome) else ff
    pool[rng.integers(len(pool))].enabled = False
    return _finish(child, config)


def enable_edge(genome: RnnGenome, config: OperatorConfig,
                registry: InnovationRegistry, rng) -> RnnGenome | None:
    child = genome.copy()
    child.fresh_node_ids = ()
    pool = [e for e in child.edges if not e.enabled] + \
           [e for e in child.recurrent_edges if not e.enabled]
    if not pool:
        return None
    pool[rng.integers(len(pool))].enabled = True
    return _finish(child, config)


def split_edge(genome: RnnGenome, config: OperatorConfig,
               registry: InnovationRegistry, rng) -> RnnGenome | None:
    ff = [e for e in genome.edges if e.enabled]
    rec = [e for e in genome.recurrent_edges if e.enabled]
    if not ff and not rec:
        return None
    use_rec = rng.random() < recurrent_probability(genome)
    pool = rec if use_rec else ff
    edge = pool[rng.integers(len(pool))]
    nodes = genome.node_map()
    mid = (nodes[edge.source_id].depth + nodes[edge.target_id].depth) / 2.0
    if not 0.0 < mid < 1.0:
        return None     # splitting e.g. a self loop at the boundary depths
    child = genome.copy()
    dist = _weight_distribution(genome)
    cell_type = _draw_cell_type(rng, config)
    node = NodeGene(registry.node_innovation(), HIDDEN, cell_type, mid,
                    params=_draw_params(rng, dist, config, cell_type))
    child.nodes.append(node)
    nid = node.innovation_id
    if use_rec:
        for e in child.recurrent_edges:
            if e.innovation_id == edge.innovation_id:
                e.enabled = False
        # both halves keep the original time skip
        k = edge.time_skip
        child.recurrent_edges.append(RecurrentEdgeGene(
            registry.recurrent_innovation(edge.source_id, nid, k),
            edge.source_id, nid, k, _draw_weight(rng, dist, config)))
        child.recurrent_edges.append(RecurrentEdgeGene(
            registry.recurrent_innovation(nid, edge.target_id, k),
            nid, edge.target_id, k, _draw_weight(rng, dist, config)))
    else:
        for e in child.edges:
            if e.innovation_id == edge.innovation_id:
                e.enabled = False
        child.edges.append(EdgeGene(
            registry.edge_innovation(edge.source_id, nid),
            edge.source_id, nid, _draw_weight(rng, dist, config)))
        child.edges.append(EdgeGene(
            registry.edge_innovation(nid, edge.target_id),
            nid, edge.target_id, _draw_weight(rng, dist, config)))
    child.fresh_node_ids = (nid,)
    return _finish(child, config)


def add_edge(genome: RnnGenome, config: OperatorConfig,
             registry: InnovationRegistry, rng) -> RnnGenome | None:
    enabled = _sorted_nodes(n for n in genome.nodes if n.enabled)
    existing = {(e.source_id, e.target_id) for e in genome.edges}
    candidates = [(u.innovation_id, v.innovation_id)
                  for u in enabled for v in enabled
                  if u.depth < v.depth
                  and (u.innovation_id, v.innovation_id) not in existing]
    if not candidates:
        return None
    src, dst = candidates[rng.integers(len(candidates))]
    child = genome.copy()
    child.fresh_node_ids = ()
    child.edges.append(EdgeGene(
        registry.edge_innovation(src, dst), src, dst,
        _draw_weight(rng, _weight_distribution(genome), config)))
    return _finish(child, config)


def add_recurrent_edge(genome: RnnGenome, config: OperatorConfig,
                       registry: InnovationRegistry, rng) -> RnnGenome | None:
    enabled = _sorted_nodes(n for n in genome.nodes if n.enabled)
    sources = enabled
    targets = [n for n in enabled if n.kind != INPUT]
    used: dict = {}
    for e in genome.recurrent_edges:
        used.setdefault((e.source_id, e.target_id), set()).add(e.time_skip)
    candidates = []
    for u in sources:
        for v in targets:
            key = (u.innovation_id, v.innovation_id)
            if len(used.get(key, ())) < config.max_time_skip:
                candidates.append(key)
    if not candidates:
        return None
    src, dst = candidates[rng.integers(len(candidates))]
    free = sorted(set(range(1, config.max_time_skip + 1))
                  - used.get((src, dst), set()))
    skip = int(free[rng.integers(len(free))])
    child = genome.copy()
    child.fresh_node_ids = ()
    child.recurrent_edges.append(RecurrentEdgeGene(
        registry.recurrent_innovation(src, dst, skip), src, dst, skip,
        _draw_weight(rng, _weight_distribution(genome), config)))
    return _finish(child, config)


def _degree_stats(counts):
    if not counts:
        return 1.0, 0.0
    arr = np.array(counts, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


def _draw_count(rng, mu, sigma, lo, hi):
    n = int(np.rint(rng.normal(mu, sigma)))
    return max(lo, min(hi, n))


def add_node(genome: RnnGenome, config: OperatorConfig,
             registry: InnovationRegistry, rng) -> RnnGenome | None:
    depth = float(rng.uniform(0.0, 1.0))
    while not 0.0 < depth < 1.0:
        depth = float(rng.uniform(0.0, 1.0))
    enabled = _sorted_nodes(n for n in genome.nodes if n.enabled)
    lower = [n for n in enabled if n.depth < depth]
    upper = [n for n in enabled if n.depth > depth]
    if not lower or not upper:
        return None

    in_counts = []
    out_counts = []
    rec_counts = []
    ff_in: dict = {}
    ff_out: dict = {}
    rec_in: dict = {}
    for e in genome.edges:
        if e.enabled:
            ff_in[e.target_id] = ff_in.get(e.target_id, 0) + 1
            ff_out[e.source_id] = ff_out.get(e.source_id, 0) + 1
    for e in genome.recurrent_edges:
        if e.enabled:
            rec_in[e.target_id] = rec_in.get(e.target_id, 0) + 1
    for n in enabled:
        if n.kind != INPUT:
            in_counts.append(ff_in.get(n.innovation_id, 0))
            rec_counts.append(rec_in.get(n.innovation_id, 0))
        if n.kind != OUTPUT:
            out_counts.append(ff_out.get(n.innovation_id, 0))

    n_in = _draw_count(rng, *_degree_stats(in_counts), 1, len(lower))
    n_out = _draw_count(rng, *_degree_stats(out_counts), 1, len(upper))
    n_rec = _draw_count(rng, *_degree_stats(rec_counts), 0, len(enabled))

    dist = _weight_distribution(genome)
    cell_type = _draw_cell_type(rng, config)
    child = genome.copy()
    node = NodeGene(registry.node_innovation(), HIDDEN, cell_type, depth,
                    params=_draw_params(rng, dist, config, cell_type))
    child.nodes.append(node)
    nid = node.innovation_id
    for idx in rng.permutation(len(lower))[:n_in]:
        src = lower[int(idx)].innovation_id
        child.edges.append(EdgeGene(registry.edge_innovation(src, nid),
                                    src, nid, _draw_weight(rng, dist, config)))
    for idx in rng.permutation(len(upper))[:n_out]:
        dst = upper[int(idx)].innovation_id
        child.edges.append(EdgeGene(registry.edge_innovation(nid, dst),
                                    nid, dst, _draw_weight(rng, dist, config)))
    taken: dict = {}
    for _ in range(n_rec):
        src = enabled[rng.integers(len(enabled))].innovation_id
        free = sorted(set(range(1, config.max_time_skip + 1))
                      - taken.get(src, set()))
        if not free:
            continue
        skip = int(free[rng.integers(len(free))])
        taken.setdefault(src, set()).add(skip)
        child.recurrent_edges.append(RecurrentEdgeGene(
            registry.recurrent_innovation(src, nid, skip), src, nid, skip,
            _draw_weight(rng, dist, config)))
    child.fresh_node_ids = (nid,)
    return _finish(child, config)


def _partition_two_ways(items, rng):
    """Split items between two children so each child gets at least one;
    a single item goes to both.  Returns (for_first, for_second)."""
    if not items:
        return [], []
    if len(items) == 1:
        return [items[0]], [items[0]]
    order = [items[int(i)] for i in rng.permutation(len(items))]
    first = [order[0]]
    second = [order[1]]
    for item in order[2:]:
        (first if rng.random() < 0.5 else second).append(item)
    return first, second


def split_node(genome: RnnGenome, config: OperatorConfig,
               registry: InnovationRegistry, rng) -> RnnGenome | None:
    hidden = _sorted_nodes(n for n in genome.nodes
                           if n.enabled and n.kind == HIDDEN)
    if not hidden:
        return None
    target = hidden[rng.integers(len(hidden))]
    tid = target.innovation_id
    incoming = [("ff", e) for e in genome.edges
                if e.enabled and e.target_id == tid]
    incoming += [("rec", e) for e in genome.recurrent_edges
                 if e.enabled and e.target_id == tid and e.source_id != tid]
    outgoing = [("ff", e) for e in genome.edges
                if e.enabled and e.source_id == tid]
    outgoing += [("rec", e) for e in genome.recurrent_edges
                 if e.enabled and e.source_id == tid and e.target_id != tid]
    loops = [e for e in genome.recurrent_edges
             if e.enabled and e.source_id == tid and e.target_id == tid]

    child = genome.copy()
    child.node_by_id(tid).enabled = False
    for e in child.edges:
        if tid in (e.source_id, e.target_id):
            e.enabled = False
    for e in child.recurrent_edges:
        if tid in (e.source_id, e.target_id):
            e.enabled = False

    dist = _weight_distribution(genome)
    new_nodes = []
    for _ in range(2):
        ct = _draw_cell_type(rng, config)
        node = NodeGene(registry.node_innovation(), HIDDEN, ct, target.depth,
                        params=_draw_params(rng, dist, config, ct))
        child.nodes.append(node)
        new_nodes.append(node)
    a, b = new_nodes

    def attach(kind, e, node_id, as_incoming):
        src = e.source_id if as_incoming else node_id
        dst = node_id if as_incoming else e.target_id
        if kind == "ff":
            child.edges.append(EdgeGene(
                registry.edge_innovation(src, dst), src, dst, e.weight))
        else:
            child.recurrent_edges.append(RecurrentEdgeGene(
                registry.recurrent_innovation(src, dst, e.time_skip),
                src, dst, e.time_skip, e.weight))

    for_a, for_b = _partition_two_ways(incoming, rng)
    for kind, e in for_a:
        attach(kind, e, a.innovation_id, True)
    for kind, e in for_b:
        attach(kind, e, b.innovation_id, True)
    for_a, for_b = _partition_two_ways(outgoing, rng)
    for kind, e in for_a:
        attach(kind, e, a.innovation_id, False)
    for kind, e in for_b:
        attach(kind, e, b.innovation_id, False)
    for e in loops:
        owner = a if rng.random() < 0.5 else b
        oid = owner.innovation_id
        child.recurrent_edges.append(RecurrentEdgeGene(
            registry.recurrent_innovation(oid, oid, e.time_skip),
            oid, oid, e.time_skip, e.weight))
    child.fresh_node_ids = (a.innovation_id, b.innovation_id)
    return _finish(child, config)


def merge_node(genome: RnnGenome, config: OperatorConfig,
               registry: InnovationRegistry, rng) -> RnnGenome | None:
    hidden = _sorted_nodes(n for n in genome.nodes
                           if n.enabled and n.kind == HIDDEN)
    if len(hidden) < 2:
        return None
    i = int(rng.integers(len(hidden)))
    j = int(rng.integers(len(hidden) - 1))
    if j >= i:
        j += 1
    first, second = hidden[i], hidden[j]
    merged_ids = {first.innovation_id, second.innovation_id}
    depth = (first.depth + second.depth) / 2.0

    child = genome.copy()
    for nid in merged_ids:
        child.node_by_id(nid).enabled = False
    for e in child.edges:
        if e.source_id in merged_ids or e.target_id in merged_ids:
            e.enabled = False
    for e in child.recurrent_edges:
        if e.source_id in merged_ids or e.target_id in merged_ids:
            e.enabled = False

    dist = _weight_distribution(genome)
    ct = _draw_cell_type(rng, config)
    node = NodeGene(registry.node_innovation(), HIDDEN, ct, depth,
                    params=_draw_params(rng, dist, config, ct))
    child.nodes.append(node)
    mid = node.innovation_id

    depth_of = {n.innovation_id: n.depth for n in genome.nodes}
    depth_of[mid] = depth

    def relabel(nid):
        return mid if nid in merged_ids else nid

    seen_pairs = set()
    for e in sorted(genome.edges, key=lambda x: x.innovation_id):
        if not e.enabled:
            continue
        if e.source_id not in merged_ids and e.target_id not in merged_ids:
            continue
        src, dst = relabel(e.source_id), relabel(e.target_id)
        if src == dst or not depth_of[src] < depth_of[dst]:
            continue
        if (src, dst) in seen_pairs:
            continue
        seen_pairs.add((src, dst))
        child.edges.append(EdgeGene(registry.edge_innovation(src, dst),
                                    src, dst, e.weight))
    seen_triples = set()
    for e in sorted(genome.recurrent_edges, key=lambda x: x.innovation_id):
        if not e.enabled:
            continue
        if e.source_id not in merged_ids and e.target_id not in merged_ids:
            continue
        src, dst = relabel(e.source_id), relabel(e.target_id)
        key = (src, dst, e.time_skip)
        if key in seen_triples:
            continue
        seen_triples.add(key)
        child.recurrent_edges.append(RecurrentEdgeGene(
            registry.recurrent_innovation(src, dst, e.time_skip),
            src, dst, e.time_skip, e.weight))
    child.fresh_node_ids = (mid,)
    return _finish(child, config)


def enable_node(genome: RnnGenome, config: OperatorConfig,
                registry: InnovationRegistry, rng) -> RnnGenome | None:
    disabled = _sorted_nodes(n for n in genome.nodes if not n.enabled)
    if not disabled:
        return None
    nid = disabled[rng.integers(len(disabled))].innovation_id
    child = genome.copy()
    child.fresh_node_ids = ()
    child.node_by_id(nid).enabled = True
    for e in child.edges:
        if nid in (e.source_id, e.target_id):
            e.enabled = True
    for e in child.recurrent_edges:
        if nid in (e.source_id, e.target_id):
            e.enabled = True
    return _finish(child, config)


def disable_node(genome: RnnGenome, config: OperatorConfig,
                 registry: InnovationRegistry, rng) -> RnnGenome | None:
    pool = _sorted_nodes(n for n in genome.nodes
                         if n.enabled and n.kind != OUTPUT)
    if not pool:
        return None
    nid = pool[rng.integers(len(pool))].innovation_id
    child = genome.copy()
    child.fresh_node_ids = ()
    child.node_by_id(nid).enabled = False
    for e in child.edges:
        if nid in (e.source_id, e.target_id):
            e.enabled = False
    for e in child.recurrent_edges:
        if nid in (e.source_id, e.target_id):
            e.enabled = False
    return _finish(child, config)


def clone(genome: RnnGenome, config: OperatorConfig,
          registry: InnovationRegistry, rng) -> RnnGenome | None:
    child = genome.copy()
    child.fresh_node_ids = ()
    return _finish(child, config)


OPERATORS = {
    "disable_edge": disable_edge,
    "enable_edge": enable_edge,
    "split_edge": split_edge,
    "add_edge": add_edge,
    "add_recurrent_edge": add_recurrent_edge,
    "add_node": add_node,
    "split_node": split_node,
    "merge_node": merge_node,
    "enable_node": enable_node,
    "disable_node": disable_node,
    "clone": clone,
}


def _carried_elements(genome: RnnGenome):
    """Elements crossover transfers from one parent: all input and output
    nodes, reachable hidden nodes, reachable enabled connections, and
    disabled connections whose endpoints are both carried."""
    fwd, back = reachability_maps(genome)
    nodes = {}
    for n in genome.nodes:
        if n.kind in (INPUT, OUTPUT) or \
                (n.innovation_id in fwd and n.innovation_id in back):
            nodes[n.innovation_id] = n
    edges = {}
    for e in genome.edges:
        if e.enabled:
            if e.source_id in fwd and e.target_id in back:
                edges[e.innovation_id] = e
        elif e.source_id in nodes and e.target_id in nodes:
            edges[e.innovation_id] = e
    rec = {}
    for e in genome.recurrent_edges:
        if e.enabled:
            if e.source_id in fwd and e.target_id in back:
                rec[e.innovation_id] = e
        elif e.source_id in nodes and e.target_id in nodes:
            rec[e.innovation_id] = e
    return nodes, edges, rec


def crossover(more_fit: RnnGenome, less_fit: RnnGenome,
              config: OperatorConfig, rng,
              visit_counter: list | None = None) -> RnnGenome | None:
    """Recombine two parents by innovation-id alignment.

    Elements present in both parents interpolate their weights with one
    shared draw r ~ U[crossover_low, crossover_high] per element:
    ``w = r * (w_less - w_more) + w_more``, so r=0 reproduces the more fit
    parent and r=1 the less fit one.  Elements present in one parent are
    copied verbatim.  Enabled flags disagreeing between parents follow the
    more fit parent.  Work is linear in the combined parent size;
    ``visit_counter`` (a one-element list) counts element visits when the
    caller wants to assert that bound.
    """
    def tick(n=1):
        if visit_counter is not None:
            visit_counter[0] += n

    nodes1, edges1, rec1 = _carried_elements(more_fit)
    nodes2, edges2, rec2 = _carried_elements(less_fit)
    tick(len(more_fit.nodes) + len(more_fit.edges) + len(more_fit.recurrent_edges))
    tick(len(less_fit.nodes) + len(less_fit.edges) + len(less_fit.recurrent_edges))

    child = RnnGenome()
    lo, hi = config.crossover_low, config.crossover_high
    for nid in sorted(set(nodes1) | set(nodes2)):
        tick()
        g1 = nodes1.get(nid)
        g2 = nodes2.get(nid)
        if g1 is not None and g2 is not None:
            node = g1.copy()
            r = float(rng.uniform(lo, hi))
            node.params = r * (g2.params - g1.params) + g1.params
            node.enabled = g1.enabled
        else:
            node = (g1 or g2).copy()
        child.nodes.append(node)
    node_ids = {n.innovation_id for n in child.nodes}

    for eid in sorted(set(edges1) | set(edges2)):
        tick()
        g1 = edges1.get(eid)
        g2 = edges2.get(eid)
        if g1 is not None and g2 is not None:
            edge = g1.copy()
            r = float(rng.uniform(lo, hi))
            edge.weight = r * (g2.weight - g1.weight) + g1.weight
            edge.enabled = g1.enabled
        else:
            edge = (g1 or g2).copy()
        if edge.source_id in node_ids and edge.target_id in node_ids:
            child.edges.append(edge)
    for rid in sorted(set(rec1) | set(rec2)):
        tick()
        g1 = rec1.get(rid)
        g2 = rec2.get(rid)
        if g1 is not None and g2 is not None:
            edge = g1.copy()
            r = float(rng.uniform(lo, hi))
            edge.weight = r * (g2.weight - g1.weight) + g1.weight
            edge.enabled = g1.enabled
        else:
            edge = (g1 or g2).copy()
        if edge.source_id in node_ids and edge.target_id in node_ids:
            child.recurrent_edges.append(edge)

    child.fresh_node_ids = ()
    return _finish(child, config)


@dataclass
class GenerationResult:
    child: RnnGenome
    kind: str                  # mutation | intra_crossover | inter_crossover
    operator: str | None = None


def _order_parents(a: RnnGenome, b: RnnGenome):
    def key(g):
        fit = g.fitness if g.fitness is not None else float("inf")
        return (fit, g.generation_id)
    return (a, b) if key(a) <= key(b) else (b, a)


def draw_mutation_operator(rng, config: OperatorConfig) -> str:
    names = [n for n in MUTATION_OPERATORS if config.mutation_weights.get(n, 0.0) > 0]
    weights = np.array([config.mutation_weights[n] for n in names])
    u = float(rng.random()) * float(weights.sum())
    acc = 0.0
    for name, w in zip(names, weights):
        acc += w
        if u < acc:
            return name
    return names[-1]


def generate_child(islands: list, island_idx: int, config: OperatorConfig,
                   registry: InnovationRegistry, rng) -> GenerationResult | None:
    """Produce one candidate for an island out of the current populations.

    ``islands`` is a list of member lists sorted best first.  The generation
    type is drawn once from the configured mix, restricted to what the
    population state allows (intra-island crossover needs two members,
    inter-island crossover another non-empty island); then the chosen route
    is retried up to ``config.max_retries`` times before giving up.
    """
    target = islands[island_idx]
    if not target:
        return None
    others = [i for i in range(len(islands))
              if i != island_idx and islands[i]]
    # probabilities of infeasible generation types fold into mutation
    w_intra = config.intra_crossover_rate if len(target) >= 2 else 0.0
    w_inter = config.inter_crossover_rate if others else 0.0
    w_mut = 1.0 - w_intra - w_inter
    u = float(rng.random())
    if u < w_intra:
        kind = "intra_crossover"
    elif u < w_intra + w_mut:
        kind = "mutation"
    else:
        kind = "inter_crossover"

    for _ in range(config.max_retries):
        if kind == "mutation":
            parent = target[rng.integers(len(target))]
            name = draw_mutation_operator(rng, config)
            child = OPERATORS[name](parent, config, registry, rng)
            if child is not None:
                return GenerationResult(child, kind, name)
        elif kind == "intra_crossover":
            i = int(rng.integers(len(target)))
            j = int(rng.integers(len(target) - 1))
            if j >= i:
                j += 1
            fit, less = _order_parents(target[i], target[j])
            child = crossover(fit, less, config, rng)
            if child is not None:
                return GenerationResult(child, kind)
        else:
            parent = target[rng.integers(len(target))]
            # best genome across all other islands (lists are sorted best
            # first, so only the heads compete)
            other = min((islands[i][0] for i in others),
                        key=lambda g: (g.fitness if g.fitness is not None
                                       else float("inf"), g.generation_id))
            fit, less = _order_parents(parent, other)
            child = crossover(fit, less, config, rng)
            if child is not None:
                return GenerationResult(child, kind)
    return None
