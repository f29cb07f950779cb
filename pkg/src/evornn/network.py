"""Compilation of a genome graph into flat arrays the kernels can run.

Enabled nodes are laid out in evaluation order (depth, then innovation id),
which is a topological order for feed-forward edges.  Edges are grouped by
target node in CSR form.  Every trainable scalar lives in one flat float64
vector: feed-forward edge weights first (innovation-id order), then
recurrent edge weights (innovation-id order), then the parameter blocks of
enabled non-input nodes (evaluation order).  Disabled elements, edges with a
disabled endpoint, and input-node parameter blocks are excluded and left
untouched by training.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import cells
from .genome import INPUT, RnnGenome


@dataclass
class CompiledNetwork:
    n_nodes: int
    n_columns: int            # width of the input matrix (all input nodes)
    n_outputs: int
    cell_code: np.ndarray     # [n] int64
    is_input: np.ndarray      # [n] uint8
    input_col: np.ndarray     # [n] int64, -1 for non-inputs
    param_off: np.ndarray     # [n] int64, -1 for untrained blocks
    param_len: np.ndarray     # [n] int64
    ff_ptr: np.ndarray        # [n+1] CSR row pointers by target node
    ff_src: np.ndarray        # compiled index of each edge source
    ff_widx: np.ndarray       # weight-vector slot of each edge
    rec_ptr: np.ndarray
    rec_src: np.ndarray
    rec_skip: np.ndarray
    rec_widx: np.ndarray
    output_idx: np.ndarray    # compiled indices of output nodes
    weights: np.ndarray       # initial weight vector (copy of genome values)
    ff_gene_idx: list         # genome.edges positions per weight slot
    rec_gene_idx: list
    param_node_idx: list      # (genome.nodes position, offset) per block

    @property
    def n_weights(self) -> int:
        return self.weights.size


def compile_network(genome: RnnGenome) -> CompiledNetwork:
    order = sorted(
        (i for i, n in enumerate(genome.nodes) if n.enabled),
        key=lambda i: (genome.nodes[i].depth, genome.nodes[i].innovation_id))
    compiled_of = {genome.nodes[i].innovation_id: j
                   for j, i in enumerate(order)}
    n = len(order)
    columns = genome.input_ids()
    col_of = {nid: c for c, nid in enumerate(columns)}

    cell_code = np.zeros(n, dtype=np.int64)
    is_input = np.zeros(n, dtype=np.uint8)
    input_col = np.full(n, -1, dtype=np.int64)
    param_off = np.full(n, -1, dtype=np.int64)
    param_len = np.zeros(n, dtype=np.int64)

    ff = [(e.innovation_id, i) for i, e in enumerate(genome.edges)
          if e.enabled and e.source_id in compiled_of
          and e.target_id in compiled_of]
    ff.sort()
    rec = [(e.innovation_id, i) for i, e in enumerate(genome.recurrent_edges)
           if e.enabled and e.source_id in compiled_of
           and e.target_id in compiled_of]
    rec.sort()

    weights = []
    ff_gene_idx = []
    for _, gi in ff:
        ff_gene_idx.append(gi)
        weights.append(genome.edges[gi].weight)
    rec_gene_idx = []
    for _, gi in rec:
        rec_gene_idx.append(gi)
        weights.append(genome.recurrent_edges[gi].weight)

    param_node_idx = []
    for j, i in enumerate(order):
        node = genome.nodes[i]
        cell_code[j] = node.cell_type
        param_len[j] = node.params.size
        if node.kind == INPUT:
            is_input[j] = 1
            input_col[j] = col_of[node.innovation_id]
        else:
            param_off[j] = len(weights)
            param_node_idx.append((i, len(weights)))
            weights.extend(node.params.tolist())

    by_target_ff = [[] for _ in range(n)]
    for slot, (_, gi) in enumerate(ff):
        e = genome.edges[gi]
        by_target_ff[compiled_of[e.target_id]].append(
            (compiled_of[e.source_id], slot))
    by_target_rec = [[] for _ in range(n)]
    for slot, (_, gi) in enumerate(rec):
        e = genome.recurrent_edges[gi]
        by_target_rec[compiled_of[e.target_id]].append(
            (compiled_of[e.source_id], e.time_skip, len(ff) + slot))

    ff_ptr = np.zeros(n + 1, dtype=np.int64)
    ff_src = np.zeros(len(ff), dtype=np.int64)
    ff_widx = np.zeros(len(ff), dtype=np.int64)
    pos = 0
    for j in range(n):
        ff_ptr[j] = pos
        for src, slot in by_target_ff[j]:
            ff_src[pos] = src
            ff_widx[pos] = slot
            pos += 1
    ff_ptr[n] = pos

    rec_ptr = np.zeros(n + 1, dtype=np.int64)
    rec_src = np.zeros(len(rec), dtype=np.int64)
    rec_skip = np.zeros(len(rec), dtype=np.int64)
    rec_widx = np.zeros(len(rec), dtype=np.int64)
    pos = 0
    for j in range(n):
        rec_ptr[j] = pos
        for src, skip, slot in by_target_rec[j]:
            rec_src[pos] = src
            rec_skip[pos] = skip
            rec_widx[pos] = slot
            pos += 1
    rec_ptr[n] = pos

    output_idx = np.array(
        sorted(compiled_of[nid] for nid in genome.output_ids()
               if nid in compiled_of),
        dtype=np.int64)

    return CompiledNetwork(
        n_nodes=n, n_columns=len(columns), n_outputs=output_idx.size,
        cell_code=cell_code, is_input=is_input, input_col=input_col,
        param_off=param_off, param_len=param_len,
        ff_ptr=ff_ptr, ff_src=ff_src, ff_widx=ff_widx,
        rec_ptr=rec_ptr, rec_src=rec_src, rec_skip=rec_skip,
        rec_widx=rec_widx, output_idx=output_idx,
        weights=np.array(weights, dtype=np.float64),
        ff_gene_idx=ff_gene_idx, rec_gene_idx=rec_gene_idx,
        param_node_idx=param_node_idx)


def write_back(net: CompiledNetwork, genome: RnnGenome,
               weights: np.ndarray) -> None:
    """Store a trained weight vector back into the genome's genes."""
    if weights.shape != (net.n_weights,):
        raise ValueError("weight vector does not match compiled network")
    n_ff = len(net.ff_gene_idx)
    for slot, gi in enumerate(net.ff_gene_idx):
        genome.edges[gi].weight = float(weights[slot])
    for slot, gi in enumerate(net.rec_gene_idx):
        genome.recurrent_edges[gi].weight = float(weights[n_ff + slot])
    for node_pos, off in net.param_node_idx:
        node = genome.nodes[node_pos]
        node.params[:] = weights[off:off + node.params.size]
