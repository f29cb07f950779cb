"""Genome persistence: a versioned binary format and a readable text dump.

The binary layout is fixed little-endian struct packing, so equal genomes
always serialize to identical bytes; tests and the replay machinery rely on
that to fingerprint populations.
"""

from __future__ import annotations

import hashlib
import io
import struct

import numpy as np

from . import cells
from .genome import EdgeGene, NodeGene, RecurrentEdgeGene, RnnGenome

MAGIC = b"RNNG"
FORMAT_VERSION = 1

_KIND_CODES = {"input": 0, "hidden": 1, "output": 2}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}


class GenomeDecodeError(ValueError):
    def __init__(self, offset: int, reason: str):
        super().__init__(f"corrupt genome data at byte {offset}: {reason}")
        self.offset = offset
        self.reason = reason


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.data):
            raise GenomeDecodeError(self.pos, "unexpected end of data")
        vals = struct.unpack_from(fmt, self.data, self.pos)
        self.pos += size
        return vals


def serialize_genome(genome: RnnGenome) -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<H", FORMAT_VERSION))
    has_fitness = genome.fitness is not None
    buf.write(struct.pack("<Bdqi", int(has_fitness),
                          genome.fitness if has_fitness else 0.0,
                          genome.generation_id, genome.island))
    buf.write(struct.pack("<I", len(genome.fresh_node_ids)))
    for nid in genome.fresh_node_ids:
        buf.write(struct.pack("<q", nid))
    buf.write(struct.pack("<III", len(genome.nodes), len(genome.edges),
                          len(genome.recurrent_edges)))
    for n in genome.nodes:
        buf.write(struct.pack("<qBBdBH", n.innovation_id,
                              _KIND_CODES[n.kind], n.cell_type, n.depth,
                              int(n.enabled), n.params.size))
        buf.write(struct.pack(f"<{n.params.size}d", *n.params.tolist()))
    for e in genome.edges:
        buf.write(struct.pack("<qqqdB", e.innovation_id, e.source_id,
                              e.target_id, e.weight, int(e.enabled)))
    for e in genome.recurrent_edges:
        buf.write(struct.pack("<qqqHdB", e.innovation_id, e.source_id,
                              e.target_id, e.time_skip, e.weight,
                              int(e.enabled)))
    return buf.getvalue()


def deserialize_genome(data: bytes) -> RnnGenome:
    r = _Reader(data)
    magic, = r.take("<4s")
    if magic != MAGIC:
        raise GenomeDecodeError(0, "bad magic, not a genome file")
    version, = r.take("<H")
    if version != FORMAT_VERSION:
        raise GenomeDecodeError(4, f"unsupported format version {version}")
    has_fitness, fitness, generation_id, island = r.take("<Bdqi")
    n_fresh, = r.take("<I")
    fresh = tuple(r.take("<q")[0] for _ in range(n_fresh))
    n_nodes, n_edges, n_rec = r.take("<III")
    g = RnnGenome(fitness=fitness if has_fitness else None,
                  generation_id=generation_id, island=island,
                  fresh_node_ids=fresh)
    for _ in range(n_nodes):
        nid, kind_code, cell_type, depth, enabled, n_params = r.take("<qBBdBH")
        if kind_code not in _KIND_NAMES:
            raise GenomeDecodeError(r.pos, f"unknown node kind code {kind_code}")
        if not 0 <= cell_type < len(cells.CELL_NAMES):
            raise GenomeDecodeError(r.pos, f"unknown cell type code {cell_type}")
        if n_params != cells.param_count(cell_type):
            raise GenomeDecodeError(
                r.pos, f"parameter count {n_params} does not match cell type")
        params = np.array(r.take(f"<{n_params}d"))
        g.nodes.append(NodeGene(nid, _KIND_NAMES[kind_code], cell_type,
                                depth, bool(enabled), params))
    for _ in range(n_edges):
        eid, src, dst, weight, enabled = r.take("<qqqdB")
        g.edges.append(EdgeGene(eid, src, dst, weight, bool(enabled)))
    for _ in range(n_rec):
        eid, src, dst, skip, weight, enabled = r.take("<qqqHdB")
        g.recurrent_edges.append(
            RecurrentEdgeGene(eid, src, dst, skip, weight, bool(enabled)))
    if r.pos != len(data):
        raise GenomeDecodeError(r.pos, "trailing bytes after genome")
    return g


def save_genome(genome: RnnGenome, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_genome(genome))


def load_genome(path) -> RnnGenome:
    with open(path, "rb") as fh:
        return deserialize_genome(fh.read())


def genome_fingerprint(genome: RnnGenome) -> str:
    """Content hash; equal genomes (structure, weights, metadata) collide."""
    return hashlib.sha256(serialize_genome(genome)).hexdigest()


def dump_genome(genome: RnnGenome) -> str:
    """Human-readable description, one line per gene."""
    lines = []
    fit = "unevaluated" if genome.fitness is None else repr(genome.fitness)
    lines.append(f"genome fitness={fit} generation={genome.generation_id} "
                 f"island={genome.island}")
    for n in sorted(genome.nodes, key=lambda x: (x.depth, x.innovation_id)):
        params = " ".join(f"{name}={value!r}" for name, value in
                          zip(cells.PARAM_NAMES[n.cell_type], n.params))
        flag = "on" if n.enabled else "off"
        lines.append(f"  node {n.innovation_id} {n.kind} "
                     f"{cells.CELL_NAMES[n.cell_type]} depth={n.depth!r} "
                     f"{flag} {params}")
    for e in sorted(genome.edges, key=lambda x: x.innovation_id):
        flag = "on" if e.enabled else "off"
        lines.append(f"  edge {e.innovation_id} {e.source_id}->{e.target_id} "
                     f"w={e.weight!r} {flag}")
    for e in sorted(genome.recurrent_edges, key=lambda x: x.innovation_id):
        flag = "on" if e.enabled else "off"
        lines.append(f"  recurrent {e.innovation_id} "
                     f"{e.source_id}->{e.target_id} skip={e.time_skip} "
                     f"w={e.weight!r} {flag}")
    return "\n".join(lines) + "\n"
