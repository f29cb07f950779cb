"""Per-run statistics, aggregation tables, rankings, and trajectories.

One evolutionary run produces a RunStats record: the best validation MSE and
the structure counts of the best genome.  Records group by run type (which
cell types were allowed) and aggregate into min/avg/max tables with Pearson
correlations of each structure count against the MSE, plus rankings by
standard deviations from the across-type mean.
"""

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import cells
from .islands import parse_event

STRUCTURE_KEYS = ("enabled_edges", "enabled_recurrent_edges", "hidden_nodes")
CELL_COUNT_KEYS = tuple(f"nodes_{name}" for name in cells.CELL_NAMES)
METRIC_KEYS = STRUCTURE_KEYS + CELL_COUNT_KEYS


@dataclass
class RunStats:
    """Outcome summary of one run: provenance, fitness, structure counts."""

    run_type: str
    fold: int
    repeat: int
    seed: int
    best_mse: float
    enabled_edges: int
    enabled_recurrent_edges: int
    hidden_nodes: int
    cell_counts: dict = field(default_factory=dict)

    def metric(self, key: str) -> float:
        if key == "best_mse":
            return self.best_mse
        if key in STRUCTURE_KEYS:
            return getattr(self, key)
        if key in CELL_COUNT_KEYS:
            return self.cell_counts[key.removeprefix("nodes_")]
        raise KeyError(key)


def genome_structure_counts(genome) -> dict:
    """Enabled-element counts of one genome, keyed like RunStats fields."""
    enabled_nodes = [n for n in genome.nodes if n.enabled]
    hidden = [n for n in enabled_nodes if n.kind == "hidden"]
    counts = {name: 0 for name in cells.CELL_NAMES}
    for n in hidden:
        counts[cells.CELL_NAMES[n.cell_type]] += 1
    return {
        "enabled_edges": sum(1 for e in genome.edges if e.enabled),
        "enabled_recurrent_edges": sum(1 for e in genome.recurrent_edges
                                       if e.enabled),
        "hidden_nodes": len(hidden),
        "cell_counts": counts,
    }


def stats_from_report(report, run_type: str, fold: int, repeat: int) -> RunStats:
    """Build the RunStats record for one finished run report."""
    if report.best is None:
        raise ValueError("run produced no evaluated genome")
    s = genome_structure_counts(report.best)
    return RunStats(
        run_type=run_type,
        fold=fold,
        repeat=repeat,
        seed=report.seed,
        best_mse=float(report.best.fitness),
        enabled_edges=s["enabled_edges"],
        enabled_recurrent_edges=s["enabled_recurrent_edges"],
        hidden_nodes=s["hidden_nodes"],
        cell_counts=s["cell_counts"],
    )


def stats_to_json(stats: RunStats) -> str:
    return json.dumps(asdict(stats), sort_keys=True, separators=(",", ":"))


def stats_from_json(text: str) -> RunStats:
    payload = json.loads(text)
    return RunStats(**payload)


def save_run_stats(path, stats: RunStats) -> None:
    Path(path).write_text(stats_to_json(stats) + "\n", encoding="utf-8")


def load_run_stats(path) -> RunStats:
    return stats_from_json(Path(path).read_text(encoding="utf-8"))


def pearson(xs, ys):
    """Sample Pearson correlation; None when undefined (short or constant)."""
    xs = [float(x) for x in xs]
    ys = [float(y) for y in ys]
    if len(xs) != len(ys):
        raise ValueError("pearson needs equally long sequences")
    n = len(xs)
    if n < 2:
        return None
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    sxy = 0.0
    sxx = 0.0
    syy = 0.0
    for x, y in zip(xs, ys):
        dx = x - mean_x
        dy = y - mean_y
        sxy += dx * dy
        sxx += dx * dx
        syy += dy * dy
    if sxx == 0.0 or syy == 0.0:
        return None
    return sxy / math.sqrt(sxx * syy)


def _min_avg_max(values):
    return (min(values), sum(values) / len(values), max(values))


@dataclass
class AggregateRow:
    """Table row for one run type: spread of MSE and of each count, with
    each count's correlation against MSE."""

    run_type: str
    n_runs: int
    mse: tuple
    metrics: dict      # key -> (min, avg, max, corr-vs-mse or None)


@dataclass
class AggregateReport:
    rows: list

    def row(self, run_type: str) -> AggregateRow:
        for r in self.rows:
            if r.run_type == run_type:
                return r
        raise KeyError(run_type)


def aggregate(stats_list) -> AggregateReport:
    """Group RunStats by run type, preserving first-seen order."""
    if not stats_list:
        raise ValueError("no run statistics to aggregate")
    groups = {}
    for s in stats_list:
        groups.setdefault(s.run_type, []).append(s)
    rows = []
    for run_type, group in groups.items():
        mses = [s.best_mse for s in group]
        metrics = {}
        for key in METRIC_KEYS:
            values = [s.metric(key) for s in group]
            lo, avg, hi = _min_avg_max(values)
            metrics[key] = (lo, avg, hi, pearson(values, mses))
        rows.append(AggregateRow(run_type, len(group),
                                 _min_avg_max(mses), metrics))
    return AggregateReport(rows)


def deviation_scores(metrics: dict, sample: bool = True) -> dict:
    """Z-score of each run type's metric against the across-type spread.

    All-equal metrics (zero standard deviation) score 0 for every type.
    """
    if len(metrics) < 2:
        raise ValueError("need at least two run types to score deviations")
    values = list(metrics.values())
    n = len(values)
    mean = sum(values) / n
    ddof = 1 if sample else 0
    var = sum((v - mean) ** 2 for v in values) / (n - ddof)
    std = math.sqrt(var)
    if std == 0.0:
        return {t: 0.0 for t in metrics}
    return {t: (v - mean) / std for t, v in metrics.items()}


def deviation_ranking(tables: dict, sample: bool = True) -> list:
    """Rank run types by mean z-score across parameter tables, ascending.

    ``tables`` maps parameter name -> {run_type -> metric}; every table must
    cover the same run types.  More negative combined scores (further below
    the mean) rank better; ties keep the first table's type order.
    """
    if not tables:
        raise ValueError("no tables to rank")
    first = next(iter(tables.values()))
    types = list(first)
    for name, table in tables.items():
        if set(table) != set(types):
            raise ValueError(f"table {name!r} covers different run types")
    combined = {t: 0.0 for t in types}
    for table in tables.values():
        scores = deviation_scores({t: table[t] for t in types}, sample)
        for t in types:
            combined[t] += scores[t]
    n = len(tables)
    result = [(t, combined[t] / n) for t in types]
    result.sort(key=lambda pair: pair[1])
    return result


def _fmt_value(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_tables(report: AggregateReport, out_dir) -> tuple:
    """Write the aggregate as a machine-readable CSV and a readable text
    table; returns both paths."""
    if not report.rows:
        raise ValueError("empty aggregate report")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "tables.csv"
    txt_path = out_dir / "tables.txt"

    header = ["run_type", "n_runs", "metric", "min", "avg", "max", "corr"]
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in report.rows:
            lo, avg, hi = row.mse
            writer.writerow([row.run_type, row.n_runs, "best_mse",
                             repr(lo), repr(avg), repr(hi), "-"])
            for key in METRIC_KEYS:
                lo, avg, hi, corr = row.metrics[key]
                writer.writerow([row.run_type, row.n_runs, key,
                                 _fmt_value(float(lo)), _fmt_value(float(avg)),
                                 _fmt_value(float(hi)), _fmt_value(corr)])

    with open(txt_path, "w", encoding="utf-8") as fh:
        for row in report.rows:
            fh.write(f"run type: {row.run_type} ({row.n_runs} runs)\n")
            lo, avg, hi = row.mse
            fh.write(f"  {'best_mse':<26} min={lo:.6g} avg={avg:.6g} "
                     f"max={hi:.6g}\n")
            for key in METRIC_KEYS:
                lo, avg, hi, corr = row.metrics[key]
                corr_s = "-" if corr is None else f"{corr:+.4f}"
                fh.write(f"  {key:<26} min={lo:.6g} avg={avg:.6g} "
                         f"max={hi:.6g} corr={corr_s}\n")
            fh.write("\n")
    return csv_path, txt_path


def parse_tables_csv(path) -> AggregateReport:
    """Rebuild an AggregateReport from its CSV rendering."""
    rows = {}
    order = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            run_type = rec["run_type"]
            if run_type not in rows:
                rows[run_type] = AggregateRow(run_type, int(rec["n_runs"]),
                                              None, {})
                order.append(run_type)
            corr = None if rec["corr"] == "-" else float(rec["corr"])
            triple = (float(rec["min"]), float(rec["avg"]), float(rec["max"]))
            if rec["metric"] == "best_mse":
                rows[run_type].mse = triple
            else:
                rows[run_type].metrics[rec["metric"]] = triple + (corr,)
    return AggregateReport([rows[t] for t in order])


def trajectory(events) -> list:
    """(evaluated_count, global best MSE) after every insertion, plus a
    final row at the end of the run."""
    rows = []
    evaluated = 0
    best = float("inf")
    for line in events:
        name, fields = parse_event(line)
        if name == "evaluated":
            evaluated += 1
        elif name == "inserted":
            fitness = float(fields["fitness"])
            if fitness < best:
                best = fitness
            rows.append((evaluated, best))
    rows.append((evaluated, best))
    return rows


def write_trajectory(path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("evaluated,best_mse\n")
        for evaluated, best in rows:
            fh.write(f"{evaluated},{repr(best)}\n")
