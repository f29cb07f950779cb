"""Tests for run statistics: correlation, aggregation, rankings,
trajectories."""

import math

import numpy as np
import pytest

from oracles import ref_mean_std, ref_pearson

from evornn.genome import InnovationRegistry, seed_genome
from evornn.islands import (EvolutionSettings, best_genome, insert_result,
                            new_run_state, next_work, write_event_log)
from evornn.stats import (AggregateReport, RunStats, aggregate,
                          deviation_ranking, deviation_scores, emit_tables,
                          genome_structure_counts, load_run_stats,
                          parse_tables_csv, pearson, save_run_stats,
                          stats_from_json, stats_to_json, trajectory,
                          write_trajectory)


def make_stats(run_type="all", fold=0, repeat=0, mse=0.5, edges=4, rec=1,
               hidden=2, counts=None):
    cc = {"simple": 0, "delta": 0, "gru": 0, "lstm": 0, "mgu": 0, "ugrnn": 0}
    if counts:
        cc.update(counts)
    return RunStats(run_type=run_type, fold=fold, repeat=repeat, seed=7,
                    best_mse=mse, enabled_edges=edges,
                    enabled_recurrent_edges=rec, hidden_nodes=hidden,
                    cell_counts=cc)


def test_pearson_matches_reference_on_random_draws():
    rng = np.random.default_rng(11)
    for _ in range(400):
        n = int(rng.integers(2, 40))
        xs = rng.normal(scale=rng.uniform(0.1, 100.0), size=n).tolist()
        ys = rng.normal(scale=rng.uniform(0.1, 100.0), size=n).tolist()
        got = pearson(xs, ys)
        want = ref_pearson(xs, ys)
        assert got is not None and want is not None
        assert abs(got - want) < 1e-12
        assert -1.0 - 1e-12 <= got <= 1.0 + 1e-12


def test_pearson_exact_on_dyadic_values():
    # Dyadic rationals with a power-of-two count keep every intermediate
    # sum exactly representable, so both implementations must agree to the
    # last bit.
    xs = [0.5, 1.25, -0.75, 2.0]
    ys = [1.0, 0.25, 0.5, -1.5]
    assert pearson(xs, ys) == ref_pearson(xs, ys)


def test_pearson_perfect_correlation():
    xs = [0.25, 1.5, -2.0, 0.75, 3.0]
    assert pearson(xs, xs) == 1.0
    assert pearson(xs, [-x for x in xs]) == -1.0
    # Any positive affine image correlates perfectly too.
    ys = [2.0 * x + 3.0 for x in xs]
    assert abs(pearson(xs, ys) - 1.0) < 1e-15


def test_pearson_undefined_cases():
    assert pearson([1.0], [2.0]) is None
    assert pearson([], []) is None
    assert pearson([3.0, 3.0, 3.0], [1.0, 2.0, 3.0]) is None
    assert pearson([1.0, 2.0, 3.0], [5.0, 5.0, 5.0]) is None
    with pytest.raises(ValueError):
        pearson([1.0, 2.0], [1.0])


def test_deviation_scores_two_types():
    scores = deviation_scores({"a": 1.0, "b": 3.0})
    root_half = 1.0 / math.sqrt(2.0)
    assert abs(scores["a"] + root_half) < 1e-12
    assert abs(scores["b"] - root_half) < 1e-12


def test_deviation_scores_match_reference_std():
    rng = np.random.default_rng(5)
    for _ in range(100):
        n = int(rng.integers(2, 12))
        values = rng.normal(size=n).tolist()
        metrics = {f"t{i}": v for i, v in enumerate(values)}
        for sample in (True, False):
            scores = deviation_scores(metrics, sample=sample)
            mean, std = ref_mean_std(values, ddof=1 if sample else 0)
            for i, v in enumerate(values):
                assert abs(scores[f"t{i}"] - (v - mean) / std) < 1e-9


def test_deviation_scores_all_equal():
    scores = deviation_scores({"a": 2.0, "b": 2.0, "c": 2.0})
    assert scores == {"a": 0.0, "b": 0.0, "c": 0.0}
    with pytest.raises(ValueError):
        deviation_scores({"a": 1.0})


def test_deviation_ranking_ascending_and_stable():
    tables = {
        "best": {"x": 2.0, "y": 1.0, "z": 3.0},
        "avg": {"x": 2.5, "y": 1.5, "z": 3.5},
    }
    ranking = deviation_ranking(tables)
    assert [t for t, _ in ranking] == ["y", "x", "z"]
    assert ranking[0][1] < ranking[1][1] < ranking[2][1]
    # All-equal tables give zero for everyone in the original order.
    flat = {"p1": {"a": 1.0, "b": 1.0, "c": 1.0},
            "p2": {"a": 4.0, "b": 4.0, "c": 4.0}}
    ranking = deviation_ranking(flat)
    assert ranking == [("a", 0.0), ("b", 0.0), ("c", 0.0)]


def test_deviation_ranking_affine_invariant():
    rng = np.random.default_rng(3)
    types = [f"t{i}" for i in range(6)]
    base = {p: {t: float(rng.normal()) for t in types}
            for p in ("best", "avg", "worst")}
    shifted = {p: {t: 7.5 * v - 2.0 for t, v in table.items()}
               for p, table in base.items()}
    r0 = deviation_ranking(base)
    r1 = deviation_ranking(shifted)
    assert [t for t, _ in r0] == [t for t, _ in r1]
    for (_, s0), (_, s1) in zip(r0, r1):
        assert abs(s0 - s1) < 1e-9


def test_deviation_ranking_errors():
    with pytest.raises(ValueError):
        deviation_ranking({})
    with pytest.raises(ValueError):
        deviation_ranking({"a": {"x": 1.0, "y": 2.0}, "b": {"x": 1.0}})


def test_aggregate_hand_values():
    stats = [
        make_stats("gru", fold=0, mse=0.25, edges=4, rec=1, hidden=2,
                   counts={"gru": 2}),
        make_stats("gru", fold=1, mse=0.75, edges=8, rec=3, hidden=4,
                   counts={"gru": 4}),
        make_stats("lstm", fold=0, mse=0.5, edges=6, rec=2, hidden=3,
                   counts={"lstm": 3}),
    ]
    report = aggregate(stats)
    assert [r.run_type for r in report.rows] == ["gru", "lstm"]
    gru = report.row("gru")
    assert gru.n_runs == 2
    assert gru.mse == (0.25, 0.5, 0.75)
    lo, avg, hi, corr = gru.metrics["enabled_edges"]
    assert (lo, avg, hi) == (4, 6.0, 8)
    assert corr == 1.0   # larger networks scored worse in this fixture
    lstm = report.row("lstm")
    assert lstm.n_runs == 1
    assert lstm.metrics["hidden_nodes"] == (3, 3.0, 3, None)
    for row in report.rows:
        lo, avg, hi = row.mse
        assert lo <= avg <= hi
        for key, (mlo, mavg, mhi, _) in row.metrics.items():
            assert mlo <= mavg <= mhi, key
    with pytest.raises(ValueError):
        aggregate([])


def test_aggregate_correlations_match_reference():
    rng = np.random.default_rng(21)
    stats = []
    for i in range(40):
        stats.append(make_stats("all", fold=i, mse=float(rng.uniform(0, 1)),
                                edges=int(rng.integers(2, 30)),
                                rec=int(rng.integers(0, 10)),
                                hidden=int(rng.integers(0, 12)),
                                counts={"gru": int(rng.integers(0, 6))}))
    report = aggregate(stats)
    row = report.row("all")
    mses = [s.best_mse for s in stats]
    for key in ("enabled_edges", "enabled_recurrent_edges", "hidden_nodes",
                "nodes_gru"):
        values = [s.metric(key) for s in stats]
        want = ref_pearson([float(v) for v in values], mses)
        got = row.metrics[key][3]
        assert abs(got - want) < 1e-12


def test_tables_round_trip(tmp_path):
    stats = [make_stats("gru", fold=f, mse=0.1 * (f + 1), edges=3 + f,
                        counts={"gru": f})
             for f in range(4)]
    stats += [make_stats("lstm", fold=f, mse=0.4 - 0.05 * f,
                         counts={"lstm": 1}) for f in range(3)]
    report = aggregate(stats)
    csv_path, txt_path = emit_tables(report, tmp_path)
    assert csv_path.exists() and txt_path.exists()
    text = txt_path.read_text(encoding="utf-8")
    assert "run type: gru (4 runs)" in text
    assert "best_mse" in text and "corr" in text

    parsed = parse_tables_csv(csv_path)
    assert [r.run_type for r in parsed.rows] == [r.run_type
                                                 for r in report.rows]
    for got, want in zip(parsed.rows, report.rows):
        assert got.n_runs == want.n_runs
        assert got.mse == want.mse
        for key in want.metrics:
            g = got.metrics[key]
            w = want.metrics[key]
            assert g[:3] == tuple(float(v) for v in w[:3])
            assert g[3] == w[3]
    with pytest.raises(ValueError):
        emit_tables(AggregateReport([]), tmp_path)


def test_run_stats_json_round_trip(tmp_path):
    s = make_stats("delta+simple", fold=2, repeat=1, mse=0.125,
                   counts={"delta": 2, "simple": 1})
    text = stats_to_json(s)
    assert stats_from_json(text) == s
    # Serialization is canonical: re-encoding gives identical bytes.
    assert stats_to_json(stats_from_json(text)) == text
    path = tmp_path / "runstats.json"
    save_run_stats(path, s)
    assert load_run_stats(path) == s


def test_genome_structure_counts():
    registry = InnovationRegistry()
    g = seed_genome(3, 2, registry)
    counts = genome_structure_counts(g)
    assert counts["enabled_edges"] == 6
    assert counts["enabled_recurrent_edges"] == 0
    assert counts["hidden_nodes"] == 0
    assert set(counts["cell_counts"]) == {"simple", "delta", "gru", "lstm",
                                          "mgu", "ugrnn"}
    assert all(v == 0 for v in counts["cell_counts"].values())
    # Disabled elements never count.
    g.edges[0].enabled = False
    assert genome_structure_counts(g)["enabled_edges"] == 5


def fingerprint_fitness(genome):
    from evornn.genome_io import genome_fingerprint
    return int(genome_fingerprint(genome)[:12], 16) / float(16 ** 12)


def run_small(seed=9, budget=40):
    settings = EvolutionSettings(n_islands=3, population_size=3,
                                 generation_budget=budget)
    state = new_run_state(2, 1, settings, seed=seed)
    while True:
        work = next_work(state)
        if work is None:
            break
        work.genome.fitness = fingerprint_fitness(work.genome)
        insert_result(state, work.genome)
    return state


def test_trajectory_shape_and_monotonicity(tmp_path):
    state = run_small()
    rows = trajectory(state.events)
    assert len(rows) == state.inserted_count + 1
    assert rows[-1][0] == state.evaluated_count
    evaluated = [e for e, _ in rows]
    assert evaluated == sorted(evaluated)
    best = [b for _, b in rows]
    for earlier, later in zip(best, best[1:]):
        assert later <= earlier
    assert best[-1] == best_genome(state).fitness

    # Rebuilding from the written log is byte-for-byte the same data.
    log = tmp_path / "events.log"
    write_event_log(log, state.events)
    from evornn.islands import read_event_log
    again = trajectory(read_event_log(log))
    assert again == rows

    out = tmp_path / "trajectory.csv"
    write_trajectory(out, rows)
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "evaluated,best_mse"
    assert len(lines) == len(rows) + 1
    parsed = [(int(a), float(b)) for a, b in
              (line.split(",") for line in lines[1:])]
    assert parsed == rows


def test_trajectory_empty_run():
    rows = trajectory(["run seq=0 seed=1 islands=2 population=2 budget=0"])
    assert rows == [(0, float("inf"))]
