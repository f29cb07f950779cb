"""Tests for run configuration and the k-fold experiment harness."""

import json
import os

import pytest

from evornn import cells
from evornn.config import (CONFIG_VERSION, OUTPUT_DIR_ENV, RUN_TYPE_CELLS,
                           STANDARD_RUN_TYPES, RunConfig, cell_type_codes,
                           config_from_json, config_to_json, load_config,
                           run_type_label, save_config)
from evornn.data import generate_fixture_files
from evornn.evolution import OperatorConfig
from evornn.genome_io import genome_fingerprint
from evornn.harness import (RunFailure, derive_seed, run_dir_name,
                            run_experiment)
from evornn.islands import read_event_log
from evornn.stats import load_run_stats
from evornn.trainer import TrainingConfig, TrainingOutcome


def fake_train(genome, train_frames, val_frames, config):
    g = genome.copy(reset_fitness=False)
    fitness = int(genome_fingerprint(g)[:12], 16) / float(16 ** 12)
    return TrainingOutcome(g, [fitness], fitness, False)


@pytest.fixture(scope="module")
def fixture_paths(tmp_path_factory):
    out = tmp_path_factory.mktemp("series")
    return generate_fixture_files(out, n_files=4, n_rows=60, n_columns=4,
                                  seed=3)


def small_config(paths, out_dir, **overrides):
    base = dict(data_paths=[str(p) for p in paths], target_column="target",
                folds=2, repeats=1, n_islands=2, population_size=3,
                generation_budget=24, seed=11, output_dir=str(out_dir),
                training=TrainingConfig(epochs=2))
    base.update(overrides)
    return RunConfig(**base)


def test_run_type_labels():
    assert run_type_label(["gru"]) == "gru"
    assert run_type_label(["simple"]) == "simple"
    assert run_type_label(["gru", "simple"]) == "gru+simple"
    assert run_type_label(["simple", "lstm"]) == "lstm+simple"
    assert run_type_label(cells.CELL_NAMES) == "all"
    assert run_type_label(["delta", "gru"]) == "delta+gru"
    # The standard study compares eleven run types.
    assert len(STANDARD_RUN_TYPES) == 11
    for label, names in RUN_TYPE_CELLS.items():
        assert run_type_label(names) == label


def test_cell_type_codes():
    assert cell_type_codes(["simple"]) == (0,)
    assert cell_type_codes(["lstm", "gru"]) == (2, 3)
    assert cell_type_codes(cells.CELL_NAMES) == (0, 1, 2, 3, 4, 5)
    with pytest.raises(ValueError):
        cell_type_codes(["perceptron"])


def test_config_round_trip(fixture_paths, tmp_path):
    config = small_config(fixture_paths, tmp_path / "out",
                          allowed_cell_types=("mgu", "simple"),
                          repeats=3, n_workers=2, normalize="none")
    text = config_to_json(config)
    again = config_from_json(text)
    assert again == config
    assert config_to_json(again) == text
    payload = json.loads(text)
    assert payload["version"] == CONFIG_VERSION
    assert payload["allowed_cell_types"] == ["mgu", "simple"]

    path = tmp_path / "config.json"
    save_config(path, config)
    assert load_config(path) == config


def test_config_operator_cells_follow_run_type(fixture_paths, tmp_path):
    config = small_config(fixture_paths, tmp_path,
                          allowed_cell_types=("lstm",))
    assert config.run_type == "lstm"
    assert config.operators.allowed_cell_types == (3,)
    # Even an explicit operator config gets its cell allowance aligned.
    config = small_config(fixture_paths, tmp_path,
                          allowed_cell_types=("delta", "simple"),
                          operators=OperatorConfig())
    assert config.operators.allowed_cell_types == (0, 1)


def test_config_validation(fixture_paths, tmp_path):
    good = dict(data_paths=[str(fixture_paths[0])], target_column="target")
    with pytest.raises(ValueError):
        RunConfig(**{**good, "data_paths": []})
    with pytest.raises(ValueError):
        RunConfig(**{**good, "target_column": ""})
    with pytest.raises(ValueError):
        RunConfig(**{**good, "folds": 1})
    with pytest.raises(ValueError):
        RunConfig(**{**good, "repeats": 0})
    with pytest.raises(ValueError):
        RunConfig(**{**good, "allowed_cell_types": ("hal9000",)})
    with pytest.raises(ValueError):
        RunConfig(**{**good, "normalize": "zscore"})
    with pytest.raises(ValueError):
        RunConfig(**{**good, "n_workers": 0})


def test_config_version_and_unknown_fields(fixture_paths):
    config = RunConfig(data_paths=[str(fixture_paths[0])],
                       target_column="target")
    payload = json.loads(config_to_json(config))
    payload["version"] = 99
    with pytest.raises(ValueError, match="version"):
        config_from_json(json.dumps(payload))
    payload["version"] = CONFIG_VERSION
    payload["temperature"] = 450
    with pytest.raises(ValueError, match="unknown config fields"):
        config_from_json(json.dumps(payload))


def test_output_dir_env_override(fixture_paths, monkeypatch, tmp_path):
    config = small_config(fixture_paths, tmp_path / "configured")
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
    assert config.resolved_output_dir() == tmp_path / "configured"
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "forced"))
    assert config.resolved_output_dir() == tmp_path / "forced"


def test_derive_seed_distinct_and_stable():
    seen = {}
    for fold in range(6):
        for repeat in range(10):
            s = derive_seed(123, fold, repeat)
            assert s == derive_seed(123, fold, repeat)
            assert s not in seen, (fold, repeat, seen[s])
            seen[s] = (fold, repeat)
    assert derive_seed(123, 0, 0) != derive_seed(124, 0, 0)


def test_experiment_produces_one_record_per_run(fixture_paths, tmp_path):
    config = small_config(fixture_paths, tmp_path / "exp", repeats=3)
    report = run_experiment(config, train_fn=fake_train)
    assert report.ok
    assert len(report.runs) == 6            # 2 folds x 3 repeats
    assert (report.output_dir / "config.json").exists()
    seen_pairs = set()
    for r in report.runs:
        seen_pairs.add((r.fold, r.repeat))
        assert r.seed == derive_seed(config.seed, r.fold, r.repeat)
        assert r.run_dir == report.output_dir / run_dir_name(r.fold, r.repeat)
        stats = load_run_stats(r.run_dir / "runstats.json")
        assert stats == r.stats
        assert stats.run_type == "all"
        assert stats.best_mse >= 0.0
        events = read_event_log(r.run_dir / "events.log")
        assert events[0].startswith("run seq=0 ")
        assert f"seed={r.seed}" in events[0]
        lines = (r.run_dir / "trajectory.csv").read_text().splitlines()
        assert lines[0] == "evaluated,best_mse"
        assert len(lines) >= 2
    assert seen_pairs == {(f, r) for f in range(2) for r in range(3)}


def test_experiment_rerun_identical_single_worker(fixture_paths, tmp_path):
    # The real trainer is deterministic, so two experiments from the same
    # base seed must produce byte-identical records.
    config_a = small_config(fixture_paths, tmp_path / "a",
                            generation_budget=10, population_size=2)
    config_b = small_config(fixture_paths, tmp_path / "b",
                            generation_budget=10, population_size=2)
    report_a = run_experiment(config_a)
    report_b = run_experiment(config_b)
    assert report_a.ok and report_b.ok
    for ra, rb in zip(report_a.runs, report_b.runs):
        for name in ("runstats.json", "events.log", "trajectory.csv"):
            assert (ra.run_dir / name).read_bytes() == \
                   (rb.run_dir / name).read_bytes(), name


def test_experiment_partial_failure_continues(fixture_paths, tmp_path):
    config = small_config(fixture_paths, tmp_path / "exp")
    budget = config.generation_budget
    calls = {"n": 0}

    def sometimes_failing(genome, train_frames, val_frames, tc):
        calls["n"] += 1
        if calls["n"] > budget:           # every item of the second run
            raise RuntimeError("simulated training crash")
        return fake_train(genome, train_frames, val_frames, tc)

    report = run_experiment(config, train_fn=sometimes_failing)
    assert not report.ok
    assert len(report.runs) == 1
    assert len(report.failures) == 1
    failure = report.failures[0]
    assert isinstance(failure, RunFailure)
    assert (failure.fold, failure.repeat) == (1, 0)
    error_file = report.output_dir / run_dir_name(1, 0) / "error.txt"
    assert error_file.exists()
    # The surviving run's outputs are intact.
    ok_dir = report.runs[0].run_dir
    assert (ok_dir / "runstats.json").exists()


def test_experiment_parallel_runs_match_sequential(fixture_paths, tmp_path):
    config_seq = small_config(fixture_paths, tmp_path / "seq", repeats=2)
    config_par = small_config(fixture_paths, tmp_path / "par", repeats=2)
    report_seq = run_experiment(config_seq, train_fn=fake_train)
    report_par = run_experiment(config_par, train_fn=fake_train,
                                max_parallel_runs=4)
    assert report_seq.ok and report_par.ok
    key = lambda r: (r.fold, r.repeat)
    for rs, rp in zip(sorted(report_seq.runs, key=key),
                      sorted(report_par.runs, key=key)):
        assert (rs.run_dir / "events.log").read_bytes() == \
               (rp.run_dir / "events.log").read_bytes()
    with pytest.raises(ValueError):
        run_experiment(config_seq, max_parallel_runs=0)
