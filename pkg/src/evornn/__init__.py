"""Neuro-evolution of recurrent networks with heterogeneous memory cells."""

from .cells import CELL_NAMES
from .config import (RunConfig, load_config, run_type_label, save_config)
from .data import (TimeSeriesFile, TimeSeriesSet, build_dataset,
                   generate_fixture_files, load_csv, load_files, make_folds,
                   persistence_mse)
from .evolution import OperatorConfig, generate_child
from .genome import (EdgeGene, InnovationRegistry, NodeGene, RecurrentEdgeGene,
                     RnnGenome, seed_genome)
from .harness import ExperimentReport, derive_seed, run_experiment
from .islands import (EvolutionSettings, best_genome, new_run_state,
                      read_event_log, write_event_log)
from .network import CompiledNetwork, compile_network
from .runtime import ReplayMismatch, RunReport, RunSettings, replay, run
from .stats import (AggregateReport, RunStats, aggregate, deviation_ranking,
                    emit_tables, pearson, stats_from_report, trajectory)
from .trainer import TrainingConfig, train

__version__ = "0.1.0"

__all__ = [
    "CELL_NAMES", "RunConfig", "load_config", "run_type_label", "save_config",
    "TimeSeriesFile", "TimeSeriesSet", "build_dataset",
    "generate_fixture_files", "load_csv", "load_files", "make_folds",
    "persistence_mse", "OperatorConfig", "generate_child", "EdgeGene",
    "InnovationRegistry", "NodeGene", "RecurrentEdgeGene", "RnnGenome",
    "seed_genome", "ExperimentReport", "derive_seed", "run_experiment",
    "EvolutionSettings", "best_genome", "new_run_state", "read_event_log",
    "write_event_log", "CompiledNetwork", "compile_network",
    "ReplayMismatch", "RunReport", "RunSettings", "replay", "run",
    "AggregateReport", "RunStats", "aggregate", "deviation_ranking",
    "emit_tables", "pearson", "stats_from_report", "trajectory",
    "TrainingConfig", "train",
]
