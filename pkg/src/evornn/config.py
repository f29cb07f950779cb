"""Experiment configuration: a versioned JSON schema describing one batch of
evolutionary runs (data, folds, search budget, training, operators, seed).

The same structure drives the CLI and the experiment harness; flags override
file values field by field.  ``EVORNN_OUTPUT_DIR`` overrides the configured
output directory when set.
"""

import json
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from . import cells
from .data import NORMALIZE_MODES
from .evolution import OperatorConfig
from .trainer import TrainingConfig

CONFIG_VERSION = 1
OUTPUT_DIR_ENV = "EVORNN_OUTPUT_DIR"

MEMORY_CELLS = ("delta", "gru", "lstm", "mgu", "ugrnn")

# The eleven standard run types: each memory cell alone, each memory cell
# paired with simple neurons, and everything at once.
RUN_TYPE_CELLS = {name: (name,) for name in MEMORY_CELLS}
RUN_TYPE_CELLS.update({f"{name}+simple": (name, "simple")
                       for name in MEMORY_CELLS})
RUN_TYPE_CELLS["all"] = tuple(cells.CELL_NAMES)
STANDARD_RUN_TYPES = tuple(RUN_TYPE_CELLS)


def run_type_label(cell_names) -> str:
    """Human label for a set of allowed cell types."""
    names = set(cell_names)
    if names == set(cells.CELL_NAMES):
        return "all"
    if len(names) == 1:
        return next(iter(names))
    if len(names) == 2 and "simple" in names:
        (other,) = names - {"simple"}
        return f"{other}+simple"
    return "+".join(n for n in cells.CELL_NAMES if n in names)


def cell_type_codes(cell_names) -> tuple:
    codes = []
    for name in cell_names:
        if name not in cells.CELL_NAMES:
            raise ValueError(f"unknown cell type {name!r}")
        codes.append(cells.CELL_NAMES.index(name))
    return tuple(sorted(set(codes)))


@dataclass
class RunConfig:
    """Everything needed to reproduce one experiment."""

    data_paths: list
    target_column: str
    allowed_cell_types: tuple = tuple(cells.CELL_NAMES)
    folds: int = 2
    repeats: int = 1
    n_islands: int = 10
    population_size: int = 5
    generation_budget: int = 2000
    n_workers: int = 1
    normalize: str = "minmax"
    seed: int = 0
    output_dir: str = "runs"
    training: TrainingConfig = field(default_factory=TrainingConfig)
    operators: OperatorConfig = field(default_factory=OperatorConfig)

    def __post_init__(self):
        if not self.data_paths:
            raise ValueError("config needs at least one data file")
        if not self.target_column:
            raise ValueError("config needs a target column")
        if not self.allowed_cell_types:
            raise ValueError("need at least one allowed cell type")
        self.allowed_cell_types = tuple(self.allowed_cell_types)
        for name in self.allowed_cell_types:
            if name not in cells.CELL_NAMES:
                raise ValueError(f"unknown cell type {name!r}")
        if self.folds < 2:
            raise ValueError("need at least 2 folds")
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")
        if self.n_islands < 1 or self.population_size < 1:
            raise ValueError("islands and population size must be positive")
        if self.generation_budget < 1:
            raise ValueError("generation budget must be positive")
        if self.n_workers < 1:
            raise ValueError("n_workers must be at least 1")
        if self.normalize not in NORMALIZE_MODES:
            raise ValueError(f"normalize must be one of {NORMALIZE_MODES}")
        # Operator cell allowance always mirrors the configured run type.
        self.operators = replace(
            self.operators,
            allowed_cell_types=cell_type_codes(self.allowed_cell_types))

    @property
    def run_type(self) -> str:
        return run_type_label(self.allowed_cell_types)

    def resolved_output_dir(self) -> Path:
        override = os.environ.get(OUTPUT_DIR_ENV)
        return Path(override) if override else Path(self.output_dir)


def config_to_json(config: RunConfig) -> str:
    payload = {
        "version": CONFIG_VERSION,
        "data_paths": [str(p) for p in config.data_paths],
        "target_column": config.target_column,
        "allowed_cell_types": list(config.allowed_cell_types),
        "folds": config.folds,
        "repeats": config.repeats,
        "n_islands": config.n_islands,
        "population_size": config.population_size,
        "generation_budget": config.generation_budget,
        "n_workers": config.n_workers,
        "normalize": config.normalize,
        "seed": config.seed,
        "output_dir": str(config.output_dir),
        "training": asdict(config.training),
        "operators": {k: (list(v) if isinstance(v, tuple) else v)
                      for k, v in asdict(config.operators).items()},
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def config_from_json(text: str) -> RunConfig:
    payload = json.loads(text)
    if not isinstance(payload, dict):
        raise ValueError("config must be a JSON object")
    version = payload.pop("version", None)
    if version != CONFIG_VERSION:
        raise ValueError(f"unsupported config version {version!r}; "
                         f"expected {CONFIG_VERSION}")
    known = {f for f in RunConfig.__dataclass_fields__}
    unknown = set(payload) - known
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")
    if "training" in payload:
        payload["training"] = TrainingConfig(**payload["training"])
    if "operators" in payload:
        op = dict(payload["operators"])
        if "allowed_cell_types" in op:
            op["allowed_cell_types"] = tuple(op["allowed_cell_types"])
        payload["operators"] = OperatorConfig(**op)
    if "allowed_cell_types" in payload:
        payload["allowed_cell_types"] = tuple(payload["allowed_cell_types"])
    return RunConfig(**payload)


def save_config(path, config: RunConfig) -> None:
    Path(path).write_text(config_to_json(config), encoding="utf-8")


def load_config(path) -> RunConfig:
    return config_from_json(Path(path).read_text(encoding="utf-8"))
