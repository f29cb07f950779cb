"""CSV time-series ingestion, normalization, folds, and prediction frames.

Files are rectangular numeric tables with a header row.  A loaded set is
normalized per column to [0, 1] using statistics fitted on training files
only, then turned into one-step-ahead prediction frames: all columns at time
t (including the target's own current value) predict the target at t + 1.
"""

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

NORMALIZE_MODES = ("minmax", "none")


class DataFormatError(ValueError):
    """A parse or shape problem, located by file/row/column when known."""

    def __init__(self, message, path=None, row=None, column=None):
        self.path = str(path) if path is not None else None
        self.row = row
        self.column = column
        where = []
        if path is not None:
            where.append(f"file {path}")
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


@dataclass
class TimeSeriesFile:
    """One recording: named columns over T timesteps, all values finite."""

    name: str
    columns: list
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise DataFormatError("values must be a 2-d matrix", self.name)
        if len(self.columns) != self.values.shape[1]:
            raise DataFormatError(
                f"{len(self.columns)} column names for "
                f"{self.values.shape[1]} value columns", self.name)
        if len(set(self.columns)) != len(self.columns):
            raise DataFormatError("duplicate column names", self.name)
        if self.values.shape[0] < 2:
            raise DataFormatError("need at least 2 rows", self.name)
        if not np.all(np.isfinite(self.values)):
            t, c = np.argwhere(~np.isfinite(self.values))[0]
            raise DataFormatError("non-finite value", self.name,
                                  row=int(t) + 2, column=self.columns[c])

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_columns(self) -> int:
        return self.values.shape[1]

    def column_index(self, name: str) -> int:
        try:
            return self.columns.index(name)
        except ValueError:
            raise DataFormatError(f"no such column: {name}", self.name)


def load_csv(path) -> TimeSeriesFile:
    """Parse one comma-separated file: header row then numeric rows.

    Errors carry the 1-based file line and the column name involved.
    """
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError("empty file", path)
        columns = [c.strip() for c in header]
        if any(not c for c in columns):
            raise DataFormatError("blank column name in header", path, row=1)
        rows = []
        for line_no, cells in enumerate(reader, start=2):
            if not cells:
                continue
            if len(cells) != len(columns):
                raise DataFormatError(
                    f"expected {len(columns)} cells, found {len(cells)}",
                    path, row=line_no)
            parsed = np.empty(len(columns), dtype=np.float64)
            for j, cell in enumerate(cells):
                try:
                    parsed[j] = float(cell.strip())
                except ValueError:
                    raise DataFormatError(
                        f"non-numeric cell {cell.strip()!r}",
                        path, row=line_no, column=columns[j])
            rows.append(parsed)
    if not rows:
        raise DataFormatError("no data rows", path)
    return TimeSeriesFile(path.name, columns, np.vstack(rows))


def load_files(paths, parallel: bool = True) -> list:
    """Load several CSVs, in order; files are independent so loading is
    parallel across them."""
    paths = list(paths)
    if not parallel or len(paths) < 2:
        return [load_csv(p) for p in paths]
    with ThreadPoolExecutor(max_workers=min(8, len(paths))) as pool:
        return list(pool.map(load_csv, paths))


def fit_normalization(files) -> dict:
    """Per-column global min/max over the given (training) files only."""
    if not files:
        raise ValueError("cannot fit normalization on an empty file list")
    columns = files[0].columns
    for f in files:
        if f.columns != columns:
            raise DataFormatError(
                f"column mismatch: {f.columns} vs {columns}", f.name)
    norms = {}
    for j, name in enumerate(columns):
        lows = min(float(f.values[:, j].min()) for f in files)
        highs = max(float(f.values[:, j].max()) for f in files)
        norms[name] = (lows, highs)
    return norms


def apply_normalization(file: TimeSeriesFile, norms: dict) -> TimeSeriesFile:
    """Map x to (x - min)/(max - min) per column; constant columns map to 0.

    Values outside the fitted range (validation files) fall outside [0, 1]
    and are left unclipped.
    """
    out = np.empty_like(file.values)
    for j, name in enumerate(file.columns):
        if name not in norms:
            raise DataFormatError(f"no normalization fitted for column "
                                  f"{name}", file.name)
        low, high = norms[name]
        span = high - low
        if span == 0.0:
            out[:, j] = 0.0
        else:
            out[:, j] = (file.values[:, j] - low) / span
    return TimeSeriesFile(file.name, list(file.columns), out)


def denormalize(values, norms: dict, column: str):
    """Inverse of apply_normalization for one column."""
    if column not in norms:
        raise ValueError(f"no normalization fitted for column {column}")
    low, high = norms[column]
    return np.asarray(values, dtype=np.float64) * (high - low) + low


@dataclass
class TimeSeriesSet:
    """A normalized train/validation bundle for one run."""

    train_files: list
    validation_files: list
    target_column: str
    input_columns: list
    normalization: dict

    @property
    def files(self) -> list:
        return list(self.train_files) + list(self.validation_files)

    def frames(self, which: str) -> list:
        if which == "train":
            files = self.train_files
        elif which == "validation":
            files = self.validation_files
        else:
            raise ValueError(f"unknown frame group: {which}")
        return [prediction_frames(f, self.target_column) for f in files]


def build_dataset(train_files, validation_files, target_column: str,
                  normalize: str = "minmax") -> TimeSeriesSet:
    """Fit normalization on the training files only and apply it everywhere."""
    if normalize not in NORMALIZE_MODES:
        raise ValueError(f"normalize must be one of {NORMALIZE_MODES}")
    if not train_files:
        raise ValueError("need at least one training file")
    columns = train_files[0].columns
    for f in list(train_files) + list(validation_files):
        if f.columns != columns:
            raise DataFormatError(
                f"column mismatch: {f.columns} vs {columns}", f.name)
    if target_column not in columns:
        raise ValueError(f"target column {target_column!r} not in data "
                         f"columns {columns}")
    if normalize == "minmax":
        norms = fit_normalization(train_files)
        train = [apply_normalization(f, norms) for f in train_files]
        val = [apply_normalization(f, norms) for f in validation_files]
    else:
        norms = {}
        train = list(train_files)
        val = list(validation_files)
    return TimeSeriesSet(train, val, target_column, list(columns), norms)


def prediction_frames(file: TimeSeriesFile, target_column: str):
    """One-step-ahead frames: all P columns at t predict target at t + 1.

    Returns (inputs [T-1, P], targets [T-1]); the final row produces no
    frame.
    """
    if file.n_rows < 2:
        raise DataFormatError("need at least 2 rows for prediction frames",
                              file.name)
    idx = file.column_index(target_column)
    inputs = file.values[:-1, :]
    targets = file.values[1:, idx]
    return inputs, targets


def persistence_mse(files, target_column: str) -> float:
    """MSE of predicting target(t + 1) = target(t), pooled over all files."""
    total = 0.0
    count = 0
    for f in files:
        idx = f.column_index(target_column)
        diff = f.values[1:, idx] - f.values[:-1, idx]
        total += float(np.sum(diff * diff))
        count += diff.shape[0]
    if count == 0:
        raise ValueError("no frames to evaluate")
    return total / count


@dataclass
class FoldPlan:
    """Deterministic assignment of files to validation folds."""

    k: int
    assignments: dict = field(default_factory=dict)
    repeats: int = 1

    def fold_names(self, fold: int) -> list:
        if not 0 <= fold < self.k:
            raise ValueError(f"fold {fold} out of range for k={self.k}")
        return sorted(n for n, f in self.assignments.items() if f == fold)


def make_folds(files, k: int, seed: int, repeats: int = 1) -> FoldPlan:
    """Shuffle files deterministically and deal them round-robin into k folds.

    Fold sizes differ by at most one file; fold i is the validation set of
    run i, the remainder the training set.
    """
    names = [f.name if isinstance(f, TimeSeriesFile) else str(f)
             for f in files]
    if len(set(names)) != len(names):
        raise ValueError("file names must be unique for fold assignment")
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > len(names):
        raise ValueError(f"cannot make {k} folds from {len(names)} files")
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(names))
    assignments = {names[int(pos)]: j % k for j, pos in enumerate(order)}
    return FoldPlan(k, assignments, repeats)


def fold_split(files, plan: FoldPlan, fold: int):
    """Partition loaded files into (train, validation) for one fold."""
    if not 0 <= fold < plan.k:
        raise ValueError(f"fold {fold} out of range for k={plan.k}")
    train, val = [], []
    for f in files:
        if f.name not in plan.assignments:
            raise ValueError(f"file {f.name} missing from fold plan")
        (val if plan.assignments[f.name] == fold else train).append(f)
    return train, val


FIXTURE_FAST_PERIOD = 6
FIXTURE_SLOW_PERIOD = 151


def generate_fixture_files(out_dir, n_files: int = 4, n_rows: int = 1000,
                           n_columns: int = 12, seed: int = 7) -> list:
    """Write synthetic multivariate series for experiments and tests.

    The target mixes a fast and a slow sine plus a little noise; two
    companion oscillator channels carry the same phases advanced by one
    step, so a one-step-ahead predictor has a clean signal to learn while
    the persistence baseline pays the full swing of the fast sine.  The
    remaining columns are autoregressive noise distractors.  Deterministic
    for a given seed.
    """
    if n_columns < 4:
        raise ValueError("fixture needs at least 4 columns")
    if n_rows < 2:
        raise ValueError("fixture needs at least 2 rows")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for file_idx in range(n_files):
        rng = np.random.default_rng([seed, file_idx])
        t = np.arange(n_rows, dtype=np.float64)
        phase_fast = float(rng.uniform(0.0, 2.0 * math.pi))
        phase_slow = float(rng.uniform(0.0, 2.0 * math.pi))
        w_fast = 2.0 * math.pi / FIXTURE_FAST_PERIOD
        w_slow = 2.0 * math.pi / FIXTURE_SLOW_PERIOD
        target = (0.5
                  + 0.35 * np.sin(w_fast * t + phase_fast)
                  + 0.10 * np.sin(w_slow * t + phase_slow)
                  + 0.004 * rng.standard_normal(n_rows))
        osc_fast = np.sin(w_fast * (t + 1.0) + phase_fast)
        osc_slow = np.sin(w_slow * (t + 1.0) + phase_slow)
        columns = ["target", "osc_fast", "osc_slow"]
        series = [target, osc_fast, osc_slow]
        for j in range(n_columns - 3):
            coef = float(rng.uniform(0.6, 0.95))
            scale = float(rng.uniform(0.05, 0.15))
            noise = rng.standard_normal(n_rows) * scale
            channel = np.empty(n_rows)
            channel[0] = noise[0]
            for i in range(1, n_rows):
                channel[i] = coef * channel[i - 1] + noise[i]
            columns.append(f"noise_{j}")
            series.append(channel)
        path = out_dir / f"fixture_{file_idx}.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(columns)
            for i in range(n_rows):
                writer.writerow([repr(float(col[i])) for col in series])
        paths.append(path)
    return paths
