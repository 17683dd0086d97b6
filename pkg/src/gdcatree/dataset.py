"""Dataset loading, normalization and leaf partitioning."""
from __future__ import annotations

import csv
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataIOError, MapError, ParseError

NORMALIZE_MODES = ("per_instance_unit", "cap_at_one")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature vectors ``x_i`` and labels ``y_i``.

    Points are stored row-wise (``points[i]`` is ``x_i``) because the solver
    touches one point at a time; ``features`` is the ``d x m`` column view.
    """

    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        points = np.ascontiguousarray(self.points, dtype=np.float64)
        labels = np.ascontiguousarray(self.labels, dtype=np.float64).reshape(-1)
        if points.ndim != 2:
            raise ValueError("points must be a 2-d array")
        if points.shape[0] < 1 or points.shape[1] < 1:
            raise ValueError("dataset needs m >= 1 and d >= 1")
        if labels.shape[0] != points.shape[0]:
            raise ValueError(f"{labels.shape[0]} labels for {points.shape[0]} points")
        points.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "labels", labels)

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def features(self) -> np.ndarray:
        return self.points.T

    def column(self, i: int) -> np.ndarray:
        return self.points[i]

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.points[idx], self.labels[idx])


@dataclass(frozen=True)
class Partition:
    """Disjoint assignment of data indices (0-based) to leaf nodes."""

    assignment: Mapping[int, np.ndarray]

    def __post_init__(self):
        clean = {}
        for leaf, idx in self.assignment.items():
            arr = np.sort(np.asarray(idx, dtype=np.int64).reshape(-1))
            arr.flags.writeable = False
            clean[int(leaf)] = arr
        object.__setattr__(self, "assignment", clean)

    def __getitem__(self, leaf: int) -> np.ndarray:
        return self.assignment[leaf]

    def sizes(self) -> dict[int, int]:
        return {leaf: len(idx) for leaf, idx in self.assignment.items()}

    def validate(self, m: int) -> None:
        """Check that the blocks are disjoint and cover ``0..m-1``."""
        allidx = np.concatenate([v for v in self.assignment.values()]) if self.assignment else np.empty(0, int)
        if allidx.size != m or not np.array_equal(np.sort(allidx), np.arange(m)):
            raise ConfigError("partition blocks must be disjoint and cover every data index exactly once")


def _open_text(path) -> str:
    p = Path(path)
    try:
        text = p.read_text()
    except FileNotFoundError as exc:
        raise DataIOError(f"data file not found: {p}") from exc
    except OSError as exc:
        raise DataIOError(f"cannot read {p}: {exc}") from exc
    if not text.strip():
        raise DataIOError(f"data file is empty: {p}")
    return text


def load_dense(path, delimiter: str = ",", label_column: int = -1, header: bool = False) -> Dataset:
    """Read a delimited text file with one instance per row.

    ``label_column`` is 0-based (negative values count from the end); every
    other column becomes a feature. Row order is preserved.
    """
    text = _open_text(path)
    rows = [r for r in csv.reader(text.splitlines(), delimiter=delimiter) if any(f.strip() for f in r)]
    if header:
        rows = rows[1:]
    if not rows:
        raise ParseError(f"{path}: no data rows")
    width = len(rows[0])
    if not -width <= label_column < width:
        raise ParseError(f"{path}: label column {label_column} out of range for {width} fields")
    if width < 2:
        raise ParseError(f"{path}: need at least one feature column and one label column")
    lc = label_column % width
    values = np.empty((len(rows), width))
    for n, row in enumerate(rows):
        if len(row) != width:
            raise ParseError(f"{path}: line {n + 1 + header} has {len(row)} fields, expected {width}")
        try:
            values[n] = [float(f) for f in row]
        except ValueError as exc:
            raise ParseError(f"{path}: line {n + 1 + header}: {exc}") from exc
    feats = np.delete(values, lc, axis=1)
    return Dataset(feats, values[:, lc])


def _map_key(raw):
    v = float(raw)
    return int(v) if v.is_integer() else v


def load_libsvm(path, label_map: Mapping | None = None, n_features: int | None = None) -> Dataset:
    """Read a sparse ``label idx:val ...`` file with 1-based feature indices.

    Features are stored densely. ``label_map`` maps raw labels (compared
    numerically) to output labels, e.g. ``{2: 1, 1: -1}``; without a map the
    raw labels are kept.
    """
    text = _open_text(path)
    lmap = None if label_map is None else {_map_key(k): float(v) for k, v in label_map.items()}
    labels, entries = [], []
    dmax = 0
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            raw = float(tokens[0])
        except ValueError as exc:
            raise ParseError(f"{path}: line {n}: bad label {tokens[0]!r}") from exc
        if lmap is not None:
            key = _map_key(raw)
            if key not in lmap:
                raise MapError(f"{path}: line {n}: label {tokens[0]!r} has no mapping")
            raw = lmap[key]
        row = {}
        for tok in tokens[1:]:
            idx, sep, val = tok.partition(":")
            try:
                j = int(idx)
                v = float(val)
            except ValueError as exc:
                raise ParseError(f"{path}: line {n}: malformed entry {tok!r}") from exc
            if not sep or j < 1:
                raise ParseError(f"{path}: line {n}: malformed entry {tok!r}")
            if j in row:
                raise ParseError(f"{path}: line {n}: duplicate feature index {j}")
            row[j] = v
            dmax = max(dmax, j)
        labels.append(raw)
        entries.append(row)
    if not labels:
        raise ParseError(f"{path}: no data lines")
    d = dmax if n_features is None else n_features
    if d < dmax:
        raise ParseError(f"{path}: feature index {dmax} exceeds n_features={n_features}")
    points = np.zeros((len(labels), max(d, 1)))
    for i, row in enumerate(entries):
        for j, v in row.items():
            points[i, j - 1] = v
    return Dataset(points, np.array(labels))


def normalize(ds: Dataset, mode: str = "per_instance_unit") -> Dataset:
    """Scale data points so that every ``||x_i|| <= 1``.

    ``per_instance_unit`` rescales every nonzero point to unit norm;
    ``cap_at_one`` only shrinks points whose norm exceeds one. Zero points are
    left alone in both modes.
    """
    if mode not in NORMALIZE_MODES:
        raise ConfigError(f"normalize mode must be one of {NORMALIZE_MODES}, got {mode!r}")
    norms = np.linalg.norm(ds.points, axis=1)
    # leave points already at unit norm untouched so the operation is idempotent
    off = np.abs(norms - 1.0) > 4 * np.finfo(float).eps
    if mode == "per_instance_unit":
        scale = (norms > 0) & off
    else:
        scale = (norms > 1.0) & off
    pts = ds.points.copy()
    pts[scale] /= norms[scale, None]
    return Dataset(pts, ds.labels)


def fraction_sizes(m: int, fractions: Sequence[float]) -> list[int]:
    """Block sizes ``floor(f*m)`` with the remainder going to the last block."""
    fr = [float(f) for f in fractions]
    if not fr:
        raise ConfigError("fractions must be nonempty")
    if any(not f > 0 or not math.isfinite(f) for f in fr):
        raise ConfigError(f"fractions must be positive, got {fr}")
    if abs(sum(fr) - 1.0) > 1e-9:
        raise ConfigError(f"fractions must sum to 1, got {sum(fr)!r}")
    sizes = [math.floor(f * m + 1e-9) for f in fr[:-1]]
    sizes.append(m - sum(sizes))
    return sizes


def partition_by_fractions(m: int | Dataset, fractions: Sequence[float], leaf_ids: Sequence[int], seed: int = 0) -> Partition:
    """Shuffle indices with a seeded RNG and cut them into contiguous blocks."""
    if isinstance(m, Dataset):
        m = m.m
    if len(fractions) != len(leaf_ids):
        raise ConfigError(f"{len(fractions)} fractions for {len(leaf_ids)} leaves")
    sizes = fraction_sizes(m, fractions)
    perm = np.random.default_rng(seed).permutation(m)
    bounds = np.cumsum([0] + sizes)
    return Partition({leaf: perm[bounds[k]:bounds[k + 1]] for k, leaf in enumerate(leaf_ids)})


def make_synthetic(m: int, d: int, task: str = "regression", noise: float = 0.1, seed: int = 0) -> Dataset:
    """Gaussian features with a planted linear model.

    ``task='classification'`` returns labels in {-1, +1}.
    """
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((m, d))
    w_true = rng.standard_normal(d)
    score = X @ w_true / math.sqrt(d) + noise * rng.standard_normal(m)
    if task == "regression":
        y = score
    elif task == "classification":
        y = np.where(score >= 0, 1.0, -1.0)
    else:
        raise ConfigError(f"synthetic task must be 'regression' or 'classification', got {task!r}")
    return Dataset(X, y)
