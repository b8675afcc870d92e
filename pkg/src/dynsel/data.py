"""Datasets, CSV ingestion, standardization and stratified splitting."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

STD_FLOOR = 1e-9


class DataError(ValueError):
    """Raised for malformed or unusable input data."""


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with integer-encoded labels in ``[0, n_classes)``."""

    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        labels = np.asarray(self.labels, dtype=int)
        if features.ndim != 2:
            raise DataError("features must be a 2-D matrix")
        if labels.shape != (features.shape[0],):
            raise DataError("labels length must match the number of rows")
        if self.n_classes < 2:
            raise DataError("fewer than 2 classes")
        if labels.size and (labels.min() < 0 or labels.max() >= self.n_classes):
            raise DataError(f"labels must lie in [0, {self.n_classes})")
        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, indices) -> Dataset:
        indices = np.asarray(indices, dtype=int)
        return Dataset(self.features[indices], self.labels[indices],
                       self.n_classes, self.feature_names)


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = 0.5
    dsel_frac: float = 0.25
    test_frac: float = 0.25
    seed: int = 0

    def __post_init__(self):
        fracs = self.fractions
        if any(f <= 0 for f in fracs):
            raise DataError("every split fraction must be > 0")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise DataError("split fractions must sum to 1")

    @property
    def fractions(self) -> tuple[float, float, float]:
        return (self.train_frac, self.dsel_frac, self.test_frac)


@dataclass(frozen=True)
class Standardizer:
    means: np.ndarray
    stddevs: np.ndarray

    def apply(self, x):
        return (np.asarray(x, dtype=float) - self.means) / self.stddevs


def fit_standardizer(features) -> Standardizer:
    """Fit per-feature mean and (population) standard deviation.

    ``features`` may be a :class:`Dataset` or a raw matrix. Standard
    deviations are floored at ``STD_FLOOR`` so constant columns map to 0.
    """
    if isinstance(features, Dataset):
        features = features.features
    features = np.asarray(features, dtype=float)
    if features.shape[0] < 2:
        raise DataError("need at least 2 samples to fit a standardizer")
    means = features.mean(axis=0)
    stddevs = np.maximum(features.std(axis=0), STD_FLOOR)
    return Standardizer(means, stddevs)


def apply(standardizer: Standardizer, x):
    return standardizer.apply(x)


def load_csv(path, has_header: bool = False) -> Dataset:
    """Read a comma-separated file whose last column holds the label.

    Labels are encoded ``0..M-1`` in order of first appearance. Errors
    report 1-based row (data rows, header excluded) and column positions.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as handle:
            rows = [row for row in csv.reader(handle) if row]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc

    names = None
    if has_header and rows:
        names = tuple(h.strip() for h in rows[0][:-1])
        rows = rows[1:]
    if not rows:
        raise DataError("fewer than 2 classes: no data rows")

    width = len(rows[0])
    if width < 2:
        raise DataError("row 1: need at least one feature column and a label")
    codes: dict[str, int] = {}
    features = np.empty((len(rows), width - 1))
    labels = np.empty(len(rows), dtype=int)
    for r, row in enumerate(rows, start=1):
        if len(row) != width:
            raise DataError(f"row {r}: expected {width} columns, got {len(row)}")
        for c, cell in enumerate(row[:-1], start=1):
            try:
                features[r - 1, c - 1] = float(cell)
            except ValueError:
                raise DataError(
                    f"row {r} col {c}: cannot parse {cell!r} as a number"
                ) from None
        labels[r - 1] = codes.setdefault(row[-1].strip(), len(codes))

    if len(codes) < 2:
        raise DataError(f"fewer than 2 classes in {path}")
    return Dataset(features, labels, len(codes), names)


def _allocate(counts, fractions):
    """Per-class split sizes by largest remainder.

    Each per-class size is the floor or ceiling of its exact share. Leftover
    units go to the largest fractional parts; equal parts go to the split
    furthest behind its global target, then to the lower split index.
    Every split receives at least one sample of each class.
    """
    fractions = np.asarray(fractions, dtype=float)
    n_splits = len(fractions)
    assigned = np.zeros(n_splits, dtype=int)
    seen = 0
    table = []
    for n_c in counts:
        exact = n_c * fractions
        sizes = np.floor(exact + 1e-9).astype(int)
        sizes = np.minimum(sizes, np.ceil(exact - 1e-9).astype(int))
        remainder = exact - sizes
        deficit = (seen + n_c) * fractions - (assigned + sizes)
        order = sorted(range(n_splits),
                       key=lambda s: (-round(remainder[s], 9), -deficit[s], s))
        for s in order[:n_c - sizes.sum()]:
            sizes[s] += 1
        for s in range(n_splits):
            if sizes[s] == 0:
                donor = int(np.argmax(sizes))
                sizes[donor] -= 1
                sizes[s] += 1
        assigned += sizes
        seen += n_c
        table.append(sizes)
    return table


def _stratified_indices(labels, n_classes, fractions, seed):
    labels = np.asarray(labels)
    counts = np.bincount(labels, minlength=n_classes)
    present = [c for c in range(n_classes) if counts[c] > 0]
    small = [c for c in present if counts[c] < len(fractions)]
    if small:
        raise DataError(
            f"class {small[0]} has {counts[small[0]]} samples; "
            f"need at least {len(fractions)} per class"
        )
    rng = np.random.default_rng(seed)
    parts = [[] for _ in fractions]
    table = _allocate([counts[c] for c in present], fractions)
    for c, sizes in zip(present, table):
        members = rng.permutation(np.flatnonzero(labels == c))
        bounds = np.cumsum(sizes)[:-1]
        for part, chunk in zip(parts, np.split(members, bounds)):
            part.extend(chunk.tolist())
    return [np.sort(np.asarray(p, dtype=int)) for p in parts]


def stratified_split(d: Dataset, spec: SplitSpec = SplitSpec()):
    """Split ``d`` into (train, dsel, test) preserving class proportions."""
    train, dsel, test = _stratified_indices(d.labels, d.n_classes,
                                            spec.fractions, spec.seed)
    return d.subset(train), d.subset(dsel), d.subset(test)


def split_indices(d: Dataset, spec: SplitSpec = SplitSpec()):
    """Index arrays behind :func:`stratified_split`."""
    return tuple(_stratified_indices(d.labels, d.n_classes,
                                     spec.fractions, spec.seed))
