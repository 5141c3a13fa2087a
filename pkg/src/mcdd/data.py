"""Tabular data: CSV ingestion, z-score normalization, and leave-one-class-out
cross-validation scenarios."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError


@dataclass
class TabularDataset:
    features: np.ndarray  # (N, p)
    labels: np.ndarray  # (N,) dense ids in [0, K)
    class_names: list[str]
    name: str = ""

    @property
    def num_classes(self) -> int:
        return len(self.class_names)


def _label_sort_key(name: str):
    try:
        return (0, float(name), name)
    except ValueError:
        return (1, 0.0, name)


def load_csv(path, label_column=-1, has_header: bool = True, label_order: str = "first",
             name: str | None = None) -> TabularDataset:
    """Read a numeric CSV with one label column.

    ``label_column`` is a header name or an integer index (negative counts
    from the end).  Labels are mapped to dense ids in first-occurrence order,
    or with ``label_order="sorted"`` in ascending order (numeric labels are
    compared as numbers).
    """
    path = Path(path)
    if label_order not in ("first", "sorted"):
        raise ValidationError(f"label_order must be 'first' or 'sorted', got {label_order!r}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    if has_header:
        if not rows:
            raise ValidationError(f"{path}: empty file")
        header, rows = rows[0], rows[1:]
    else:
        header = None
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    width = len(rows[0])

    if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
        if header is None or label_column not in header:
            raise ValidationError(f"{path}: label column {label_column!r} not found")
        col = header.index(label_column)
    else:
        col = int(label_column)
        if not -width <= col < width:
            raise ValidationError(f"{path}: label column {col} out of range for {width} columns")
        col %= width

    first_line = 2 if has_header else 1
    features = np.empty((len(rows), width - 1))
    raw_labels = []
    for r, row in enumerate(rows):
        if len(row) != width:
            raise ValidationError(f"{path}: line {r + first_line} has {len(row)} fields, expected {width}")
        raw_labels.append(row[col].strip())
        j = 0
        for c, cell in enumerate(row):
            if c == col:
                continue
            try:
                features[r, j] = float(cell)
            except ValueError:
                raise ValidationError(
                    f"{path}: cannot parse {cell!r} at line {r + first_line}, column {c}"
                ) from None
            j += 1
    if not np.all(np.isfinite(features)):
        bad = np.argwhere(~np.isfinite(features))[0]
        raise ValidationError(f"{path}: non-finite value at data row {bad[0]}")

    names = list(dict.fromkeys(raw_labels))
    if label_order == "sorted":
        names.sort(key=_label_sort_key)
    index = {label: i for i, label in enumerate(names)}
    labels = np.array([index[label] for label in raw_labels], dtype=np.int64)
    return TabularDataset(features, labels, names, name or path.stem)


@dataclass
class NormalizationStats:
    mean: np.ndarray
    std: np.ndarray


def zscore_fit(features, indices=None) -> NormalizationStats:
    """Per-attribute mean and population std over the given rows.

    Zero-variance attributes get std 1 so they are only centered.
    """
    features = np.asarray(features, dtype=np.float64)
    rows = features if indices is None else features[np.asarray(indices)]
    if rows.shape[0] == 0:
        raise ValidationError("cannot fit normalization on zero rows")
    mean = rows.mean(axis=0)
    std = rows.std(axis=0)
    std[std == 0] = 1.0
    return NormalizationStats(mean, std)


def zscore_apply(features, stats: NormalizationStats) -> np.ndarray:
    return (np.asarray(features, dtype=np.float64) - stats.mean) / stats.std


def zscore_invert(features, stats: NormalizationStats) -> np.ndarray:
    return np.asarray(features, dtype=np.float64) * stats.std + stats.mean


@dataclass(frozen=True)
class ScenarioSplit:
    ood_class: int
    fold: int
    train_indices: np.ndarray
    id_test_indices: np.ndarray
    ood_test_indices: np.ndarray

    @property
    def key(self) -> tuple[int, int]:
        return (self.ood_class, self.fold)


def stratified_folds(labels: np.ndarray, folds: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Split row indices into ``folds`` parts with per-class counts differing by
    at most one between parts."""
    parts: list[list[np.ndarray]] = [[] for _ in range(folds)]
    offset = 0
    for c in np.unique(labels):
        members = rng.permutation(np.flatnonzero(labels == c))
        # rotate which folds receive the remainder so fold sizes stay balanced
        for j, chunk in enumerate(np.array_split(members, folds)):
            parts[(j + offset) % folds].append(chunk)
        offset += len(members) % folds
    return [np.sort(np.concatenate(p)) for p in parts]


def make_loco_scenarios(dataset: TabularDataset, folds: int = 5, seed: int = 0,
                        ood_classes=None) -> list[ScenarioSplit]:
    """One stratified k-fold split of the in-distribution rows per held-out
    class, ordered by (ood_class, fold)."""
    if folds < 2:
        raise ValidationError("folds must be >= 2")
    labels = dataset.labels
    counts = np.bincount(labels, minlength=dataset.num_classes)
    classes = range(dataset.num_classes) if ood_classes is None else sorted(set(int(c) for c in ood_classes))
    scenarios = []
    for ood in classes:
        if not 0 <= ood < dataset.num_classes:
            raise ValidationError(f"ood class {ood} out of range")
        small = [c for c in range(dataset.num_classes) if c != ood and counts[c] < folds]
        if small:
            raise ValidationError(f"classes {small} have fewer than {folds} samples")
        id_rows = np.flatnonzero(labels != ood)
        ood_rows = np.flatnonzero(labels == ood)
        rng = np.random.default_rng([seed, ood])
        parts = stratified_folds(labels[id_rows], folds, rng)
        for f, held in enumerate(parts):
            train = np.sort(np.concatenate([p for j, p in enumerate(parts) if j != f]))
            scenarios.append(ScenarioSplit(ood, f, id_rows[train], id_rows[held], ood_rows))
    return scenarios
