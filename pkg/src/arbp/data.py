"""Data ingestion and preprocessing.

CSV in (header row, numeric cells), standardized numeric matrix out.
Preprocessing follows the benchmark protocol: columns are mean-centered and
scaled to unit standard deviation using *training* statistics; discrete
columns (<= 10 distinct values) and one of each highly correlated pair
(|Pearson r| > 0.98, the later column) are dropped.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

DISCRETE_MAX_DISTINCT = 10
CORR_THRESHOLD = 0.98


class DataError(ValueError):
    """Malformed input data (parse failures, shape problems)."""


@dataclass
class RawTable:
    columns: list[str]
    values: np.ndarray  # (n, d)


@dataclass
class StandardizationRecord:
    """Training-split transform: kept columns with their means and sds."""

    columns: list[str]
    mean: np.ndarray
    sd: np.ndarray
    dropped: list[tuple[str, str]] = field(default_factory=list)  # (name, reason)


@dataclass
class StandardizedDataset:
    values: np.ndarray  # (n, d), mean 0 / sd 1 under the stored record
    record: StandardizationRecord

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def d(self):
        return self.values.shape[1]


def load_csv(path) -> RawTable:
    """Parse a headered numeric CSV; parse errors carry row and column."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = []
        for ridx, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataError(f"{path}:{ridx}: expected {len(header)} cells, got {len(row)}")
            parsed = []
            for cidx, cell in enumerate(row):
                try:
                    val = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}:{ridx}: column '{header[cidx]}': not numeric: {cell!r}"
                    ) from None
                if not np.isfinite(val):
                    raise DataError(f"{path}:{ridx}: column '{header[cidx]}': non-finite cell")
                parsed.append(val)
            rows.append(parsed)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return RawTable(columns=list(header), values=np.asarray(rows, dtype=float))


def preprocess(raw: RawTable, fit_stats: StandardizationRecord | None = None) -> StandardizedDataset:
    """Standardize ``raw``; fit the transform unless ``fit_stats`` is given."""
    if fit_stats is not None:
        idx = []
        for name in fit_stats.columns:
            try:
                idx.append(raw.columns.index(name))
            except ValueError:
                raise DataError(f"column '{name}' missing from input") from None
        values = (raw.values[:, idx] - fit_stats.mean) / fit_stats.sd
        return StandardizedDataset(values=values, record=fit_stats)

    if raw.values.shape[0] < 2:
        raise DataError("need at least 2 rows to fit standardization statistics")

    dropped: list[tuple[str, str]] = []
    keep = []
    for j, name in enumerate(raw.columns):
        col = raw.values[:, j]
        if len(np.unique(col)) <= DISCRETE_MAX_DISTINCT:
            dropped.append((name, "discrete"))
        elif np.std(col) == 0.0:
            dropped.append((name, "zero variance"))
        else:
            keep.append(j)

    # correlation pruning: keep the earlier column of each flagged pair
    if len(keep) >= 2:
        sub = raw.values[:, keep]
        corr = np.corrcoef(sub.T)
        flagged = set()
        for a in range(len(keep)):
            if a in flagged:
                continue
            for b in range(a + 1, len(keep)):
                if b not in flagged and abs(corr[a, b]) > CORR_THRESHOLD:
                    flagged.add(b)
                    dropped.append((raw.columns[keep[b]], f"correlated with {raw.columns[keep[a]]}"))
        keep = [k for i, k in enumerate(keep) if i not in flagged]

    if not keep:
        raise DataError("all columns dropped during preprocessing")

    values = raw.values[:, keep]
    mean = values.mean(axis=0)
    sd = values.std(axis=0, ddof=0)
    record = StandardizationRecord(
        columns=[raw.columns[k] for k in keep], mean=mean, sd=sd, dropped=dropped
    )
    return StandardizedDataset(values=(values - mean) / sd, record=record)


def standardize_array(X, columns=None) -> StandardizedDataset:
    """Standardize an in-memory numeric matrix without column pruning."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    mean = X.mean(axis=0)
    sd = X.std(axis=0, ddof=0)
    sd = np.where(sd == 0.0, 1.0, sd)
    cols = columns or [f"x{j}" for j in range(X.shape[1])]
    record = StandardizationRecord(columns=list(cols), mean=mean, sd=sd)
    return StandardizedDataset(values=(X - mean) / sd, record=record)


def apply_record(X, record: StandardizationRecord) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[1] != len(record.columns):
        raise DataError("column count does not match standardization record")
    return (X - record.mean) / record.sd


def destandardize(Z, record: StandardizationRecord) -> np.ndarray:
    Z = np.asarray(Z, dtype=float)
    return Z * record.sd + record.mean
