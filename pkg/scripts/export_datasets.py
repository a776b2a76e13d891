#!/usr/bin/env python3
"""Export the bundled scikit-learn datasets to data/ as CSV files.

Writes data/wine.csv and data/diabetes.csv. The remaining benchmark datasets
(WPBC prognostic breast cancer, Parkinsons, Ionosphere, Boston housing) are
not bundled with scikit-learn; download them from the UCI repository and place
them as data/wpbc.csv, data/parkinsons.csv, data/ionosphere.csv and
data/boston.csv — numeric columns only, one header row, and for the supervised
files the response in the last column.
"""

import csv
from pathlib import Path

from sklearn.datasets import load_diabetes, load_wine

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


def write_csv(path, columns, values):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in values:
            writer.writerow([f"{float(v)!r}" for v in row])
    print(f"wrote {path} ({values.shape[0]} rows, {values.shape[1]} cols)")


def main():
    DATA_DIR.mkdir(exist_ok=True)
    wine = load_wine()
    write_csv(DATA_DIR / "wine.csv", list(wine.feature_names), wine.data)
    diab = load_diabetes(scaled=False)
    cols = list(diab.feature_names) + ["target"]
    import numpy as np

    write_csv(DATA_DIR / "diabetes.csv", cols,
              np.column_stack([diab.data, diab.target]))


if __name__ == "__main__":
    main()
