#!/usr/bin/env python3
"""Export the UCI WDBC and Iris datasets bundled with scikit-learn as CSV.

WDBC: 30 features named <measure>1 (mean), <measure>2 (standard error),
<measure>3 (worst); label column `diagnosis` with 1 = malignant.
Iris: four features and a `species` column (0 setosa, 1 versicolor, 2 virginica).
"""
import csv
import pathlib
import sys

from sklearn.datasets import load_breast_cancer, load_iris

MEASURES = ["radius", "texture", "perimeter", "area", "smoothness", "compactness",
            "concavity", "concave_points", "symmetry", "fractal_dimension"]


def main(out_dir: pathlib.Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)

    wdbc = load_breast_cancer()
    names = [f"{m}{block}" for block in (1, 2, 3) for m in MEASURES]
    with open(out_dir / "wdbc.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names + ["diagnosis"])
        for row, target in zip(wdbc.data, wdbc.target):
            # scikit-learn encodes malignant as 0
            w.writerow([repr(float(v)) for v in row] + [1 - int(target)])

    iris = load_iris()
    with open(out_dir / "iris.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sepal_length", "sepal_width", "petal_length", "petal_width", "species"])
        for row, target in zip(iris.data, iris.target):
            w.writerow([repr(float(v)) for v in row] + [int(target)])


if __name__ == "__main__":
    main(pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "data"))
