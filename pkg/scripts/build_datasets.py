"""Regenerate the bundled benchmark tables under src/ancmm/datasets/.

Run once by hand; the library itself never touches the network.

* wine.csv  -- UCI Wine (178 x 13, 3 classes) as shipped with scikit-learn.
* ecoli.csv -- UCI Ecoli (336 x 7, 8 classes).  Rebuilt from the KEEL
  one-vs-rest splits bundled in the ``keel-ds`` wheel, matching rows by their
  (unique) feature vectors:

      pip install keel-ds scikit-learn
      python scripts/build_datasets.py
"""

import csv
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "ancmm" / "datasets"
ECOLI_FEATURES = ["mcg", "gvh", "lip", "chg", "aac", "alm1", "alm2"]
# KEEL class index -> UCI name: 0 cp, 1 im, 2 imL, 3 imS, 4 imU, 5 om, 6 omL, 7 pp
ECOLI_CLASSES = ["cp", "im", "pp", "imU", "om", "omL", "imL", "imS"]


def _write(path, header, X, y):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row, label in zip(X, y):
            w.writerow([repr(float(v)) for v in row] + [label])


def build_wine():
    from sklearn.datasets import load_wine

    ds = load_wine()
    names = [n.replace("/", "_") for n in ds.feature_names]
    _write(OUT / "wine.csv", names + ["class"], ds.data, ds.target.tolist())


def _mangle(x):
    # several KEEL files store 0.40 as "4.0": hundredths with zeros stripped
    digits = str(int(round(x * 100))).strip("0")
    return float(digits or 0)


class _Split:
    """One KEEL one-vs-rest file, queryable with clean UCI feature rows."""

    def __init__(self, path):
        rows = [r for r in path.read_text().splitlines() if r.strip() and not r.startswith("@")]
        parts = [[p.strip() for p in r.split(",")] for r in rows]
        self.n_features = len(parts[0]) - 1
        self.mangled = all(float(p[0]) >= 1 or float(p[0]) == 0 for p in parts) and any(
            float(p[0]) > 1 for p in parts
        )
        self.table = {tuple(float(v) for v in p[:-1]): p[-1] == "positive" for p in parts}
        if len(self.table) != len(parts):
            raise RuntimeError(f"{path.name}: feature rows are not unique")

    def _key(self, row):
        row = list(row)
        if self.n_features == 6:
            del row[3]
        return tuple(_mangle(v) for v in row) if self.mangled else tuple(row)

    def __contains__(self, row):
        return self._key(row) in self.table

    def __getitem__(self, row):
        return self.table[self._key(row)]


def build_ecoli():
    import keel_ds

    data_dir = Path(keel_ds.__file__).resolve().parent / "data" / "imbalanced" / "raw"

    def split(name):
        return _Split(data_dir / f"{name}.dat")

    im = split("ecoli1")  # class 1 vs rest, all 336 rows
    pp = split("ecoli2")
    imu = split("ecoli3")
    om = split("ecoli4")
    rare = split("ecoli-0-1-4-7_vs_2-3-5-6")  # positives: imL, imS, om, omL
    has_ims = split("ecoli-0-3-4_vs_5")  # holds imS (3), not imL (2) or omL (6)
    has_oml = split("ecoli-0-6-7_vs_5")  # holds omL (6), not imL or imS
    keys = list(im.table)
    labels = []
    for key in keys:
        if im[key]:
            labels.append("im")
        elif pp[key]:
            labels.append("pp")
        elif imu[key]:
            labels.append("imU")
        elif om[key]:
            labels.append("om")
        elif rare[key]:
            if key in has_ims:
                labels.append("imS")
            elif key in has_oml:
                labels.append("omL")
            else:
                labels.append("imL")
        else:
            labels.append("cp")
    counts = {c: labels.count(c) for c in ECOLI_CLASSES}
    expected = {"cp": 143, "im": 77, "pp": 52, "imU": 35, "om": 20, "omL": 5, "imL": 2, "imS": 2}
    if counts != expected:
        raise RuntimeError(f"class counts {counts} do not match UCI Ecoli {expected}")
    codes = [ECOLI_CLASSES.index(c) for c in labels]
    _write(OUT / "ecoli.csv", ECOLI_FEATURES + ["class"], np.array(keys), codes)


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    build_wine()
    build_ecoli()
