"""Datasets, preprocessing and result files.

File formats
------------
* CSV: UTF-8, comma separated, ``.`` decimal point, optional header row.
* Edge lists: header ``i,j,weight`` then one line per entry above
  ``edge_eps`` with 0-based indices and 17 significant digits.
* Run records: JSON with sorted keys.
"""

import csv
import io
import json
import os
import tempfile
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .exceptions import ParseError, ShapeError

FLOAT_FMT = "%.17g"


@dataclass
class DataMatrix:
    X: np.ndarray
    labels: np.ndarray = None
    feature_names: list = None
    provenance: str = ""

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim != 2:
            raise ShapeError(f"X must be 2-D, got shape {self.X.shape}")
        n, d = self.X.shape
        if n < 2 or d < 1:
            raise ShapeError(f"need n >= 2 samples and d >= 1 features, got {self.X.shape}")
        if not np.all(np.isfinite(self.X)):
            bad = np.argwhere(~np.isfinite(self.X))[0]
            raise ParseError(
                f"non-finite value at row {bad[0]}, column {bad[1]}",
                line=int(bad[0]) + 1,
                column=int(bad[1]) + 1,
            )
        if self.labels is not None:
            self.labels = np.asarray(self.labels)
            if self.labels.shape != (n,):
                raise ShapeError(f"labels must have shape ({n},), got {self.labels.shape}")

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]


@dataclass
class RunRecord:
    config: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    objective_trace: list = field(default_factory=list)
    epsilon_trace: list = field(default_factory=list)
    component_counts: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps(_jsonable(asdict(self)), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _encode_labels(raw):
    """Integer-code a label column, keeping numeric labels' natural order."""
    try:
        values = np.array([float(v) for v in raw])
        if np.all(values == np.round(values)):
            return values.astype(int)
        uniq, codes = np.unique(values, return_inverse=True)
        return codes
    except ValueError:
        uniq, codes = np.unique(np.asarray(raw, dtype=str), return_inverse=True)
        return codes


def load_csv(path, has_header=True, label_column=None):
    """Read a numeric CSV table into a :class:`DataMatrix`.

    ``label_column`` may be a header name or a 0-based column index; that
    column is removed from ``X`` and kept as integer-coded labels.

    Raises
    ------
    ParseError
        On a non-numeric or non-finite cell (message names the 1-based file
        line and column) or a ragged row.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ShapeError(f"{path}: empty file")
    header = None
    start_line = 1
    if has_header:
        header = [h.strip() for h in rows[0]]
        rows = rows[1:]
        start_line = 2
    width = len(header) if header is not None else len(rows[0])

    label_idx = None
    if label_column is not None:
        if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
            if header is None or label_column not in header:
                raise ShapeError(f"{path}: label column {label_column!r} not found")
            label_idx = header.index(label_column)
        else:
            label_idx = int(label_column) % width

    data = []
    raw_labels = []
    for r, row in enumerate(rows):
        line = start_line + r
        if len(row) != width:
            raise ParseError(
                f"{path}: line {line} has {len(row)} fields, expected {width}", line=line
            )
        values = []
        for c, cell in enumerate(row):
            if c == label_idx:
                raw_labels.append(cell.strip())
                continue
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(
                    f"{path}: non-numeric value {cell!r} at line {line}, column {c + 1}",
                    line=line,
                    column=c + 1,
                ) from None
            if not np.isfinite(v):
                raise ParseError(
                    f"{path}: non-finite value {cell!r} at line {line}, column {c + 1}",
                    line=line,
                    column=c + 1,
                )
            values.append(v)
        data.append(values)

    names = None
    if header is not None:
        names = [h for i, h in enumerate(header) if i != label_idx]
    labels = _encode_labels(raw_labels) if label_idx is not None else None
    return DataMatrix(
        X=np.array(data, dtype=float).reshape(len(data), -1),
        labels=labels,
        feature_names=names,
        provenance=str(path),
    )


def load_matrix(path):
    """Read a headerless numeric CSV as a 2-D array."""
    return load_csv(path, has_header=False).X


def preprocess(data, mode="zscore"):
    """Per-feature scaling: ``zscore`` (ddof=1; constant features become 0), ``minmax`` or ``none``."""
    X = data.X
    if mode == "none":
        out = X.copy()
    elif mode == "zscore":
        mu = X.mean(axis=0)
        sd = X.std(axis=0, ddof=1)
        out = np.zeros_like(X)
        ok = sd > 0
        out[:, ok] = (X[:, ok] - mu[ok]) / sd[ok]
    elif mode == "minmax":
        lo = X.min(axis=0)
        span = X.max(axis=0) - lo
        out = np.zeros_like(X)
        ok = span > 0
        out[:, ok] = (X[:, ok] - lo[ok]) / span[ok]
    else:
        raise ValueError(f"unknown preprocessing mode {mode!r}")
    return DataMatrix(
        X=out,
        labels=data.labels,
        feature_names=data.feature_names,
        provenance=f"{data.provenance}|{mode}",
    )


def two_moons(n=200, noise=0.13, seed=1):
    """Two interleaved half circles with isotropic Gaussian noise.

    The upper moon is the unit half circle ``(cos t, sin t)``, ``t`` in
    ``[0, pi]``; the lower one is ``(1 - cos t, 0.5 - sin t)``, i.e. the
    flipped circle shifted by ``(1, -0.5)``.  Each gets ``n / 2`` evenly
    spaced points and label 0 or 1.
    """
    if n < 2 or n % 2:
        raise ValueError(f"n must be even and >= 2, got {n}")
    half = n // 2
    t = np.linspace(0.0, np.pi, half)
    upper = np.column_stack([np.cos(t), np.sin(t)])
    lower = np.column_stack([1.0 - np.cos(t), 0.5 - np.sin(t)])
    X = np.vstack([upper, lower])
    y = np.repeat([0, 1], half)
    if noise > 0:
        rng = np.random.default_rng(seed)
        X = X + rng.normal(scale=noise, size=X.shape)
    return DataMatrix(X=X, labels=y, feature_names=["x", "y"],
                      provenance=f"two_moons(n={n}, noise={noise}, seed={seed})")


def gaussian_affinity(X, sigma):
    """Dense Gaussian kernel ``exp(-||x_i - x_j||^2 / (2 sigma^2))`` with zero diagonal."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    X = X.X if isinstance(X, DataMatrix) else np.asarray(X, dtype=float)
    diff = X[:, None, :] - X[None, :, :]
    sq = np.einsum("ijk,ijk->ij", diff, diff)
    with np.errstate(under="ignore"):
        A = np.exp(-sq / (2.0 * sigma * sigma))
    np.fill_diagonal(A, 0.0)
    return A


BUILTIN = {"wine": ("wine.csv", "class"), "ecoli": ("ecoli.csv", "class")}


def load_builtin(name):
    """Load a bundled benchmark table (``wine`` or ``ecoli``) with its class labels."""
    try:
        fname, label = BUILTIN[name]
    except KeyError:
        raise ValueError(f"unknown dataset {name!r}; choose from {sorted(BUILTIN)}") from None
    with resources.as_file(resources.files("ancmm.datasets") / fname) as p:
        data = load_csv(p, has_header=True, label_column=label)
    data.provenance = f"builtin:{name}"
    return data


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` through a temporary file and an atomic rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def matrix_to_csv(A):
    buf = io.StringIO()
    np.savetxt(buf, np.atleast_2d(A), delimiter=",", fmt=FLOAT_FMT)
    return buf.getvalue()


def edge_list_text(graph, edge_eps=1e-8):
    G = np.asarray(graph, dtype=float)
    rows, cols = np.nonzero(G > edge_eps)
    lines = ["i,j,weight"]
    lines += [f"{i},{j},{FLOAT_FMT % G[i, j]}" for i, j in zip(rows.tolist(), cols.tolist())]
    return "\n".join(lines) + "\n"


def labels_text(labels):
    return "label\n" + "".join(f"{int(v)}\n" for v in np.asarray(labels).ravel())


def traces_text(record):
    cols = ["objective", "epsilon", "components"]
    series = [record.objective_trace, record.epsilon_trace, record.component_counts]
    length = max((len(s) for s in series), default=0)
    lines = ["iteration," + ",".join(cols)]
    for t in range(length):
        vals = []
        for s in series:
            if t < len(s):
                v = s[t]
                vals.append(str(int(v)) if isinstance(v, (int, np.integer)) else FLOAT_FMT % v)
            else:
                vals.append("")
        lines.append(f"{t}," + ",".join(vals))
    return "\n".join(lines) + "\n"


def export_results(record, graph, path_prefix, labels=None, edge_eps=1e-8):
    """Write the run record, graph edge list, labels and traces next to ``path_prefix``.

    Produces ``<prefix>.record.json``, ``<prefix>.edges.csv``,
    ``<prefix>.labels.csv`` (when labels are given) and
    ``<prefix>.traces.csv``.  Every file is written atomically.  Returns the
    written paths keyed by kind.
    """
    prefix = str(path_prefix)
    paths = {
        "record": Path(prefix + ".record.json"),
        "edges": Path(prefix + ".edges.csv"),
        "traces": Path(prefix + ".traces.csv"),
    }
    try:
        atomic_write_text(paths["record"], record.to_json())
        if graph is not None:
            atomic_write_text(paths["edges"], edge_list_text(graph, edge_eps))
        else:
            del paths["edges"]
        atomic_write_text(paths["traces"], traces_text(record))
        if labels is not None:
            paths["labels"] = Path(prefix + ".labels.csv")
            atomic_write_text(paths["labels"], labels_text(labels))
    except OSError as exc:
        raise OSError(f"failed writing results under {prefix!r}: {exc}") from exc
    return paths


def read_labels(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return np.array([int(r[0]) for r in rows[1:] if r], dtype=int)


def read_edge_list(path, n):
    G = np.zeros((n, n))
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        for i, j, w in reader:
            G[int(i), int(j)] = float(w)
    return G
