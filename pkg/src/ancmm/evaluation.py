"""Clustering metrics and the baseline methods used for comparison."""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import linear_sum_assignment

from .data_io import DataMatrix
from .graph_learning import squared_distances


@dataclass(frozen=True)
class MetricReport:
    acc: float
    nmi: float
    pur: float

    def as_dict(self):
        return {"acc": self.acc, "nmi": self.nmi, "pur": self.pur}


def _pair(pred, truth):
    pred = np.asarray(pred).ravel()
    truth = np.asarray(truth).ravel()
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.size} predictions vs {truth.size} labels")
    if pred.size == 0:
        raise ValueError("empty label vectors")
    return pred, truth


def contingency(pred, truth):
    """Counts ``C[a, b]`` of samples with predicted cluster ``a`` and true class ``b``."""
    pred, truth = _pair(pred, truth)
    _, p = np.unique(pred, return_inverse=True)
    _, t = np.unique(truth, return_inverse=True)
    C = np.zeros((p.max() + 1, t.max() + 1), dtype=np.int64)
    np.add.at(C, (p, t), 1)
    return C


def accuracy(pred, truth):
    """Fraction of samples matched under the best one-to-one cluster/class assignment."""
    C = contingency(pred, truth)
    rows, cols = linear_sum_assignment(-C)
    return float(C[rows, cols].sum() / C.sum())


def _entropy(counts):
    p = counts[counts > 0] / counts.sum()
    return float(-np.sum(p * np.log(p)))


def nmi(pred, truth):
    """Mutual information over the geometric mean of the two entropies (natural log)."""
    C = contingency(pred, truth).astype(float)
    n = C.sum()
    P = C / n
    pa = P.sum(axis=1)
    pb = P.sum(axis=0)
    nz = P > 0
    mi = float(np.sum(P[nz] * np.log(P[nz] / np.outer(pa, pb)[nz])))
    ha, hb = _entropy(pa), _entropy(pb)
    if ha == 0.0 or hb == 0.0:
        return 0.0
    return float(min(max(mi / np.sqrt(ha * hb), 0.0), 1.0))


def purity(pred, truth):
    C = contingency(pred, truth)
    return float(C.max(axis=1).sum() / C.sum())


def evaluate(pred, truth):
    return MetricReport(acc=accuracy(pred, truth), nmi=nmi(pred, truth), pur=purity(pred, truth))


def _data(X):
    return X.X if isinstance(X, DataMatrix) else np.asarray(X, dtype=float)


def _kmeanspp(X, c, rng):
    n = X.shape[0]
    centers = np.empty((c, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for j in range(1, c):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=d2 / total)
        centers[j] = X[idx]
        d2 = np.minimum(d2, np.sum((X - centers[j]) ** 2, axis=1))
    return centers


def lloyd(X, centers, max_iter=300, tol=1e-10):
    """Lloyd iterations from given centres; returns labels, centres, inertia history."""
    X = _data(X)
    centers = np.array(centers, dtype=float)
    history = []
    labels = None
    for _ in range(max_iter):
        d2 = squared_distances(np.vstack([X, centers]))[: X.shape[0], X.shape[0]:]
        labels = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(X.shape[0]), labels].sum()))
        new = centers.copy()
        for j in range(centers.shape[0]):
            members = labels == j
            if members.any():
                new[j] = X[members].mean(axis=0)
        shift = float(np.max(np.abs(new - centers)))
        centers = new
        if shift <= tol:
            break
    d2 = squared_distances(np.vstack([X, centers]))[: X.shape[0], X.shape[0]:]
    labels = np.argmin(d2, axis=1)
    history.append(float(d2[np.arange(X.shape[0]), labels].sum()))
    return labels, centers, history


def kmeans(X, c, restarts=30, seed=0, max_iter=300):
    """k-means with k-means++ seeding; keeps the lowest-inertia labelling over ``restarts``."""
    X = _data(X)
    n = X.shape[0]
    if not 1 <= c <= n:
        raise ValueError(f"c must satisfy 1 <= c <= n (c={c}, n={n})")
    if c == 1:
        return np.zeros(n, dtype=int)
    rng = np.random.default_rng(seed)
    best, best_inertia = None, np.inf
    for _ in range(restarts):
        labels, _, history = lloyd(X, _kmeanspp(X, c, rng), max_iter=max_iter)
        if history[-1] < best_inertia:
            best, best_inertia = labels, history[-1]
    return best


def knn_gaussian_affinity(X, knn=10):
    """Symmetric k-NN Gaussian affinity with bandwidth = median k-NN distance."""
    X = _data(X)
    n = X.shape[0]
    knn = min(knn, n - 1)
    D2 = squared_distances(X)
    np.fill_diagonal(D2, np.inf)
    nbrs = np.argsort(D2, axis=1, kind="stable")[:, :knn]
    rows = np.repeat(np.arange(n), knn)
    d = np.sqrt(D2[rows, nbrs.ravel()])
    sigma = float(np.median(d))
    if not sigma > 0:
        sigma = 1.0
    W = np.zeros((n, n))
    W[rows, nbrs.ravel()] = np.exp(-(d ** 2) / (2.0 * sigma ** 2))
    return np.maximum(W, W.T)


def spectral_baseline(X, c, knn=10, seed=0, restarts=30):
    """Normalised-cut spectral clustering on a k-NN Gaussian graph."""
    X = _data(X)
    n = X.shape[0]
    if not 1 <= c <= n:
        raise ValueError(f"c must satisfy 1 <= c <= n (c={c}, n={n})")
    if c == n:
        return np.arange(n)
    W = knn_gaussian_affinity(X, knn)
    deg = W.sum(axis=1)
    inv = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
    L = np.eye(n) - inv[:, None] * W * inv[None, :]
    _, U = eigh(0.5 * (L + L.T), subset_by_index=[0, c - 1])
    norms = np.linalg.norm(U, axis=1, keepdims=True)
    U = U / np.where(norms > 0, norms, 1.0)
    return kmeans(U, c, restarts=restarts, seed=seed)


def can_mode(X, cfg):
    """The same alternating scheme with the plain row-stochastic graph update."""
    from .clustering import run

    return run(X, cfg, doubly_stochastic=False)
