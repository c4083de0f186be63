"""Graph Laplacians, low eigenpairs and connected components."""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

SIGN_EPS = 1e-8


@dataclass(frozen=True)
class SpectralEmbedding:
    F: np.ndarray
    eigenvalues: np.ndarray


@dataclass(frozen=True)
class ComponentLabels:
    labels: np.ndarray
    count: int


def laplacian(S):
    """Unnormalised Laplacian ``D - W`` of the symmetrised graph ``W = (S + S^T) / 2``."""
    S = np.asarray(S, dtype=float)
    W = 0.5 * (S + S.T)
    L = -W
    L[np.diag_indices_from(L)] += W.sum(axis=1)
    return L


def _fix_signs(V):
    for j in range(V.shape[1]):
        nz = np.flatnonzero(np.abs(V[:, j]) > SIGN_EPS)
        if nz.size and V[nz[0], j] < 0:
            V[:, j] = -V[:, j]
    return V


def smallest_eigenpairs(L, c):
    """The ``c`` smallest eigenvalues of a symmetric matrix and an orthonormal eigenbasis.

    Uses LAPACK's dense symmetric solver on the full matrix, then keeps the
    lowest ``c`` pairs.  Each eigenvector is sign-normalised so that its first
    coordinate of magnitude above 1e-8 is positive.
    """
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    if not 1 <= c <= n:
        raise ValueError(f"c must satisfy 1 <= c <= n (got c={c}, n={n})")
    L = 0.5 * (L + L.T)
    w, V = eigh(L, subset_by_index=[0, c - 1])
    return SpectralEmbedding(F=_fix_signs(np.ascontiguousarray(V)), eigenvalues=w)


def zero_threshold(L, eps_rank=1e-8):
    L = np.asarray(L, dtype=float)
    return eps_rank * (1.0 + np.trace(L) / L.shape[0])


def count_zero_eigenvalues(L, c_plus_1, eps_rank=1e-8):
    """How many of the ``c_plus_1`` smallest eigenvalues fall below ``eps_rank * (1 + tr(L)/n)``."""
    if eps_rank <= 0:
        raise ValueError("eps_rank must be positive")
    L = np.asarray(L, dtype=float)
    m = min(int(c_plus_1), L.shape[0])
    w = eigh(0.5 * (L + L.T), eigvals_only=True, subset_by_index=[0, m - 1])
    return int(np.sum(w < zero_threshold(L, eps_rank)))


class UnionFind:
    """Disjoint sets over ``range(n)`` with path halving and union by size."""

    def __init__(self, n):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x):
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True


def connected_components(S, edge_eps=1e-8):
    """Components of the graph with edges ``S_ij > edge_eps`` (either direction).

    Labels are numbered in order of first appearance, so sample 0 is always
    in component 0.
    """
    S = np.asarray(S, dtype=float)
    n = S.shape[0]
    uf = UnionFind(n)
    rows, cols = np.nonzero((S > edge_eps) | (S.T > edge_eps))
    for i, j in zip(rows.tolist(), cols.tolist()):
        if i < j:
            uf.union(i, j)
    labels = np.empty(n, dtype=int)
    seen = {}
    for i in range(n):
        root = uf.find(i)
        if root not in seen:
            seen[root] = len(seen)
        labels[i] = seen[root]
    return ComponentLabels(labels=labels, count=len(seen))
