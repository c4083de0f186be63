"""Adaptive-neighbour graph construction.

Each row of the affinity graph solves

    min_s || s + m_i / (2 alpha_i) ||^2   s.t.  s >= 0,  sum(s) = 1,  s_ii = 0,

whose solution is ``s_ij = (phi - m_ij / (2 alpha_i))_+``.  With the costs
of row ``i`` sorted ascending, the row keeps exactly ``k`` neighbours when
``alpha_i`` lies in ``((k m_k - sum_{j<=k} m_j) / 2, (k m_{k+1} - sum_{j<=k} m_j) / 2]``.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateRow, ShapeError
from .marcus import check_marcus_condition

ALPHA_INTERIOR = 0.9


@dataclass(frozen=True)
class SparsityParams:
    """Neighbour count and the regularisers that realise it.

    ``alpha_rows`` puts each row at exactly ``k`` neighbours.  ``alpha`` is
    the single global value ``max_i`` of the per-row upper bounds, so that
    every row keeps at least ``k`` neighbours; ``two_neighbor_bound`` is the
    same maximum taken at ``k = 2`` and never exceeds ``alpha``.
    """

    k: int
    alpha: float
    alpha_rows: np.ndarray
    two_neighbor_bound: float = 0.0
    degenerate_rows: tuple = ()


@dataclass(frozen=True)
class Ordering:
    permutation: np.ndarray
    found: bool


def squared_distances(X):
    """Exact pairwise squared Euclidean distances, symmetric with zero diagonal."""
    X = np.asarray(X, dtype=float)
    sq = np.einsum("ij,ij->i", X, X)
    D = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(D, 0.0, out=D)
    D = 0.5 * (D + D.T)
    np.fill_diagonal(D, 0.0)
    return D


def pairwise_cost(X, F=None, lam=0.0, base=None):
    """Cost matrix ``m_ij = ||x_i - x_j||^2 + lam * ||f_i - f_j||^2``.

    ``base`` may supply a precomputed ``squared_distances(X)``; the data term
    is then reused instead of recomputed.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    X = np.asarray(X, dtype=float)
    M = squared_distances(X) if base is None else np.array(base, dtype=float)
    if F is not None:
        F = np.asarray(F, dtype=float)
        if F.ndim != 2 or F.shape[0] != X.shape[0]:
            raise ShapeError(
                f"embedding has shape {F.shape}, expected ({X.shape[0]}, c)"
            )
        if lam > 0:
            M = M + lam * squared_distances(F)
    return M


def solve_row(m, alpha, exclude_self=None):
    """Closed-form Euclidean projection of ``-m / (2 alpha)`` onto the simplex.

    Parameters
    ----------
    m : array_like, shape (n,)
        Cost row.
    alpha : float
        Positive regulariser; larger values admit more neighbours.
    exclude_self : int, optional
        Index pinned to zero (the sample itself).

    Returns
    -------
    ndarray, shape (n,)
        Nonnegative weights summing to one.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    m = np.asarray(m, dtype=float)
    n = m.size
    idx = np.arange(n)
    if exclude_self is not None:
        idx = idx[idx != exclude_self]
    costs = m[idx]
    order = np.argsort(costs, kind="stable")
    sorted_costs = costs[order]
    # c_j enters the support iff (j - 1) c_j - sum_{l<j} c_l < 2 alpha; the left
    # side is nondecreasing in j and is evaluated exactly as alpha_interval does
    sizes = np.arange(1, sorted_costs.size + 1)
    head = np.cumsum(sorted_costs)
    prev = np.concatenate(([0.0], head[:-1]))
    active = (sizes - 1) * sorted_costs - prev < 2.0 * alpha
    k = int(np.flatnonzero(active)[-1]) + 1
    phi = 1.0 / k + head[k - 1] / (2.0 * alpha * k)
    weights = np.maximum(phi - sorted_costs[:k] / (2.0 * alpha), 0.0)
    weights /= weights.sum()
    out = np.zeros(n)
    out[idx[order[:k]]] = weights
    return out


def alpha_interval(m_sorted, k):
    """Open-closed interval of ``alpha`` giving exactly ``k`` neighbours for one sorted row."""
    m_sorted = np.asarray(m_sorted, dtype=float)
    head = float(np.cumsum(m_sorted)[k - 1])
    lo = 0.5 * (k * m_sorted[k - 1] - head)
    hi = 0.5 * (k * m_sorted[k] - head) if k < m_sorted.size else np.inf
    return lo, hi


def _row_alpha(row, k):
    """Interior alpha for one ascending cost row; widens ``k`` past boundary ties."""
    kk = k
    while kk < row.size and row[kk] <= row[kk - 1]:
        kk += 1
    lo, hi = alpha_interval(row, kk)
    if np.isinf(hi):
        return (2.0 * lo if lo > 0 else 1.0), kk
    return lo + ALPHA_INTERIOR * (hi - lo), kk


def select_alpha(M, k, strict=False):
    """Choose per-row and global regularisers for a target neighbour count ``k``.

    Each row's ``alpha_i`` sits at 90% of the way through its exact-``k``
    interval, computed on the row's costs sorted ascending (self excluded).
    When the ``k``-th and ``(k+1)``-th smallest costs tie, exactly ``k``
    neighbours is unattainable; the row then admits every tied neighbour
    (all-equal costs give the uniform row) and its index is listed in
    ``degenerate_rows``.  With ``strict=True`` such rows raise
    :class:`DegenerateRow` instead.

    The global ``alpha`` is the largest upper interval end over rows,
    ``max_i (k m_i,k+1 - sum_{j<=k} m_ij) / 2``.  At ``k = 2`` this is
    ``max_i (m_i3 - (m_i1 + m_i2) / 2)``, reported as ``two_neighbor_bound``.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if not 2 <= k < n:
        raise ValueError(f"k must satisfy 2 <= k < n (got k={k}, n={n})")
    alpha_rows = np.empty(n)
    upper = np.full(n, -np.inf)
    two_bound = np.full(n, -np.inf)
    degenerate = []
    for i in range(n):
        row = np.sort(np.delete(M[i], i), kind="stable")
        alpha_rows[i], kk = _row_alpha(row, k)
        if kk != k:
            if strict:
                raise DegenerateRow(
                    f"row {i}: costs tie at neighbour rank {k}; "
                    f"fewer than {k + 1} distinct values available"
                )
            degenerate.append(i)
        upper[i] = alpha_interval(row, kk)[1] if kk < row.size else alpha_rows[i]
        if row.size > 2:
            two_bound[i] = row[2] - 0.5 * (row[0] + row[1])
    alpha = float(np.max(upper))
    if not alpha > 0:
        alpha = float(np.max(alpha_rows))
    return SparsityParams(
        k=k,
        alpha=alpha,
        alpha_rows=alpha_rows,
        two_neighbor_bound=float(np.max(two_bound)),
        degenerate_rows=tuple(degenerate),
    )


def solve_rows(M, alpha):
    """Row-stochastic graph from a cost matrix, one closed-form solve per row.

    ``alpha`` is a scalar shared by all rows or a length-``n`` array of
    per-row values.  Each row writes only its own slice, so the result does
    not depend on evaluation order.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    alphas = np.broadcast_to(np.asarray(alpha, dtype=float), (n,))
    S = np.zeros((n, n))
    for i in range(n):
        S[i] = solve_row(M[i], alphas[i], exclude_self=i)
    return S


def symmetrize(S):
    S = np.asarray(S, dtype=float)
    return 0.5 * (S + S.T)


def _path_search(S, start, budget):
    """Depth-first search for a path whose every vertex touches the two before it.

    Neighbours are tried strongest first, so the first branch is the greedy
    path.  At most ``budget`` vertices are expanded; returns ``None`` when no
    path is found within that.
    """
    n = S.shape[0]
    adj = S > 0
    path = [start]
    visited = np.zeros(n, dtype=bool)
    visited[start] = True
    stack = []
    expanded = 0

    def candidates():
        ok = adj[path[-1]] & ~visited
        if len(path) >= 2:
            ok &= adj[path[-2]]
        cand = np.flatnonzero(ok)
        return list(cand[np.argsort(-S[path[-1], cand], kind="stable")])

    stack.append(candidates())
    while stack:
        if len(path) == n:
            return np.array(path)
        if not stack[-1] or expanded >= budget:
            if expanded >= budget:
                return None
            stack.pop()
            visited[path.pop()] = False
            continue
        nxt = int(stack[-1].pop(0))
        expanded += 1
        path.append(nxt)
        visited[nxt] = True
        stack.append(candidates())
    return None


def order_for_marcus(S, restarts=10, seed=0, budget=None):
    """Search for a relabelling that makes the first two superdiagonals positive.

    Looks for a vertex sequence in which every new vertex is adjacent to both
    of the two preceding ones, exploring the strongest edges first with
    backtracking capped at ``budget`` expansions per start (default ``4 n``).
    The first start is the most weakly attached vertex; later ones are drawn
    from a fixed random stream.  Returns the identity with ``found=False`` if
    no attempt succeeds, which is always the case for a disconnected graph.
    """
    S = np.asarray(S, dtype=float)
    n = S.shape[0]
    identity = np.arange(n)
    if check_marcus_condition(S):
        return Ordering(identity, True)
    off = S.copy()
    np.fill_diagonal(off, 0.0)
    rng = np.random.default_rng(seed)
    starts = [int(np.argmin(off.max(axis=1)))]
    starts += [int(s) for s in rng.integers(0, n, size=restarts)]
    budget = 4 * n if budget is None else int(budget)
    for start in starts:
        path = _path_search(off, start, budget)
        if path is not None and check_marcus_condition(S[np.ix_(path, path)]):
            return Ordering(path, True)
    return Ordering(identity, False)
