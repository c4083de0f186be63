"""Symmetric doubly stochastic scaling of nonnegative matrices.

The central routine, :func:`marcus_map`, finds a positive vector ``u`` such
that ``diag(u) @ S @ diag(u)`` has unit row and column sums.  Such a vector
exists exactly when ``S`` has total support; :func:`check_total_support`
decides that combinatorially and :func:`check_marcus_condition` is the cheap
sufficient test on the first two superdiagonals.
"""

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, maximum_bipartite_matching

from .exceptions import NonConvergence

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10_000


@dataclass(frozen=True)
class BalanceReport:
    iterations: int
    residual: float
    converged: bool


@dataclass(frozen=True)
class FlopBreakdown:
    add: int = 0
    mul: int = 0
    div: int = 0
    sqrt: int = 0

    def as_dict(self):
        return {"add": self.add, "mul": self.mul, "div": self.div, "sqrt": self.sqrt}


def _as_square(S, name="S"):
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"{name} must be a square 2-D array, got shape {S.shape}")
    if S.shape[0] < 1:
        raise ValueError(f"{name} must be non-empty")
    return S


def _is_symmetric(S, rtol=1e-12):
    scale = max(np.max(np.abs(S)), np.finfo(float).tiny)
    return np.max(np.abs(S - S.T)) <= rtol * scale


def _check_balance_input(S):
    S = _as_square(S)
    if not np.all(np.isfinite(S)):
        raise ValueError("S contains non-finite entries")
    if np.any(S < 0):
        raise ValueError("S must be entrywise nonnegative")
    if not _is_symmetric(S):
        raise ValueError("S must be symmetric")
    zero_rows = np.flatnonzero(~np.any(S > 0, axis=1))
    if zero_rows.size:
        raise ValueError(f"S has all-zero rows at indices {zero_rows[:10].tolist()}")
    return S


def check_marcus_condition(S):
    """Return True when both the first and second superdiagonals are strictly positive.

    For a symmetric nonnegative matrix this is a sufficient condition for
    total support, hence for the existence of a symmetric doubly stochastic
    scaling.  Matrices with ``n < 3`` have no second superdiagonal, so only
    the first is tested there.

    Raises
    ------
    ValueError
        If ``S`` is not symmetric (relative tolerance 1e-12).
    """
    S = _as_square(S)
    if not _is_symmetric(S):
        raise ValueError("check_marcus_condition requires a symmetric matrix")
    return bool(np.all(np.diagonal(S, 1) > 0) and np.all(np.diagonal(S, 2) > 0))


def check_total_support(S):
    """Decide whether every positive entry of ``S`` lies on a positive diagonal.

    A perfect matching of the row/column bipartite graph gives one positive
    diagonal.  An edge ``(i, j)`` outside that matching lies on some other
    perfect matching iff it closes an alternating cycle, i.e. iff row ``i``
    and the row matched to column ``j`` share a strongly connected component
    of the digraph ``i -> mate(j)`` over positive entries.
    """
    S = _as_square(S)
    pos = S > 0
    if not pos.any():
        return False
    n = S.shape[0]
    graph = csr_matrix(pos.astype(np.int8))
    row_to_col = maximum_bipartite_matching(graph, perm_type="column")
    if np.any(row_to_col < 0):
        return False
    col_to_row = np.empty(n, dtype=int)
    col_to_row[row_to_col] = np.arange(n)

    rows, cols = np.nonzero(pos)
    heads = col_to_row[cols]
    digraph = csr_matrix((np.ones(rows.size, dtype=np.int8), (rows, heads)), shape=(n, n))
    _, comp = connected_components(digraph, directed=True, connection="strong")
    return bool(np.all(comp[rows] == comp[heads]))


def marcus_map(S, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Scale a symmetric nonnegative matrix to a symmetric doubly stochastic one.

    Iterates the damped fixed-point update ``u <- sqrt(u / (S u))``, which has
    the same fixed point as ``u <- 1 / (S u)`` but cannot lock into a
    period-two cycle.  On convergence the scaled matrix is divided by its
    first column sum and symmetrised once more to remove roundoff.

    Parameters
    ----------
    S : array_like, shape (n, n)
        Symmetric, nonnegative, with no all-zero row.
    tol : float
        Stop once every row sum of the output is within ``tol`` of 1.
    max_iter : int
        Iteration cap.

    Returns
    -------
    M : ndarray, shape (n, n)
        The doubly stochastic matrix ``D S D`` (same zero pattern as ``S``).
    u : ndarray, shape (n,)
        Positive scaling vector, ``D = diag(u)``.
    report : BalanceReport

    Raises
    ------
    NonConvergence
        If ``max_iter`` is reached (typically: ``S`` lacks total support) or
        the iterates overflow.
    """
    S = _check_balance_input(S)
    u = 1.0 / np.sqrt(S.sum(axis=1))
    residual = np.inf
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for it in range(max_iter + 1):
            Su = S @ u
            r = u * Su
            # rescaled row sums r / r[0]: the first column sum is r[0] by symmetry
            residual = float(np.max(np.abs(r / r[0] - 1.0)))
            if not np.isfinite(residual) or not np.all(np.isfinite(u)) or np.any(u <= 0):
                raise NonConvergence(
                    f"Marcus iteration became non-finite after {it} iterations; "
                    "the matrix may lack total support",
                    it,
                    residual,
                )
            if residual <= tol:
                break
            if it == max_iter:
                raise NonConvergence(
                    f"Marcus iteration did not converge in {max_iter} iterations "
                    f"(row-sum defect {residual:.3e}); the matrix may lack total support",
                    it,
                    residual,
                )
            u = np.sqrt(u / Su)

    M = u[:, None] * S * u[None, :]
    first_col = M[:, 0].sum()
    M /= first_col
    M = 0.5 * (M + M.T)
    u = u / np.sqrt(first_col)
    residual = float(np.max(np.abs(M.sum(axis=1) - 1.0)))
    return M, u, BalanceReport(iterations=it, residual=residual, converged=True)


def degree_normalize_iterate(S, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Repeated degree normalisation ``S <- D^-1/2 S D^-1/2`` with ``D = diag(S 1)``.

    Kept as the reference baseline for :func:`marcus_map`; it reaches the same
    limit on totally supported inputs but touches the whole matrix each round.
    """
    S = _check_balance_input(S).copy()
    residual = np.inf
    for it in range(1, max_iter + 1):
        d = S.sum(axis=1)
        inv_sqrt = 1.0 / np.sqrt(d)
        S = inv_sqrt[:, None] * S * inv_sqrt[None, :]
        residual = float(np.max(np.abs(S.sum(axis=1) - 1.0)))
        if not np.isfinite(residual):
            raise NonConvergence(
                f"degree normalisation became non-finite after {it} iterations", it, residual
            )
        if residual <= tol:
            S = 0.5 * (S + S.T)
            return S, BalanceReport(iterations=it, residual=residual, converged=True)
    raise NonConvergence(
        f"degree normalisation did not converge in {max_iter} iterations "
        f"(row-sum defect {residual:.3e})",
        max_iter,
        residual,
    )


def count_flops_per_iteration(n):
    """Analytical per-iteration operation counts for both balancing schemes.

    Marcus: one matrix-vector product (``n**2`` multiplications and additions)
    and ``n`` reciprocals.  Degree normalisation: row sums (``n**2``
    additions), ``n`` square roots and reciprocals, and a two-sided diagonal
    rescale (``2 n**2`` multiplications).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    n2 = n * n
    marcus = FlopBreakdown(add=n2, mul=n2, div=n)
    degree = FlopBreakdown(add=n2, mul=2 * n2, div=n, sqrt=n)
    return marcus, degree
