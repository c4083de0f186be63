"""Entropic optimal transport with uniform marginals over a kernel ``S**omega``.

For a symmetric ``S`` the minimiser of

    <P, -log S> + (1/omega) * sum_ij P_ij log P_ij,   P 1 = 1,  P^T 1 = 1

satisfies ``P_ij = a_i * S_ij**omega * b_j``.  At ``omega = 1`` this is the
same diagonal scaling that :func:`ancmm.marcus.marcus_map` computes, so the
solver here serves as an independent check of that routine.  Zero entries of
``S`` (cost ``+inf``) are masked rather than logged.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidOmega, NonConvergence
from .marcus import DEFAULT_MAX_ITER, DEFAULT_TOL


@dataclass(frozen=True)
class TransportPlan:
    """Converged plan together with the Lagrange multipliers of both marginals."""

    P: np.ndarray
    omega: float
    dual_row: np.ndarray
    dual_col: np.ndarray
    iterations: int
    residual: float

    def entropy(self):
        p = self.P[self.P > 0]
        return float(-np.sum(p * np.log(p)))


def entropic_plan(S, omega=1.0, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Solve the entropic OT problem on ``K = S**omega`` by alternating marginal scaling.

    Parameters
    ----------
    S : array_like, shape (n, n)
        Nonnegative matrix with total support.
    omega : float
        Inverse regularisation weight, ``> 0``.
    tol : float
        Stop once the row-marginal defect (columns are exact after each sweep)
        is at most ``tol``.
    max_iter : int

    Returns
    -------
    TransportPlan
        ``dual_row`` and ``dual_col`` are the multipliers ``phi``, ``xi`` in
        ``P_ij = exp(-1/2 - omega phi_i) S_ij**omega exp(-1/2 - omega xi_j)``,
        gauge-fixed so that ``sum(phi) == sum(xi)``.
    """
    if not np.isfinite(omega) or omega <= 0:
        raise InvalidOmega(f"omega must be positive and finite, got {omega!r}")
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"S must be square, got shape {S.shape}")
    if np.any(S < 0) or not np.all(np.isfinite(S)):
        raise ValueError("S must be finite and nonnegative")

    support = S > 0
    K = np.zeros_like(S)
    K[support] = S[support] ** omega

    n = S.shape[0]
    a = np.ones(n)
    b = np.ones(n)
    residual = np.inf
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for it in range(1, max_iter + 1):
            a = 1.0 / (K @ b)
            b = 1.0 / (K.T @ a)
            row = a * (K @ b)
            residual = float(np.max(np.abs(row - 1.0)))
            if not np.isfinite(residual):
                raise NonConvergence(
                    f"entropic scaling became non-finite after {it} iterations", it, residual
                )
            if residual <= tol:
                break
        else:
            raise NonConvergence(
                f"entropic scaling did not converge in {max_iter} iterations "
                f"(marginal defect {residual:.3e})",
                max_iter,
                residual,
            )

    P = a[:, None] * K * b[None, :]
    log_a = np.log(a)
    log_b = np.log(b)
    shift = 0.5 * (log_a.mean() - log_b.mean())
    log_a -= shift
    log_b += shift
    dual_row = -(log_a + 0.5) / omega
    dual_col = -(log_b + 0.5) / omega
    return TransportPlan(
        P=P,
        omega=float(omega),
        dual_row=dual_row,
        dual_col=dual_col,
        iterations=it,
        residual=residual,
    )


def plan_symmetry_check(plan):
    """Largest asymmetry ``max |P_ij - P_ji|`` of a transport plan."""
    P = plan.P if isinstance(plan, TransportPlan) else np.asarray(plan, dtype=float)
    return float(np.max(np.abs(P - P.T)))


def ot_objective(P, S, omega):
    """Evaluate ``<P, -log S> + (1/omega) sum P log P`` with ``0 log 0 = 0``.

    Returns ``inf`` if ``P`` puts mass where ``S`` is zero.
    """
    P = np.asarray(P, dtype=float)
    S = np.asarray(S, dtype=float)
    mass = P > 0
    if np.any(mass & (S <= 0)):
        return np.inf
    p = P[mass]
    return float(np.sum(-p * np.log(S[mass])) + np.sum(p * np.log(p)) / omega)
