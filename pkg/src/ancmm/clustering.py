"""Doubly stochastic adaptive-neighbours clustering.

The driver alternates four updates until the learned graph splits into
exactly ``c`` connected components:

1. ``F``: the ``c`` lowest Laplacian eigenvectors of the current graph.
2. Row-wise adaptive-neighbour solves on ``||x_i - x_j||^2 + lam ||f_i - f_j||^2``.
3. Symmetrisation ``(S + S^T) / 2``.
4. Symmetric doubly stochastic scaling (:func:`ancmm.marcus.marcus_map`).

``lam`` doubles while the graph has fewer than ``c`` zero Laplacian
eigenvalues and halves while it has more.
"""

import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np

from . import graph_learning as gl
from .data_io import DataMatrix
from .exceptions import ConfigError, NonConvergence
from .marcus import marcus_map
from .spectral import (
    ComponentLabels,
    connected_components,
    count_zero_eigenvalues,
    laplacian,
    smallest_eigenpairs,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AncmmConfig:
    c: int
    k: int = 5
    lambda0: float = None
    max_outer: int = 50
    eps_rank: float = 1e-8
    edge_eps: float = 1e-8
    marcus_tol: float = 1e-10
    marcus_max_iter: int = 10_000
    objective_tol: float = 1e-6
    seed: int = 0
    random_lambda0: bool = False
    lambda_max: float = 1e12

    def validate(self, n):
        if not 2 <= self.k < n:
            raise ConfigError(f"k must satisfy 2 <= k < n (k={self.k}, n={n})")
        if not 1 <= self.c < n:
            raise ConfigError(f"c must satisfy 1 <= c < n (c={self.c}, n={n})")
        if self.max_outer < 1:
            raise ConfigError("max_outer must be >= 1")
        for name in ("eps_rank", "edge_eps", "marcus_tol", "objective_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.lambda0 is not None and not self.lambda0 > 0:
            raise ConfigError("lambda0 must be positive")

    def as_dict(self):
        return dataclasses.asdict(self)


@dataclass
class AncmmState:
    S: np.ndarray
    F: np.ndarray
    lam: float
    alpha: float
    iteration: int = 0
    zero_count: int = 0
    objective_trace: list = field(default_factory=list)
    epsilon_trace: list = field(default_factory=list)
    epsilon_ratio_trace: list = field(default_factory=list)
    component_counts: list = field(default_factory=list)
    lambda_trace: list = field(default_factory=list)
    ordering_found: list = field(default_factory=list)
    base_cost: np.ndarray = None


@dataclass
class ClusterResult:
    labels: ComponentLabels
    graph: np.ndarray
    iterations: int
    converged: bool
    rank_satisfied: bool
    state: AncmmState = None
    message: str = ""


def _data(X):
    return X.X if isinstance(X, DataMatrix) else np.asarray(X, dtype=float)


def objective(base_cost, S, F, lam, alpha):
    """``sum_ij ||x_i - x_j||^2 s_ij + alpha ||S||_F^2 + 2 lam Tr(F^T L_S F)``."""
    L = laplacian(S)
    return float(
        np.sum(base_cost * S) + alpha * np.sum(S * S) + 2.0 * lam * np.trace(F.T @ L @ F)
    )


def epsilon_diagnostic(S_hat, tol=1e-10, max_iter=10_000):
    """Squared Frobenius distance between ``S_hat`` and its doubly stochastic scaling.

    Returns ``(eps, norm_sq)`` where ``norm_sq = ||S_hat||_F^2``; the ratio
    ``eps / norm_sq`` measures how far the symmetrised graph was from doubly
    stochastic before scaling.
    """
    S_hat = np.asarray(S_hat, dtype=float)
    M, _, _ = marcus_map(S_hat, tol=tol, max_iter=max_iter)
    return float(np.sum((M - S_hat) ** 2)), float(np.sum(S_hat * S_hat))


def _balance(S_hat, cfg, seed, found_log):
    order = gl.order_for_marcus(S_hat, seed=seed)
    found_log.append(bool(order.found))
    # the scaled matrix is permutation-equivariant, so the ordering only
    # certifies feasibility; marcus_map's own monitor decides otherwise
    return marcus_map(S_hat, tol=cfg.marcus_tol, max_iter=cfg.marcus_max_iter)


def initialize(X, cfg):
    """Initial doubly stochastic graph from the plain adaptive-neighbour rows (``lam = 0``).

    Every row starts with exactly ``k`` neighbours (its own ``alpha_i``);
    later steps share the global ``alpha``, which is also the default
    initial ``lam``.
    """
    X = _data(X)
    n = X.shape[0]
    cfg.validate(n)
    base = gl.squared_distances(X)
    params = gl.select_alpha(base, cfg.k)
    S_hat = gl.symmetrize(gl.solve_rows(base, params.alpha_rows))
    found = []
    S, _, _ = _balance(S_hat, cfg, cfg.seed, found)
    if cfg.lambda0 is not None:
        lam = float(cfg.lambda0)
    elif cfg.random_lambda0:
        lam = float(params.alpha * np.random.default_rng(cfg.seed).uniform(0.5, 2.0))
    else:
        lam = float(params.alpha)
    emb = smallest_eigenpairs(laplacian(S), cfg.c)
    zero = count_zero_eigenvalues(laplacian(S), cfg.c + 1, cfg.eps_rank)
    return AncmmState(
        S=S,
        F=emb.F,
        lam=lam,
        alpha=params.alpha,
        zero_count=zero,
        ordering_found=found,
        base_cost=base,
    )


def _adapt_lambda(lam, zero_count, c):
    if zero_count < c:
        return 2.0 * lam
    if zero_count > c:
        return 0.5 * lam
    return lam


def step(state, X, cfg, doubly_stochastic=True):
    """One outer iteration; returns a new state and leaves ``state`` untouched.

    With ``doubly_stochastic=False`` the symmetrisation and scaling are
    skipped and the row-stochastic graph is kept (the plain CAN update).
    """
    X = _data(X)
    base = state.base_cost if state.base_cost is not None else gl.squared_distances(X)
    emb = smallest_eigenpairs(laplacian(state.S), cfg.c)
    F = emb.F
    lam = state.lam

    cost = gl.pairwise_cost(X, F, lam, base=base)
    S_r = gl.solve_rows(cost, state.alpha)
    S_hat = gl.symmetrize(S_r)
    eps_trace = list(state.epsilon_trace)
    ratio_trace = list(state.epsilon_ratio_trace)
    found = list(state.ordering_found)
    if doubly_stochastic:
        try:
            S_new, _, _ = _balance(S_hat, cfg, cfg.seed + state.iteration + 1, found)
        except NonConvergence as exc:
            raise NonConvergence(
                f"outer iteration {state.iteration + 1}: {exc}", exc.iterations, exc.residual
            ) from exc
        eps = float(np.sum((S_new - S_hat) ** 2))
        eps_trace.append(eps)
        ratio_trace.append(eps / float(np.sum(S_hat * S_hat)))
    else:
        S_new = S_r

    L_new = laplacian(S_new)
    zero = count_zero_eigenvalues(L_new, cfg.c + 1, cfg.eps_rank)
    comps = connected_components(gl.symmetrize(S_new), cfg.edge_eps).count
    obj = objective(base, S_new, F, lam, state.alpha)

    return AncmmState(
        S=S_new,
        F=F,
        lam=_adapt_lambda(lam, zero, cfg.c),
        alpha=state.alpha,
        iteration=state.iteration + 1,
        zero_count=zero,
        objective_trace=list(state.objective_trace) + [obj],
        epsilon_trace=eps_trace,
        epsilon_ratio_trace=ratio_trace,
        component_counts=list(state.component_counts) + [comps],
        lambda_trace=list(state.lambda_trace) + [lam],
        ordering_found=found,
        base_cost=base,
    )


def _finish(state, cfg, converged, message):
    labels = connected_components(gl.symmetrize(state.S), cfg.edge_eps)
    return ClusterResult(
        labels=labels,
        graph=state.S,
        iterations=state.iteration,
        converged=converged,
        rank_satisfied=labels.count == cfg.c,
        state=state,
        message=message,
    )


def run(X, cfg, doubly_stochastic=True):
    """Iterate :func:`step` until the rank condition holds and the objective settles.

    Non-convergence (iteration cap, runaway ``lam``) is reported through
    ``ClusterResult.converged`` and ``message`` rather than raised.
    """
    state = initialize(X, cfg)
    if not doubly_stochastic:
        state = dataclasses.replace(state, ordering_found=[])
    for _ in range(cfg.max_outer):
        state = step(state, X, cfg, doubly_stochastic=doubly_stochastic)
        trace = state.objective_trace
        log.debug(
            "iter %d: objective=%.6g zeros=%d lam=%.3g",
            state.iteration, trace[-1], state.zero_count, state.lam,
        )
        if state.lam > cfg.lambda_max:
            return _finish(state, cfg, False, f"lambda exceeded {cfg.lambda_max:g}")
        if state.zero_count == cfg.c and len(trace) >= 2:
            prev, cur = trace[-2], trace[-1]
            if abs(cur - prev) <= cfg.objective_tol * max(abs(prev), 1e-300):
                return _finish(state, cfg, True, "converged")
    return _finish(state, cfg, False, f"reached max_outer={cfg.max_outer}")
