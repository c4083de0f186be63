import itertools

import numpy as np
import pytest

STAR = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0], [1.0, 1.0, 0.0]])


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_positive_symmetric(rng, n):
    A = rng.uniform(0.1, 1.0, size=(n, n))
    return A + A.T


def random_band_matrix(rng, n, density=0.3):
    """Symmetric nonnegative, positive first and second superdiagonals, random extras."""
    A = np.where(rng.random((n, n)) < density, rng.random((n, n)), 0.0)
    A = np.triu(A, 3)
    for off in (1, 2):
        idx = np.arange(n - off)
        A[idx, idx + off] = rng.uniform(0.05, 1.0, size=idx.size)
    if rng.random() < 0.5:
        A[np.diag_indices(n)] = np.where(rng.random(n) < 0.5, rng.random(n), 0.0)
    return np.triu(A) + np.triu(A, 1).T


def brute_total_support(S):
    """Every positive entry on some positive permutation diagonal (n <= 8)."""
    n = S.shape[0]
    covered = np.zeros_like(S, dtype=bool)
    for perm in itertools.permutations(range(n)):
        if all(S[i, perm[i]] > 0 for i in range(n)):
            covered[np.arange(n), list(perm)] = True
    return bool(covered[S > 0].all()) and bool(covered.any())


def active_set_oracle(m, alpha, exclude_self=None):
    """Minimiser of ||s + m/(2 alpha)||^2 on the simplex by trying every support pattern."""
    n = m.size
    free = [j for j in range(n) if j != exclude_self]
    v = -np.asarray(m, dtype=float) / (2.0 * alpha)
    best, best_val = None, np.inf
    for r in range(1, len(free) + 1):
        for support in itertools.combinations(free, r):
            sup = list(support)
            # equality-constrained least squares on the support
            s = np.zeros(n)
            s[sup] = v[sup] + (1.0 - v[sup].sum()) / r
            if np.any(s[sup] < -1e-14):
                continue
            s = np.maximum(s, 0.0)
            val = float(np.sum((s - v) ** 2))
            if val < best_val - 1e-15:
                best, best_val = s, val
    return best


_ACCEPTANCE = []


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for the acceptance summary, then assert."""

    def record(ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} {request.node.name}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
