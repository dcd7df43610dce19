"""
Independent reference computations used by the tests.

These are written for clarity, not speed: explicit loops and the normal
equations, never the production QR path.
"""

import numpy as np


def normal_equations_beta(X, y):
    X = np.asarray(X, dtype=float)
    return np.linalg.solve(X.T @ X, X.T @ y)


def double_sum_newey_west(X, e, lag, dof_adjust=True, blocks=None):
    """Bartlett HAC covariance by brute-force summation over row pairs."""
    X = np.asarray(X, dtype=float)
    n, k = X.shape
    blocks = np.zeros(n, dtype=int) if blocks is None else np.asarray(blocks)
    S = np.zeros((k, k))
    for t in range(n):
        for s in range(n):
            j = abs(t - s)
            if j > lag or blocks[t] != blocks[s]:
                continue
            # rows of one block are contiguous, so |t - s| is the time gap
            w = 1.0 - j / (lag + 1.0)
            S += w * e[t] * e[s] * np.outer(X[t], X[s])
    if dof_adjust:
        S *= n / (n - k)
    bread = np.linalg.inv(X.T @ X)
    return bread @ S @ bread


def hc0(X, e):
    X = np.asarray(X, dtype=float)
    bread = np.linalg.inv(X.T @ X)
    return bread @ (X.T * e**2) @ X @ bread


def random_design(rng, n=None, k=None, n_blocks=None):
    """Random full-rank design with optional contiguous block labels."""
    n = int(rng.integers(15, 51)) if n is None else n
    k = int(rng.integers(1, 13)) if k is None else k
    X = rng.normal(size=(n, k))
    X[:, 0] = 1.0
    y = X @ rng.normal(size=k) + rng.normal(size=n)
    n_blocks = int(rng.integers(1, 4)) if n_blocks is None else n_blocks
    blocks = np.repeat(np.arange(n_blocks), -(-n // n_blocks))[:n]
    return X, y, blocks


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))
