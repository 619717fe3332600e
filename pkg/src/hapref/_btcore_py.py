"""Pure-NumPy kernels for Bradley-Terry estimation.

Fallback backend used when the compiled extension (``hapref._btcore``) is
unavailable. Both backends expose the same three functions over a win-count
matrix ``wins`` (``wins[i, j]`` = wins of item i over item j, zero diagonal,
regularization already added by the caller) and must agree numerically.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def ilsr_pi_step(wins: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """One Luce-spectral-ranking step: stationary distribution of the chain
    whose rate j->i is wins[i, j] / (pi_i + pi_j).

    Returns the stationary distribution normalized to sum 1.
    """
    n = pi.shape[0]
    denom = pi[:, None] + pi[None, :]
    rates = wins.T / denom  # rates[j, i] = wins[i, j] / (pi_i + pi_j)
    np.fill_diagonal(rates, 0.0)
    generator = rates - np.diag(rates.sum(axis=1))
    # balance equations pi^T Q = 0 with the last one replaced by sum(pi) = 1
    a = generator.T.copy()
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    dist = np.linalg.solve(a, b)
    dist = np.maximum(dist, 1e-300)
    return dist / dist.sum()


def mm_pi_step(wins: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """One minorization-maximization step: pi_i <- w_i / sum_j n_ij / (pi_i + pi_j)."""
    matches = wins + wins.T
    denom = pi[:, None] + pi[None, :]
    s = (matches / denom).sum(axis=1)
    w = wins.sum(axis=1)
    if np.any(w <= 0) or np.any(s <= 0):
        raise ValueError("every item needs at least one win and one match; add regularization")
    return w / s


def matrix_log_likelihood(wins: np.ndarray, theta: np.ndarray) -> float:
    """Sum over ordered pairs of wins[i, j] * ln P(i beats j) under theta."""
    diff = theta[None, :] - theta[:, None]  # diff[i, j] = theta_j - theta_i
    log_p = -np.logaddexp(0.0, diff)
    return float((wins * log_p).sum() - np.trace(wins * log_p))
