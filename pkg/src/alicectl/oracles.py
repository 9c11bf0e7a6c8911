"""Regret comparators. These see the true A and live on the harness side only."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .linear_env import RANDOM_POLICY_STREAM, stream


class NotStabilizableError(RuntimeError):
    pass


@dataclass
class LqrSolution:
    P: np.ndarray
    K_star: np.ndarray
    closed_loop_radius: float
    residual: float
    iterations: int


def riccati_residual(A, B, Q, R, P):
    return float(np.linalg.norm(kernels.riccati_map(A, B, Q, R, P) - P))


def solve_dare(A, B, eta, beta, rtol=1e-12, max_iters=100_000) -> LqrSolution:
    """Infinite-horizon LQR for cost sum eta|x|^2 + beta|u|^2 by value iteration."""
    A = np.ascontiguousarray(A, dtype=float)
    B = np.ascontiguousarray(np.atleast_2d(B), dtype=float)
    n, m = B.shape
    Q = eta * np.eye(n)
    R = beta * np.eye(m)
    P, iters, ok = kernels.dare_iterate(A, B, Q, R, rtol, max_iters)
    if not ok:
        raise NotStabilizableError(f"Riccati iteration did not converge in {iters} iterations")
    K = -np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
    radius = float(np.max(np.abs(np.linalg.eigvals(A + B @ K))))
    return LqrSolution(P=P, K_star=K, closed_loop_radius=radius,
                       residual=riccati_residual(A, B, Q, R, P), iterations=int(iters))


def baseline_policy(kind, m, lqr=None, seed=0):
    """Return x -> u for one of 'lqr_oracle', 'zero', 'random'."""
    if kind == "lqr_oracle":
        if lqr is None:
            raise ValueError("lqr_oracle needs a solved LqrSolution")
        K = lqr.K_star
        return lambda x: K @ x
    if kind == "zero":
        return lambda x: np.zeros(m)
    if kind == "random":
        rng = stream(seed, RANDOM_POLICY_STREAM)
        return lambda x: rng.standard_normal(m)
    raise ValueError(f"unknown baseline {kind!r}")
