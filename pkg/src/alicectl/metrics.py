"""Losses, regret and the gain-drift / contraction diagnostics."""
from __future__ import annotations

import warnings
from dataclasses import astuple, dataclass

import numpy as np

CSV_COLUMNS = (
    "t", "seed", "controller", "x_norm2", "x_norm_inf", "loss", "cum_loss", "regret",
    "gain_drift", "zeta", "constraint_active", "mode", "converged",
)
AGG_METRICS = ("x_norm2", "x_norm_inf", "loss", "cum_loss", "regret", "gain_drift", "zeta")


@dataclass
class RolloutRecord:
    """One row per transition; row t describes x_t and the decision made at t-1."""

    t: int
    seed: int
    controller: str
    x_norm2: float
    x_norm_inf: float
    loss: float
    cum_loss: float
    regret: float = float("nan")
    gain_drift: float = 0.0
    zeta: float | None = None
    constraint_active: bool = False
    mode: str = ""
    converged: bool = True

    def as_row(self):
        return astuple(self)


def step_loss(x_t, u_prev, eta, beta):
    x_t = np.asarray(x_t, dtype=float)
    u_prev = np.asarray(u_prev, dtype=float)
    return 0.5 * eta * float(x_t @ x_t) + 0.5 * beta * float(u_prev @ u_prev)


def regret_curve(alice_losses, oracle_losses):
    a = np.asarray(alice_losses, dtype=float)
    o = np.asarray(oracle_losses, dtype=float)
    if a.shape != o.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {o.shape}")
    return np.cumsum(a - o)


def phi(x, m):
    """Phi = x^T kron I_m, so that Phi @ vec(K) == K @ x (column-major vec)."""
    return np.kron(np.atleast_2d(np.asarray(x, dtype=float)), np.eye(m))


def zeta_bound(S, B, eta, beta, nu_t, nu_t1, x_t, u_prev, u_hat_prev2, x_prev, x_prev2):
    """Gain-drift bound zeta_t.

    ``S`` is sum_{i<=t} x_{i-1} x_{i-1}^T, ``x_prev``/``x_prev2`` are x_{t-1} and
    x_{t-2}, ``u_prev`` is u_{t-1} and ``u_hat_prev2`` is K_t x_{t-2}. The
    multipliers are for the squared-norm form of the ball constraint. Returns
    None when the denominator vanishes.
    """
    B = np.atleast_2d(B)
    m = B.shape[1]
    BtB = B.T @ B
    P1 = phi(x_prev, m)
    P2 = phi(x_prev2, m)
    num = (-2.0 * nu_t * P2.T @ (BtB @ u_hat_prev2)
           + eta * P1.T @ (B.T @ x_t)
           + (2.0 * nu_t1 + beta) * P1.T @ (BtB @ u_prev))
    hess = (eta + beta) * np.kron(S, BtB) + 2.0 * nu_t1 * P1.T @ BtB @ P1
    den = np.linalg.norm(hess, 2)
    if den == 0.0:
        return None
    b = np.linalg.norm(B, 2)
    return float(2.0 * b * np.linalg.norm(num) / den)


def contraction_frequency(records, alpha, x0_norm=None):
    """Fraction of active steps with |x_{t+1}| <= (alpha + zeta_t) |x_t|.

    ``records`` is one rollout in step order. Row t holds x_t together with the
    zeta and mode of the decision taken at t-1, so the check for row t compares
    against the previous row's norm (``x0_norm`` for the first row).
    """
    hits = total = 0
    prev = x0_norm
    for rec in records:
        if rec.mode == "active" and rec.zeta is not None and prev is not None:
            total += 1
            hits += rec.x_norm2 <= (alpha + rec.zeta) * prev
        prev = rec.x_norm2
    if total == 0:
        return None
    return hits / total


def aggregate(per_seed, T):
    """Per-step median / q25 / q75 of each metric across seeds.

    ``per_seed`` is a list of record lists for one controller. Truncated
    (diverged) rollouts contribute NaN past their last row and are ignored by
    the quantiles; ``n_alive`` counts the rollouts still running at each t.
    """
    out = {}
    for name in AGG_METRICS:
        M = np.full((len(per_seed), T), np.nan)
        for i, recs in enumerate(per_seed):
            for rec in recs:
                val = getattr(rec, name)
                if val is not None:
                    M[i, rec.t - 1] = val
        with warnings.catch_warnings():
            # all-NaN columns once every rollout has diverged
            warnings.simplefilter("ignore", RuntimeWarning)
            q = np.nanquantile(M, [0.5, 0.25, 0.75], axis=0)
        out[name] = {"median": q[0], "q25": q[1], "q75": q[2]}
    alive = np.zeros(T, dtype=int)
    for recs in per_seed:
        alive[: len(recs)] += 1
    out["n_alive"] = alive
    return out
