"""Per-step constrained problem over G = B K.

    minimize   J(G) + lam * |G - G_prev|_F
    subject to |c + G x|_2 <= r,   G in range(B)

The soft term is smoothed as lam * sqrt(|G - G_prev|_F^2 + eps) and the
problem is solved by accelerated projected gradient (see
:func:`alicectl.kernels.pg_solve`).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

SMOOTHING_EPS = 1e-12
ACTIVE_TOL = 1e-6


def column_projector(B):
    B = np.atleast_2d(B)
    return B @ np.linalg.pinv(B.T @ B) @ B.T


@dataclass
class StepProblem:
    S: np.ndarray
    C: np.ndarray
    q: float
    G_prev: np.ndarray
    P_B: np.ndarray
    eta: float
    beta: float
    lam: float = 0.0
    # hard constraint |c + G x| <= radius; None when not enforced this step
    c: np.ndarray | None = None
    x: np.ndarray | None = None
    radius: float | None = None

    @property
    def constrained(self):
        return self.c is not None

    def objective(self, G):
        """Exact (unsmoothed) objective."""
        return float(
            kernels.exact_objective(
                _f64(self.S), _f64(self.C), float(self.q), _f64(G), _f64(self.G_prev),
                float(self.lam), float(self.eta), float(self.beta),
            )
        )

    def feasible(self, G, tol=1e-8):
        if not self.constrained:
            return True
        return np.linalg.norm(self.c + G @ self.x) <= self.radius + tol


@dataclass
class SolveReport:
    G_opt: np.ndarray
    objective: float
    iterations: int
    constraint_active: bool
    nu_estimate: float
    converged: bool
    infeasible: bool = False
    low_rank: bool = False
    trace: np.ndarray | None = None


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def solve_unconstrained(S, C, eta, beta, P_B=None):
    """Minimizer of the quadratic part over range(B): -eta/(eta+beta) P_B C S^+."""
    G = -(eta / (eta + beta)) * C @ np.linalg.pinv(S)
    if P_B is not None:
        G = P_B @ G
    return G


def is_low_rank(S):
    return np.linalg.matrix_rank(S) < S.shape[0]


def project_ball_subspace(G, c, x, r, P_B):
    """Nearest point (Frobenius) to G in {G in range(P_B) : |c + G x| <= r}.

    G is assumed to already lie in range(P_B). Returns ``None`` when the set is
    empty, i.e. the part of c outside range(B) alone is longer than r.
    """
    if np.linalg.norm(x) == 0.0:
        raise ValueError("projection needs a nonzero x")
    G_new, status = kernels.project_ball(_f64(G), _f64(P_B), _f64(c), _f64(x), float(r))
    if status == kernels.INFEASIBLE:
        return None
    return G_new


def solve_step(p: StepProblem, tol=1e-8, max_iters=5000) -> SolveReport:
    S, C, P = _f64(p.S), _f64(p.C), _f64(p.P_B)
    n = S.shape[0]
    low_rank = is_low_rank(S)
    G_unc = solve_unconstrained(S, C, p.eta, p.beta, P)

    use_con = p.constrained
    infeasible = False
    if use_con:
        c, x, r = _f64(p.c), _f64(p.x), float(p.radius)
        if np.linalg.norm(x) == 0.0 or project_ball_subspace(np.zeros((n, n)), c, x, r, P) is None:
            use_con, infeasible = False, True
    if not use_con:
        c, x, r = np.zeros(n), np.ones(n), 0.0

    if p.lam == 0.0 and not use_con:
        G = G_unc
        return SolveReport(
            G_opt=G, objective=p.objective(G), iterations=0, constraint_active=False,
            nu_estimate=0.0, converged=True, infeasible=infeasible, low_rank=low_rank,
        )

    # warm start: better of the projected previous gain and the projected FTL point
    starts = [P @ _f64(p.G_prev), G_unc]
    if use_con:
        starts = [kernels.project_ball(G, P, c, x, r)[0] for G in starts]
    G_prev = _f64(p.G_prev)
    vals = [kernels.smoothed_objective(S, C, float(p.q), G, G_prev, float(p.lam), SMOOTHING_EPS,
                                       float(p.eta), float(p.beta)) for G in starts]
    G0 = _f64(starts[int(np.argmin(vals))])

    G, _, iters, converged, trace = kernels.pg_solve(
        S, C, float(p.q), G0, G_prev, P, c, x, r, use_con, float(p.lam), SMOOTHING_EPS,
        float(p.eta), float(p.beta), float(tol), int(max_iters),
    )
    active = False
    if use_con:
        active = abs(np.linalg.norm(c + G @ x) - r) <= ACTIVE_TOL * max(1.0, r)
    report = SolveReport(
        G_opt=G, objective=p.objective(G), iterations=int(iters), constraint_active=bool(active),
        nu_estimate=0.0, converged=bool(converged), infeasible=infeasible, low_rank=low_rank,
        trace=trace,
    )
    if active:
        report.nu_estimate = dual_estimate(p, G)
    return report


def dual_estimate(p: StepProblem, G_opt) -> float:
    """Least-squares multiplier nu >= 0 for the ball constraint at G_opt.

    Fits P_B(grad J + grad soft) + nu * P_B grad |c + G x| = 0. Zero when the
    constraint is absent or slack.
    """
    if not p.constrained:
        return 0.0
    v = p.c + G_opt @ p.x
    nv = np.linalg.norm(v)
    if nv == 0.0 or abs(nv - p.radius) > ACTIVE_TOL * max(1.0, p.radius):
        return 0.0
    g = kernels.smoothed_gradient(
        _f64(p.S), _f64(p.C), _f64(G_opt), _f64(p.G_prev), float(p.lam), SMOOTHING_EPS,
        float(p.eta), float(p.beta),
    )
    R = p.P_B @ g
    D = p.P_B @ np.outer(v / nv, p.x)
    dd = np.sum(D * D)
    if dd == 0.0:
        return 0.0
    return max(0.0, -float(np.sum(R * D)) / dd)
