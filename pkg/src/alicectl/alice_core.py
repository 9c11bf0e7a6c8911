"""The Alice controller: Follow-the-Leader over fantasy trajectories.

At step t Alice replays every past transition (x_{i-1}, u_{i-1}, x_i) with a
hypothetical gain K, landing at the fantasy state

    xhat_i(K) = (x_i - B u_{i-1}) + B K x_{i-1},

and picks the K minimizing the summed fantasy losses. Only B and observed
states are used; the plant matrix A is never seen here.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .step_solver import StepProblem, column_projector, solve_step

WARMUP, ACTIVE, COAST = "warmup", "active", "coast"


@dataclass(frozen=True)
class AliceParams:
    eta: float = 10.0
    beta: float = 1.0
    alpha: float = 0.9
    lam: float = 0.001
    gamma: float = 1.2
    t_w: int = 1
    t_c: int = 1
    T: int = 500
    # |sigma|_2 of the plant noise; only used by the coast test
    sigma_norm: float = 0.0
    # inside the coast band: "hold" keeps acting with the current gain without
    # re-solving, "zero" applies u = 0
    coast_action: str = "hold"
    solver_tol: float = 1e-8
    solver_max_iters: int = 5000

    def __post_init__(self):
        if not (self.eta > 0 and self.beta > 0):
            raise ValueError("eta and beta must be positive")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if not self.gamma > 1:
            raise ValueError("gamma must exceed 1")
        if not (1.0 / self.gamma < self.alpha < 1.0):
            raise ValueError("alpha must lie in (1/gamma, 1)")
        if self.t_w < 1 or self.t_c < 1 or self.T < 1:
            raise ValueError("t_w, t_c and T must be positive")
        if self.sigma_norm < 0:
            raise ValueError("sigma_norm must be nonnegative")
        if self.coast_action not in ("hold", "zero"):
            raise ValueError("coast_action must be 'hold' or 'zero'")

    @property
    def coast_radius(self):
        return 3.0 * self.gamma * self.sigma_norm


@dataclass
class GainMatrix:
    G: np.ndarray
    K: np.ndarray

    @classmethod
    def from_G(cls, G, B):
        K = np.linalg.pinv(B.T @ B) @ B.T @ G
        return cls(G=G, K=K)

    @classmethod
    def zeros(cls, B):
        n, m = B.shape
        return cls(G=np.zeros((n, n)), K=np.zeros((m, n)))


@dataclass
class FantasyHistory:
    S: np.ndarray
    C: np.ndarray
    q: float = 0.0
    t: int = 0
    # (x_{t-1}, x_t, u_{t-1}, c_t) of the latest transition
    last: tuple | None = None

    @classmethod
    def empty(cls, n):
        return cls(S=np.zeros((n, n)), C=np.zeros((n, n)))


def fantasy_state(x_i, u_prev, x_prev, B, G):
    """xhat_i = (x_i - B u_{i-1}) + G x_{i-1}; G may be a GainMatrix or an array."""
    G = G.G if isinstance(G, GainMatrix) else G
    return (x_i - B @ u_prev) + G @ x_prev


def accumulate(history: FantasyHistory, x_prev, u_prev, x_new, B) -> FantasyHistory:
    c = x_new - B @ u_prev
    history.S += np.outer(x_prev, x_prev)
    history.C += np.outer(c, x_prev)
    history.q += float(c @ c)
    history.t += 1
    history.last = (np.array(x_prev, dtype=float), np.array(x_new, dtype=float),
                    np.array(u_prev, dtype=float), c)
    return history


def objective_value(history: FantasyHistory, G, eta, beta):
    return (0.5 * eta * history.q + eta * np.sum(G * history.C)
            + 0.5 * (eta + beta) * np.sum(G * (G @ history.S)))


def objective_gradient(history: FantasyHistory, G, eta, beta):
    return eta * history.C + (eta + beta) * G @ history.S


@dataclass
class StepInfo:
    """What happened inside one call to :func:`alice_step`."""

    mode: str
    u: np.ndarray
    G_before: np.ndarray
    G_after: np.ndarray
    constraint_used: bool = False
    constraint_active: bool = False
    constraint_skipped: bool = False
    converged: bool = True
    solver_failed: bool = False
    nu: float = 0.0
    iterations: int = 0
    report: object = None


@dataclass
class ControllerState:
    params: AliceParams
    B: np.ndarray
    warmup_rng: np.random.Generator
    history: FantasyHistory = None
    gain: GainMatrix = None
    mode: str = WARMUP
    t: int = 0
    P_B: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        n = self.B.shape[0]
        if self.history is None:
            self.history = FantasyHistory.empty(n)
        if self.gain is None:
            self.gain = GainMatrix.zeros(self.B)
        if self.P_B is None:
            self.P_B = column_projector(self.B)


def make_controller(params: AliceParams, B, warmup_rng) -> ControllerState:
    return ControllerState(params=params, B=B, warmup_rng=warmup_rng)


def _build_problem(ctrl: ControllerState):
    p = ctrl.params
    h = ctrl.history
    prob = StepProblem(S=h.S, C=h.C, q=h.q, G_prev=ctrl.gain.G, P_B=ctrl.P_B,
                       eta=p.eta, beta=p.beta, lam=p.lam)
    skipped = False
    if ctrl.t >= p.t_c and h.last is not None:
        x_prev, _, _, c = h.last
        nx = np.linalg.norm(x_prev)
        if nx > 0.0:
            prob.c, prob.x, prob.radius = c, x_prev, p.alpha * nx
        else:
            skipped = True
    return prob, skipped


def alice_step(ctrl: ControllerState, x_t) -> tuple[np.ndarray, StepInfo]:
    """Choose u_t from the exact observation x_t.

    The caller must feed the resulting transition back through
    :func:`observe_transition` before the next call.
    """
    p = ctrl.params
    x_t = np.asarray(x_t, dtype=float)
    m = ctrl.B.shape[1]
    G_before = ctrl.gain.G.copy()

    if ctrl.t < p.t_w:
        ctrl.mode = WARMUP
        u = ctrl.warmup_rng.standard_normal(m)
        return u, StepInfo(mode=WARMUP, u=u, G_before=G_before, G_after=G_before)

    if np.linalg.norm(x_t) <= p.coast_radius:
        ctrl.mode = COAST
        u = ctrl.gain.K @ x_t if p.coast_action == "hold" else np.zeros(m)
        return u, StepInfo(mode=COAST, u=u, G_before=G_before, G_after=G_before)

    ctrl.mode = ACTIVE
    prob, skipped = _build_problem(ctrl)
    info = StepInfo(mode=ACTIVE, u=None, G_before=G_before, G_after=G_before,
                    constraint_skipped=skipped)
    try:
        rep = solve_step(prob, tol=p.solver_tol, max_iters=p.solver_max_iters)
        ok = np.all(np.isfinite(rep.G_opt))
    except (np.linalg.LinAlgError, FloatingPointError):
        rep, ok = None, False
    if ok:
        ctrl.gain = GainMatrix.from_G(rep.G_opt, ctrl.B)
        info.constraint_used = prob.constrained and not rep.infeasible
        info.constraint_active = rep.constraint_active
        info.constraint_skipped = skipped or rep.infeasible
        info.converged = rep.converged
        info.nu = rep.nu_estimate
        info.iterations = rep.iterations
        info.report = rep
    else:
        info.solver_failed = True
        info.converged = False
    u = ctrl.gain.K @ x_t
    info.u = u
    info.G_after = ctrl.gain.G.copy()
    return u, info


def observe_transition(ctrl: ControllerState, x_prev, u_prev, x_new):
    accumulate(ctrl.history, x_prev, u_prev, x_new, ctrl.B)
    ctrl.t += 1
