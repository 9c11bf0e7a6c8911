"""Linear Gauss-Markov plant x_{t+1} = A_t x_t + B u_t + w_{t+1}.

The plant owns A. Controllers only ever receive B, the observed state and the
losses; nothing in :mod:`alicectl.alice_core` imports this module.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# substream ids for the counter-based generator
NOISE_STREAM = 0
WARMUP_STREAM = 1
RANDOM_POLICY_STREAM = 2
X0_STREAM = 3

DIVERGENCE_LIMIT = 1e12


class ConfigError(ValueError):
    pass


class DivergenceError(RuntimeError):
    def __init__(self, t, message="state diverged"):
        super().__init__(f"{message} at step {t}")
        self.t = t


def stream(seed, stream_id, t=0):
    """Generator keyed by (seed, stream_id, t).

    Philox is counter based: the key comes from (seed, stream_id) and the step
    index sits in the top counter word, so draws for different t never overlap
    and need no shared state.
    """
    key = np.random.SeedSequence([int(seed), int(stream_id)]).generate_state(2, np.uint64)
    counter = np.array([0, 0, 0, int(t)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


@dataclass
class ASchedule:
    """Piecewise-constant A_t with an optional per-entry linear ramp.

    ``pieces`` is a list of (start_step, matrix) sorted by start step; the first
    piece must start at 0. A_t = piece(t) + t * ramp.
    """

    pieces: list
    ramp: np.ndarray | None = None

    def __post_init__(self):
        if not self.pieces:
            raise ConfigError("A-schedule needs at least one piece")
        self.pieces = sorted(
            ((int(s), np.array(M, dtype=float)) for s, M in self.pieces), key=lambda p: p[0]
        )
        if self.pieces[0][0] != 0:
            raise ConfigError("first A-schedule piece must start at step 0")
        if self.ramp is not None:
            self.ramp = np.array(self.ramp, dtype=float)

    @classmethod
    def constant(cls, A):
        return cls([(0, A)])

    @property
    def n(self):
        return self.pieces[0][1].shape[0]

    def __call__(self, t):
        A = self.pieces[0][1]
        for start, M in self.pieces:
            if start <= t:
                A = M
            else:
                break
        if self.ramp is not None:
            return A + t * self.ramp
        return A.copy()

    def matrices(self):
        mats = [M for _, M in self.pieces]
        if self.ramp is not None:
            mats.append(self.ramp)
        return mats


@dataclass
class PlantConfig:
    a_schedule: ASchedule
    B: np.ndarray
    sigma: np.ndarray
    x0_mean: np.ndarray
    x0_cov: np.ndarray | None = None

    def __post_init__(self):
        if not isinstance(self.a_schedule, ASchedule):
            self.a_schedule = ASchedule.constant(self.a_schedule)
        self.B = np.atleast_2d(np.array(self.B, dtype=float))
        self.sigma = np.array(self.sigma, dtype=float).ravel()
        self.x0_mean = np.array(self.x0_mean, dtype=float).ravel()
        n, m = self.B.shape
        if self.x0_cov is None:
            self.x0_cov = np.zeros((n, n))
        self.x0_cov = np.array(self.x0_cov, dtype=float)
        for M in self.a_schedule.matrices():
            if M.shape != (n, n):
                raise ConfigError(f"A-schedule matrix has shape {M.shape}, expected {(n, n)}")
        if self.sigma.shape != (n,) or self.x0_mean.shape != (n,):
            raise ConfigError("sigma and x0_mean must have length n")
        if self.x0_cov.shape != (n, n):
            raise ConfigError("x0_cov must be n x n")
        if np.any(self.sigma < 0) or not np.all(np.isfinite(self.sigma)):
            raise ConfigError("sigma entries must be finite and nonnegative")
        if not np.allclose(self.x0_cov, self.x0_cov.T, atol=1e-12):
            raise ConfigError("x0_cov must be symmetric")

    @property
    def n(self):
        return self.B.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def W(self):
        return np.diag(self.sigma**2)


def _psd_factor(cov):
    evals, evecs = np.linalg.eigh(cov)
    if evals.min(initial=0.0) < -1e-12:
        raise ConfigError(f"x0_cov is not PSD (min eigenvalue {evals.min():.3e})")
    return evecs * np.sqrt(np.clip(evals, 0.0, None))


@dataclass
class EnvState:
    config: PlantConfig
    seed: int
    t: int = 0
    x: np.ndarray = field(default=None)
    noise_log: list = field(default_factory=list)


def init_env(config: PlantConfig, seed: int) -> EnvState:
    L = _psd_factor(config.x0_cov)
    x = config.x0_mean.copy()
    if np.any(L != 0.0):
        z = stream(seed, X0_STREAM).standard_normal(config.n)
        x = x + L @ z
    return EnvState(config=config, seed=seed, t=0, x=x)


def process_noise(config: PlantConfig, seed: int, t: int) -> np.ndarray:
    """w_{t+1}: the noise that enters on the transition out of step t."""
    z = stream(seed, NOISE_STREAM, t).standard_normal(config.n)
    return config.sigma * z


def env_step(env: EnvState, u) -> np.ndarray:
    cfg = env.config
    u = np.asarray(u, dtype=float).reshape(cfg.m)
    if not np.all(np.isfinite(u)):
        raise DivergenceError(env.t, "non-finite action")
    w = process_noise(cfg, env.seed, env.t)
    x_next = cfg.a_schedule(env.t) @ env.x + cfg.B @ u + w
    if not np.all(np.isfinite(x_next)) or np.max(np.abs(x_next)) > DIVERGENCE_LIMIT:
        raise DivergenceError(env.t + 1)
    env.noise_log.append(w)
    env.x = x_next
    env.t += 1
    return x_next.copy()


def observe(env: EnvState) -> np.ndarray:
    return env.x.copy()
