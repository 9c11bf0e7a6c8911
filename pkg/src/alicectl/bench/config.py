"""Experiment configuration: JSON loading and the built-in presets."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..alice_core import AliceParams
from ..linear_env import ASchedule, ConfigError, PlantConfig

CONTROLLERS = ("alice", "lqr_oracle", "zero", "random")

LAPLACIAN_A = np.array([
    [1.01, 0.01, 0.00],
    [0.01, 1.01, 0.01],
    [0.00, 0.01, 1.01],
])


@dataclass
class ExperimentConfig:
    plant: PlantConfig
    alice: AliceParams
    controllers: list = field(default_factory=lambda: ["alice", "lqr_oracle"])
    horizon: int = 500
    seeds: list = field(default_factory=lambda: list(range(100)))
    base_seed: int = 0
    out_dir: str = "runs/out"
    emit_svg: bool = False
    name: str = "custom"

    def __post_init__(self):
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if not self.seeds:
            raise ConfigError("need at least one seed")
        bad = [c for c in self.controllers if c not in CONTROLLERS]
        if bad or not self.controllers:
            raise ConfigError(f"unknown controllers {bad}; choose from {CONTROLLERS}")

    def to_dict(self):
        return {
            "name": self.name,
            "plant": plant_to_dict(self.plant),
            "alice": {
                "eta": self.alice.eta, "beta": self.alice.beta, "alpha": self.alice.alpha,
                "lambda": self.alice.lam, "gamma": self.alice.gamma, "t_w": self.alice.t_w,
                "t_c": self.alice.t_c, "sigma_norm": self.alice.sigma_norm,
                "coast_action": self.alice.coast_action,
                "solver_tol": self.alice.solver_tol,
                "solver_max_iters": self.alice.solver_max_iters,
            },
            "controllers": list(self.controllers),
            "horizon": self.horizon,
            "seeds": [int(s) for s in self.seeds],
            "base_seed": self.base_seed,
            "out_dir": str(self.out_dir),
            "emit_svg": self.emit_svg,
        }


def _matrix(obj, what):
    try:
        M = np.array(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what}: not a numeric array") from exc
    if M.ndim != 2:
        raise ConfigError(f"{what}: expected a row-major nested 2-D array")
    return M


def schedule_from_dict(d):
    kind = d.get("type", "constant")
    if kind == "constant":
        return ASchedule.constant(_matrix(d["matrix"], "A.matrix"))
    if kind == "piecewise":
        pieces = [(int(p["start"]), _matrix(p["matrix"], "A.pieces")) for p in d["pieces"]]
        return ASchedule(pieces)
    if kind == "ramp":
        if "pieces" in d:
            pieces = [(int(p["start"]), _matrix(p["matrix"], "A.pieces")) for p in d["pieces"]]
        else:
            pieces = [(0, _matrix(d["base"], "A.base"))]
        return ASchedule(pieces, ramp=_matrix(d["ramp"], "A.ramp"))
    raise ConfigError(f"unknown A-schedule type {kind!r}")


def schedule_to_dict(s: ASchedule):
    pieces = [{"start": start, "matrix": M.tolist()} for start, M in s.pieces]
    if s.ramp is not None:
        return {"type": "ramp", "pieces": pieces, "ramp": s.ramp.tolist()}
    if len(pieces) == 1:
        return {"type": "constant", "matrix": pieces[0]["matrix"]}
    return {"type": "piecewise", "pieces": pieces}


def plant_to_dict(p: PlantConfig):
    return {
        "A": schedule_to_dict(p.a_schedule),
        "B": p.B.tolist(),
        "sigma": p.sigma.tolist(),
        "x0_mean": p.x0_mean.tolist(),
        "x0_cov": p.x0_cov.tolist(),
    }


def config_from_dict(d) -> ExperimentConfig:
    try:
        pd = d["plant"]
        plant = PlantConfig(
            a_schedule=schedule_from_dict(pd["A"]),
            B=_matrix(pd["B"], "B"),
            sigma=pd["sigma"],
            x0_mean=pd["x0_mean"],
            x0_cov=pd.get("x0_cov"),
        )
        horizon = int(d.get("horizon", 500))
        ad = dict(d.get("alice", {}))
        if "lambda" in ad:
            ad["lam"] = ad.pop("lambda")
        ad.setdefault("sigma_norm", float(np.linalg.norm(plant.sigma)))
        ad["T"] = horizon
        alice = AliceParams(**ad)
        base_seed = int(d.get("base_seed", 0))
        seeds = d.get("seeds", 100)
        seeds = list(range(base_seed, base_seed + int(seeds))) if isinstance(seeds, int) else [int(s) for s in seeds]
        return ExperimentConfig(
            plant=plant,
            alice=alice,
            controllers=list(d.get("controllers", ["alice", "lqr_oracle"])),
            horizon=horizon,
            seeds=seeds,
            base_seed=base_seed,
            out_dir=d.get("out_dir", "runs/out"),
            emit_svg=bool(d.get("emit_svg", False)),
            name=d.get("name", "custom"),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad config: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(d)


def _plant(A, sigma, x0):
    return PlantConfig(a_schedule=A, B=np.eye(3), sigma=np.full(3, sigma), x0_mean=np.full(3, x0))


def preset(name, seeds=100, horizon=None, base_seed=0, out_dir=None, emit_svg=False) -> ExperimentConfig:
    if name == "exp1":
        plant = _plant(ASchedule.constant(LAPLACIAN_A), 1.0, 0.0)
        controllers = ["alice", "lqr_oracle", "zero", "random"]
        T = horizon or 500
        alice = AliceParams(T=T)
    elif name == "exp1_noiseless":
        plant = _plant(ASchedule.constant(LAPLACIAN_A), 0.0, 0.0)
        controllers = ["alice", "lqr_oracle"]
        T = horizon or 500
        # t_c = T: the constraint never switches on inside the horizon
        alice = AliceParams(lam=0.0, t_w=3, t_c=T, T=T)
    elif name == "exp2":
        A2 = LAPLACIAN_A.copy()
        A2[0, 0] = 4.01
        plant = _plant(ASchedule([(0, LAPLACIAN_A), (10, A2)]), 0.1, 5.0)
        controllers = ["alice", "lqr_oracle"]
        T = horizon or 200
        alice = AliceParams(T=T)
    elif name == "exp3":
        ramp = np.zeros((3, 3))
        ramp[0, 0] = 0.1
        plant = _plant(ASchedule([(0, LAPLACIAN_A)], ramp=ramp), 0.1, 5.0)
        controllers = ["alice", "lqr_oracle"]
        T = horizon or 100
        alice = AliceParams(T=T)
    else:
        raise ConfigError(f"unknown preset {name!r}")
    alice = replace(alice, sigma_norm=float(np.linalg.norm(plant.sigma)))
    return ExperimentConfig(
        plant=plant,
        alice=alice,
        controllers=controllers,
        horizon=T,
        seeds=list(range(base_seed, base_seed + seeds)),
        base_seed=base_seed,
        out_dir=out_dir or f"runs/{name}",
        emit_svg=emit_svg,
        name=name,
    )
