"""Multi-seed rollouts with common random numbers, plus file emission."""
from __future__ import annotations

import csv
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..alice_core import ACTIVE, WARMUP, alice_step, make_controller, observe_transition
from ..linear_env import WARMUP_STREAM, DivergenceError, env_step, init_env, observe, stream
from ..metrics import CSV_COLUMNS, RolloutRecord, aggregate, contraction_frequency, step_loss, zeta_bound
from ..oracles import baseline_policy, solve_dare
from .config import ExperimentConfig

WORKERS_ENV = "ALICECTL_WORKERS"


@dataclass
class Rollout:
    controller: str
    seed: int
    records: list = field(default_factory=list)
    losses: list = field(default_factory=list)
    noise: list = field(default_factory=list)
    diverged_at: int | None = None
    # Alice only: K_{t+1} chosen at each step t, and per-step bookkeeping
    gains: list = field(default_factory=list)
    active_steps: int = 0
    converged_steps: int = 0
    active_constraint_steps: int = 0
    skipped_constraint_steps: int = 0
    failed_steps: int = 0

    @property
    def noise_digest(self):
        h = hashlib.sha256()
        for w in self.noise:
            h.update(np.asarray(w, dtype=np.float64).tobytes())
        return h.hexdigest()


def _run_baseline(cfg: ExperimentConfig, kind, seed, lqr):
    p = cfg.alice
    env = init_env(cfg.plant, seed)
    policy = baseline_policy(kind, cfg.plant.m, lqr=lqr, seed=seed)
    ro = Rollout(controller=kind, seed=seed)
    cum = 0.0
    for t in range(cfg.horizon):
        x = observe(env)
        u = policy(x)
        try:
            x_next = env_step(env, u)
        except DivergenceError as exc:
            ro.diverged_at = exc.t
            break
        loss = step_loss(x_next, u, p.eta, p.beta)
        cum += loss
        ro.losses.append(loss)
        ro.records.append(RolloutRecord(
            t=t + 1, seed=seed, controller=kind, x_norm2=float(np.linalg.norm(x_next)),
            x_norm_inf=float(np.max(np.abs(x_next))), loss=loss, cum_loss=cum,
        ))
    ro.noise = env.noise_log
    return ro


def _run_alice(cfg: ExperimentConfig, seed):
    p = cfg.alice
    B = cfg.plant.B
    env = init_env(cfg.plant, seed)
    ctrl = make_controller(p, B, stream(seed, WARMUP_STREAM))
    pinvB = np.linalg.pinv(B.T @ B) @ B.T
    ro = Rollout(controller="alice", seed=seed)
    cum = 0.0
    xs = [observe(env)]
    us = []
    nu_prev = 0.0  # squared-form multiplier of the previous step's problem
    for t in range(cfg.horizon):
        x = xs[-1]
        S_t = ctrl.history.S.copy()
        u, info = alice_step(ctrl, x)
        ro.gains.append(pinvB @ info.G_after)

        zeta = None
        nu_sq = 0.0
        if info.mode == ACTIVE:
            ro.active_steps += 1
            ro.converged_steps += info.converged
            ro.active_constraint_steps += info.constraint_active
            ro.skipped_constraint_steps += info.constraint_skipped
            ro.failed_steps += info.solver_failed
            if info.constraint_active:
                radius = p.alpha * np.linalg.norm(xs[-2])
                nu_sq = info.nu / (2.0 * radius)
        # diagnostic on every post-warm-up step; coasting steps carry nu = 0
        if info.mode != WARMUP and t >= 2:
            K_t = pinvB @ info.G_before
            zeta = zeta_bound(S_t, B, p.eta, p.beta, nu_prev, nu_sq, x, us[-1],
                              K_t @ xs[-3], xs[-2], xs[-3])
        nu_prev = nu_sq

        try:
            x_next = env_step(env, u)
        except DivergenceError as exc:
            ro.diverged_at = exc.t
            break
        observe_transition(ctrl, x, u, x_next)
        xs.append(x_next)
        us.append(u)
        loss = step_loss(x_next, u, p.eta, p.beta)
        cum += loss
        ro.losses.append(loss)
        ro.records.append(RolloutRecord(
            t=t + 1, seed=seed, controller="alice", x_norm2=float(np.linalg.norm(x_next)),
            x_norm_inf=float(np.max(np.abs(x_next))), loss=loss, cum_loss=cum,
            gain_drift=float(np.linalg.norm(info.G_after - info.G_before)), zeta=zeta,
            constraint_active=info.constraint_active, mode=info.mode, converged=info.converged,
        ))
    ro.noise = env.noise_log
    return ro


def _attach_regret(ro: Rollout, oracle: Rollout):
    ref = np.cumsum(oracle.losses)
    for rec in ro.records:
        if rec.t <= len(ref):
            rec.regret = rec.cum_loss - float(ref[rec.t - 1])


def lqr_for(cfg: ExperimentConfig):
    """K* of the initial A (the comparator is ill-defined for time-varying plants)."""
    return solve_dare(cfg.plant.a_schedule(0), cfg.plant.B, cfg.alice.eta, cfg.alice.beta)


def run_seed(cfg: ExperimentConfig, seed, lqr=None):
    """All controllers on one seed; every environment sees the same noise draws."""
    if lqr is None:
        lqr = lqr_for(cfg)
    oracle = _run_baseline(cfg, "lqr_oracle", seed, lqr)
    out = {}
    for name in cfg.controllers:
        if name == "lqr_oracle":
            ro = oracle
        elif name == "alice":
            ro = _run_alice(cfg, seed)
        else:
            ro = _run_baseline(cfg, name, seed, lqr)
        _attach_regret(ro, oracle)
        out[name] = ro
    return out


def _run_seed_star(args):
    return run_seed(*args)


def run_rollouts(cfg: ExperimentConfig):
    """Returns {controller: [Rollout per seed]} in seed order."""
    lqr = lqr_for(cfg)
    workers = int(os.environ.get(WORKERS_ENV, "1"))
    jobs = [(cfg, s, lqr) for s in cfg.seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_seed = list(pool.map(_run_seed_star, jobs))
    else:
        per_seed = [run_seed(*j) for j in jobs]
    return {name: [d[name] for d in per_seed] for name in cfg.controllers}, lqr


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_rollout_csv(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for rec in records:
            w.writerow([_fmt(v) for v in rec.as_row()])


def write_aggregate_csv(path, aggs, T):
    names = list(aggs)
    header = ["t"]
    for c in names:
        header.append(f"{c}_n_alive")
        for metric, stats in aggs[c].items():
            if metric == "n_alive":
                continue
            header += [f"{c}_{metric}_{s}" for s in stats]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(T):
            row = [str(i + 1)]
            for c in names:
                row.append(str(int(aggs[c]["n_alive"][i])))
                for metric, stats in aggs[c].items():
                    if metric == "n_alive":
                        continue
                    row += [_fmt(float(stats[s][i])) for s in stats]
            w.writerow(row)


def rollout_summary(ro: Rollout, alpha, x0_norm):
    freq = contraction_frequency(ro.records, alpha, x0_norm) if ro.controller == "alice" else None
    return {
        "seed": ro.seed,
        "steps": len(ro.records),
        "diverged_at": ro.diverged_at,
        "final_regret": ro.records[-1].regret if ro.records else None,
        "contraction_frequency": freq,
        "active_steps": ro.active_steps,
        "converged_steps": ro.converged_steps,
        "active_constraint_steps": ro.active_constraint_steps,
        "skipped_constraint_steps": ro.skipped_constraint_steps,
        "failed_steps": ro.failed_steps,
        "noise_sha256": ro.noise_digest,
    }


def _json_safe(obj):
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_json_safe(v) for v in obj]
    return obj


def run(cfg: ExperimentConfig):
    """Run every (controller, seed) rollout and write the run directory.

    Layout under ``cfg.out_dir``: ``rollouts/<controller>_seed<seed>.csv``,
    ``aggregate.csv``, ``summary.json``, ``manifest.json`` and, when
    requested, ``regret.svg`` / ``state_norm.svg``.
    """
    out = Path(cfg.out_dir)
    (out / "rollouts").mkdir(parents=True, exist_ok=True)
    results, lqr = run_rollouts(cfg)
    T = cfg.horizon
    x0_norm = float(np.linalg.norm(cfg.plant.x0_mean))

    for name, ros in results.items():
        for ro in ros:
            write_rollout_csv(out / "rollouts" / f"{name}_seed{ro.seed}.csv", ro.records)
    aggs = {name: aggregate([ro.records for ro in ros], T) for name, ros in results.items()}
    write_aggregate_csv(out / "aggregate.csv", aggs, T)

    summary = {
        "controllers": {
            name: [rollout_summary(ro, cfg.alice.alpha, x0_norm) for ro in ros]
            for name, ros in results.items()
        },
        "lqr": {
            "K_star": lqr.K_star.tolist(),
            "closed_loop_radius": lqr.closed_loop_radius,
            "residual": lqr.residual,
        },
    }
    (out / "summary.json").write_text(json.dumps(_json_safe(summary), indent=2, sort_keys=True))
    manifest = {
        "artifact": "alicectl",
        "version": __version__,
        "config": cfg.to_dict(),
        "horizon_note": "horizon is a desk-scale default, not a value taken from the source experiments",
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))

    if cfg.emit_svg:
        from .svgplot import line_plot

        t = np.arange(1, T + 1)
        line_plot(
            {name: (t, a["regret"]["median"]) for name, a in aggs.items()},
            out / "regret.svg", xlabel="t", ylabel="median regret", title=f"{cfg.name}: regret",
        )
        line_plot(
            {name: (t, a["x_norm2"]["median"]) for name, a in aggs.items()},
            out / "state_norm.svg", xlabel="t", ylabel="median |x|_2",
            title=f"{cfg.name}: state norm", logy=True,
        )
    all_diverged = all(ro.diverged_at is not None for ros in results.values() for ro in ros)
    return {"results": results, "aggregates": aggs, "summary": summary, "all_diverged": all_diverged}
