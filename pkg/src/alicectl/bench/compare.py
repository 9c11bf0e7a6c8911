"""Summary table for a finished run directory."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

# late-window / previous-window ratio of the median state norm that counts as
# unbounded growth
GROWTH_RATIO = 1.5


def _read_aggregate(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    cols = {k: np.array([float(r[k]) if r[k] != "" else np.nan for r in rows]) for k in rows[0]}
    return cols


def compare(run_dir):
    run_dir = Path(run_dir)
    summary = json.loads((run_dir / "summary.json").read_text())
    agg = _read_aggregate(run_dir / "aggregate.csv")
    T = len(agg["t"])
    w = max(1, T // 5)
    table = []
    for name, rollouts in summary["controllers"].items():
        norm = agg[f"{name}_x_norm2_median"]
        regret = agg[f"{name}_regret_median"]
        steady = float(np.nanmean(norm[-w:])) if np.any(np.isfinite(norm[-w:])) else float("nan")
        before = norm[-2 * w:-w] if T >= 2 * w else norm[:w]
        prev = float(np.nanmean(before)) if np.any(np.isfinite(before)) else float("nan")
        finite_regret = regret[np.isfinite(regret)]
        freqs = [r["contraction_frequency"] for r in rollouts if r["contraction_frequency"] is not None]
        active = sum(r["active_steps"] for r in rollouts)
        conv = sum(r["converged_steps"] for r in rollouts)
        diverged = sum(r["diverged_at"] is not None for r in rollouts)
        growing = diverged > len(rollouts) / 2 or (np.isfinite(prev) and prev > 0 and steady / prev > GROWTH_RATIO)
        table.append({
            "controller": name,
            "final_median_regret": float(finite_regret[-1]) if finite_regret.size else float("nan"),
            "steady_state_norm": steady,
            "contraction_frequency": float(np.median(freqs)) if freqs else None,
            "solver_convergence_rate": conv / active if active else None,
            "diverged": diverged,
            "seeds": len(rollouts),
            "unbounded_growth": bool(growing),
        })
    return table


def format_table(table):
    head = f"{'controller':<12}{'regret(T)':>14}{'steady|x|':>12}{'contract':>10}{'solver_ok':>10}{'diverged':>10}  flag"
    lines = [head, "-" * len(head)]
    for r in table:
        cf = "-" if r["contraction_frequency"] is None else f"{r['contraction_frequency']:.3f}"
        sc = "-" if r["solver_convergence_rate"] is None else f"{r['solver_convergence_rate']:.3f}"
        flag = "GROWING" if r["unbounded_growth"] else ""
        lines.append(
            f"{r['controller']:<12}{r['final_median_regret']:>14.4g}{r['steady_state_norm']:>12.4g}"
            f"{cf:>10}{sc:>10}{r['diverged']:>6}/{r['seeds']:<3}  {flag}"
        )
    return "\n".join(lines)
