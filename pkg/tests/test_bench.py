import csv
import json

import numpy as np
import pytest

from alicectl.bench.cli import EXIT_ALL_DIVERGED, EXIT_CONFIG, EXIT_OK, main
from alicectl.bench.compare import compare, format_table
from alicectl.bench.config import config_from_dict, load_config, preset
from alicectl.bench.runner import run, run_seed
from alicectl.linear_env import ConfigError
from alicectl.metrics import CSV_COLUMNS


def small(name="exp1", seeds=2, horizon=60, tmp=None, **kw):
    return preset(name, seeds=seeds, horizon=horizon, out_dir=str(tmp) if tmp else None, **kw)


@pytest.mark.parametrize("name,T,ctrls", [
    ("exp1", 500, {"alice", "lqr_oracle", "zero", "random"}),
    ("exp1_noiseless", 500, {"alice", "lqr_oracle"}),
    ("exp2", 200, {"alice", "lqr_oracle"}),
    ("exp3", 100, {"alice", "lqr_oracle"}),
])
def test_presets(name, T, ctrls):
    cfg = preset(name)
    assert cfg.horizon == T and set(cfg.controllers) == ctrls and len(cfg.seeds) == 100
    assert cfg.alice.T == T


def test_preset_parameters():
    cfg = preset("exp1")
    a = cfg.alice
    assert (a.eta, a.beta, a.alpha, a.lam, a.gamma, a.t_w, a.t_c) == (10.0, 1.0, 0.9, 0.001, 1.2, 1, 1)
    assert a.coast_radius == pytest.approx(6.2354, abs=1e-4)
    assert preset("exp2").alice.coast_radius == pytest.approx(0.6235, abs=1e-4)
    nl = preset("exp1_noiseless").alice
    assert nl.lam == 0.0 and nl.t_w == 3 and nl.t_c == nl.T
    with pytest.raises(ConfigError):
        preset("exp9")


def test_config_json_round_trip(tmp_path):
    for name in ("exp1", "exp2", "exp3"):
        cfg = small(name, tmp=tmp_path)
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(cfg.to_dict()))
        back = load_config(path)
        assert back.to_dict() == cfg.to_dict()
        for t in (0, 9, 10, 50):
            np.testing.assert_array_equal(back.plant.a_schedule(t), cfg.plant.a_schedule(t))


@pytest.mark.parametrize("mutate", [
    lambda d: d["plant"].pop("B"),
    lambda d: d["plant"].update(sigma=[1, 1]),
    lambda d: d["plant"]["A"].update(type="spline"),
    lambda d: d.update(controllers=["alice", "bogus"]),
    lambda d: d["alice"].update(alpha=0.5),
    lambda d: d.update(horizon=0),
])
def test_config_errors(mutate):
    d = preset("exp1").to_dict()
    mutate(d)
    with pytest.raises(ConfigError):
        config_from_dict(d)


def test_common_random_numbers():
    out = run_seed(small("exp1"), 3)
    digests = {ro.noise_digest for ro in out.values()}
    assert len(digests) == 1
    np.testing.assert_array_equal(out["alice"].noise, out["zero"].noise)
    assert all(r.regret == 0.0 for r in out["lqr_oracle"].records)


def test_cum_loss_and_regret_consistent():
    out = run_seed(small("exp1"), 1)
    a, o = out["alice"], out["lqr_oracle"]
    np.testing.assert_allclose([r.cum_loss for r in a.records], np.cumsum(a.losses), rtol=1e-9)
    np.testing.assert_allclose([r.regret for r in a.records],
                               np.cumsum(a.losses) - np.cumsum(o.losses), rtol=1e-9, atol=1e-9)


def test_run_outputs(tmp_path):
    cfg = small("exp1", seeds=3, horizon=100, tmp=tmp_path / "a", emit_svg=True)
    res = run(cfg)
    assert not res["all_diverged"]
    out = tmp_path / "a"
    for c in cfg.controllers:
        for s in cfg.seeds:
            with open(out / "rollouts" / f"{c}_seed{s}.csv") as fh:
                rows = list(csv.reader(fh))
            assert tuple(rows[0]) == CSV_COLUMNS
            assert len(rows) == 101
            assert [int(r[0]) for r in rows[1:]] == list(range(1, 101))
    with open(out / "aggregate.csv") as fh:
        agg = list(csv.DictReader(fh))
    assert len(agg) == 100 and agg[0]["alice_n_alive"] == "3"
    assert "alice_regret_median" in agg[0] and "zero_x_norm2_q75" in agg[0]
    for f in ("summary.json", "manifest.json", "regret.svg", "state_norm.svg"):
        assert (out / f).stat().st_size > 0
    assert (out / "regret.svg").read_text().lstrip().startswith("<svg")
    summary = json.loads((out / "summary.json").read_text())
    hashes = {r["noise_sha256"] for rows in summary["controllers"].values() for r in rows if r["seed"] == 0}
    assert len(hashes) == 1

    table = {r["controller"]: r for r in compare(out)}
    assert table["lqr_oracle"]["final_median_regret"] == 0.0
    assert table["zero"]["unbounded_growth"]
    assert not table["lqr_oracle"]["unbounded_growth"]
    assert 0.0 <= table["alice"]["solver_convergence_rate"] <= 1.0
    assert "GROWING" in format_table(list(table.values()))


def test_rerun_byte_identical(tmp_path):
    for d in ("a", "b"):
        run(small("exp2", seeds=2, horizon=40, tmp=tmp_path / d))
    for f in sorted((tmp_path / "a").rglob("*.csv")) + [tmp_path / "a" / "summary.json"]:
        twin = tmp_path / "b" / f.relative_to(tmp_path / "a")
        assert f.read_bytes() == twin.read_bytes(), f.name


def test_cli_preset_and_compare(tmp_path, capsys):
    out = tmp_path / "p"
    assert main(["preset", "exp3", "--seeds", "2", "--horizon", "30", "--out-dir", str(out)]) == EXIT_OK
    assert (out / "aggregate.csv").exists()
    assert main(["compare", "--run-dir", str(out)]) == EXIT_OK
    assert "alice" in capsys.readouterr().out


def test_cli_run_config(tmp_path):
    cfg = small("exp1", seeds=1, horizon=20, tmp=tmp_path / "r").to_dict()
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    assert main(["run", "--config", str(path)]) == EXIT_OK
    assert (tmp_path / "r" / "rollouts" / "alice_seed0.csv").exists()


def test_cli_config_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", "--config", str(bad)]) == EXIT_CONFIG
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    assert main(["preset", "exp1", "--seeds", "0"]) == EXIT_CONFIG
    assert main(["compare", "--run-dir", str(tmp_path / "nothing")]) == EXIT_CONFIG


def test_cli_all_diverged(tmp_path):
    d = {
        "plant": {"A": {"type": "constant", "matrix": [[1e4, 0], [0, 1e4]]}, "B": [[1, 0], [0, 1]],
                  "sigma": [1, 1], "x0_mean": [1, 1]},
        "controllers": ["zero"], "horizon": 20, "seeds": 2, "out_dir": str(tmp_path / "div"),
    }
    path = tmp_path / "div.json"
    path.write_text(json.dumps(d))
    assert main(["run", "--config", str(path)]) == EXIT_ALL_DIVERGED
    with open(tmp_path / "div" / "rollouts" / "zero_seed0.csv") as fh:
        assert len(list(csv.reader(fh))) < 21
