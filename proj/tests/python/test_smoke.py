import json

import numpy as np
import pytest

import mmot


def test_prox_closed_form():
    pi, m = mmot.prox_perspective(1.0, 1.0, [0.0])
    assert pi == pytest.approx(1.0)
    assert m == [0.0]
    pi, m = mmot.prox_perspective(0.5, -2.0, [0.3, 0.1])
    assert pi == 0.0 and m == [0.0, 0.0]


def test_presets_and_static_oracle():
    mu = mmot.preset_marginal("double_tent", 20)
    assert sum(mu) == pytest.approx(1.0)
    assert mmot.static_optimum([mu, mu]) == 0.0
    uniform = [1.0] * 20
    delta = [0.0] * 20
    delta[10] = 1.0
    assert mmot.static_optimum([uniform, delta]) == pytest.approx(1.0 / 12.0, abs=0.1)
    atoms = mmot.comonotone_coupling([[0.5, 0.5], [0.5, 0.5]])
    assert atoms == [([0, 0], pytest.approx(0.5)), ([1, 1], pytest.approx(0.5))]
    bump = mmot.preset_marginal("sine_bump", 20)
    x, t = mmot.analytic_map(bump, bump)
    assert np.allclose(x, t)


def test_solve_in_memory():
    cfg = {
        "problem": {"marginals": ["sine_bump", "sine_bump"]},
        "grid": {"n_t": 4, "n_x": 4},
        "solver": {"sigma": 3.0, "tau": 0.15, "iterations": 200, "log_every": 50},
    }
    out = mmot.solve(cfg)
    assert out["coupling"].shape == (4, 4)
    assert out["coupling"].sum() == pytest.approx(1.0)
    assert len(out["diagnostics"]) == 4
    assert out["objective"] < 1e-2


def test_bad_config_raises():
    with pytest.raises(mmot.ConfigError, match="solver.sigma"):
        mmot.solve({"solver": {"sigma": 0}})
    with pytest.raises(mmot.MmotError):
        mmot.solve({"grid": {"bogus": 1}})


def test_pipeline(tmp_path):
    cfg = {
        "problem": {"marginals": ["sine_bump", "tent"]},
        "grid": {"n_t": 4, "n_x": 5},
        "solver": {"sigma": 3.0, "tau": 0.15, "iterations": 50},
    }
    manifest = mmot.run(cfg, tmp_path / "run")
    assert manifest["status"] == "ok"
    summary = mmot.compare(tmp_path / "run")
    assert summary["maps"][0]["target"] == 2
    assert json.loads((tmp_path / "run" / "summary.json").read_text()) == summary
    mmot.oracle(cfg, tmp_path / "oracle")
    assert mmot.check(tmp_path / "oracle")["feasible"]
    with pytest.raises(mmot.MissingArtifactError):
        mmot.compare(tmp_path / "absent")
