import json
import math
import os
from pathlib import Path

import numpy as np
import pytest

import hjbkit

DATA = Path(os.environ.get("HJBKIT_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))

MARKET = json.loads((DATA / "markets" / "merton.json").read_text())


def constant_rate():
    return {
        "dim": 1,
        "controls": [[0]],
        "drift": {"kind": "affine", "state": [-1]},
        "discount_rate": {"kind": "constant", "value": -1},
        "running_reward": {"kind": "constant", "value": 1},
        "terminal_reward": {"kind": "constant", "value": 0},
        "L1": 1,
        "L2": -1,
    }


def test_model_loading():
    m = hjbkit.load_model(DATA / "models" / "ou.json")
    assert m.dim == 1
    assert m.control_count == 3
    again = hjbkit.load_model(json.loads(m.to_json_text()))
    assert again.controls == m.controls


def test_assumption_screen():
    ok = hjbkit.check_assumption1(DATA / "models" / "ou.json", [-3], [3], samples=200, seed=1)
    assert ok["passed"]
    bad = hjbkit.check_assumption1(DATA / "models" / "bad_l2.json", [-3], [3], samples=200, seed=1)
    assert not bad["passed"]


def test_hamiltonian():
    value, index, argmax, gap = hjbkit.eval_H(constant_rate(), 0.5, 2.0, 1.0)
    assert value == pytest.approx(-0.5 - 2.0 + 1.0)
    assert index == 0 and argmax == [0.0] and math.isinf(gap)


def test_finite_horizon_closed_form():
    sol = hjbkit.solve_finite_horizon(constant_rate(), -5, 5, 201, 1.0, steps=4000)
    u0 = sol["u"][0]
    assert np.max(np.abs(u0[1:-1] - (1 - math.exp(-1)))) <= 1e-4
    assert sol["report"]["converged"]


def test_stability_error():
    with pytest.raises(hjbkit.StabilityError):
        hjbkit.solve_finite_horizon(constant_rate(), -5, 5, 201, 1.0, steps=10)
    with pytest.raises(hjbkit.ParameterError):
        hjbkit.load_model({"dim": 1})


def test_merton():
    bench = hjbkit.merton_benchmark(MARKET)
    assert bench["u"] == pytest.approx(math.sqrt(0.5 / 0.07))
    model = hjbkit.reduced_model(MARKET, 3, 3)
    sol = hjbkit.solve_infinite_horizon(model, -2, 2, 41, tol_dt=1e-8, t_max=400, market=MARKET)
    assert sol["report"]["converged"]
    assert np.max(np.abs(sol["u"][0] / bench["u"] - 1)) <= 1e-3
    assert sol["control_names"] == ["pi_star", "c_star"]
    assert hjbkit.wealth_value(4.0, MARKET, 1.0) == pytest.approx(4.0)
    with pytest.raises(hjbkit.DomainError):
        hjbkit.wealth_value(0.0, MARKET, 1.0)


def test_monte_carlo_is_seeded():
    a = hjbkit.estimate_value(DATA / "models" / "ou.json", [0], 0.5, 1.0, paths=2000, dt=1e-2, seed=3)
    b = hjbkit.estimate_value(DATA / "models" / "ou.json", [0], 0.5, 1.0, paths=2000, dt=1e-2, seed=3)
    assert a == b
    sol = hjbkit.solve_finite_horizon(DATA / "models" / "ou.json", -6, 6, 121, 1.0)
    # δ = 0 is one admissible control, so it cannot beat the optimum
    assert a["mean"] <= np.interp(0.5, sol["y"], sol["u"][0]) + 3 * a["standard_error"] + 5e-3
