"""Python access to the hjbkit solvers.

Models and markets are given as dicts (or JSON file paths for models);
reports come back as dicts and fields as numpy arrays.
"""

import json

import numpy as np

from . import _core
from ._core import (
    ControlModel,
    DivergenceError,
    DomainError,
    EvaluationError,
    ExclusionError,
    HjbkitError,
    ParameterError,
    StabilityError,
)

__all__ = [
    "ControlModel",
    "DivergenceError",
    "DomainError",
    "EvaluationError",
    "ExclusionError",
    "HjbkitError",
    "ParameterError",
    "StabilityError",
    "load_model",
    "check_assumption1",
    "eval_H",
    "solve_finite_horizon",
    "solve_infinite_horizon",
    "estimate_value",
    "reduced_model",
    "merton_benchmark",
    "wealth_value",
]


def load_model(source):
    """Model from a dict or a JSON file path."""
    if isinstance(source, ControlModel):
        return source
    if isinstance(source, dict):
        return ControlModel.from_json_text(json.dumps(source))
    return ControlModel.from_file(str(source))


def _market_text(market):
    return None if market is None else json.dumps(market)


def _field(raw):
    return {
        "y": np.asarray(raw["y"]),
        "t": np.asarray(raw["t"]),
        "u": np.asarray(raw["u"]),
        "control_names": list(raw["control_names"]),
        "controls": [np.asarray(c) for c in raw["controls"]],
        "report": json.loads(raw["report"]),
    }


def check_assumption1(model, lower, upper, samples=1000, seed=0):
    return json.loads(_core.check_assumption1(load_model(model), list(lower), list(upper), samples, seed))


def eval_H(model, y, u, p):
    """(value, argmax index, argmax control, runner-up gap)."""
    return _core.eval_H(load_model(model), list(np.atleast_1d(y)), float(u), list(np.atleast_1d(p)))


def solve_finite_horizon(model, y_min, y_max, nodes, horizon, steps=0, boundary="one_sided",
                         stride=0, market=None):
    """steps=0 picks the stability limit with a 0.9 safety factor."""
    return _field(_core.solve_finite_horizon(load_model(model), y_min, y_max, nodes, horizon, steps,
                                             boundary, stride, _market_text(market)))


def solve_infinite_horizon(model, y_min, y_max, nodes, dt=0.0, tol_dt=1e-6, t_max=1000.0,
                           boundary="one_sided", market=None):
    return _field(_core.solve_infinite_horizon(load_model(model), y_min, y_max, nodes, dt, tol_dt,
                                               t_max, boundary, _market_text(market)))


def estimate_value(model, control, y0, horizon, paths=10000, dt=1e-3, seed=0, antithetic=False):
    """Monte Carlo value of a constant control."""
    return json.loads(_core.estimate_value(load_model(model), list(control), list(np.atleast_1d(y0)),
                                           horizon, paths, dt, seed, antithetic))


def reduced_model(market, n_pi=61, n_c=41):
    return _core.reduced_model(json.dumps(market), n_pi, n_c)


def merton_benchmark(market):
    return json.loads(_core.merton_benchmark(json.dumps(market)))


def wealth_value(x, market, u):
    return _core.wealth_value(x, json.dumps(market), u)
