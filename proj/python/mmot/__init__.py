"""Multi-marginal dynamical optimal transport on a staggered space-time grid."""

import json
import os

from ._core import (
    ConfigError,
    ConvergenceError,
    DegenerateOutputError,
    DimensionError,
    MissingArtifactError,
    MmotError,
    ParameterError,
    ValidationError,
    analytic_map,
    comonotone_coupling,
    preset_marginal,
    prox_perspective,
    static_optimum,
)
from . import _core

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "DegenerateOutputError",
    "DimensionError",
    "MissingArtifactError",
    "MmotError",
    "ParameterError",
    "ValidationError",
    "analytic_map",
    "check",
    "comonotone_coupling",
    "compare",
    "oracle",
    "preset_marginal",
    "prox_perspective",
    "run",
    "solve",
    "static_optimum",
]


def solve(config=None):
    """Solve in memory. Returns a dict with the objective, diagnostics and the
    clipped terminal coupling as an array of shape (n_x,) * k."""
    out = json.loads(_core._solve(json.dumps(config or {})))
    out["coupling"] = _core._as_array(out["coupling"], out["n_x"], out["k"])
    return out


def run(config=None, out="run", force=False):
    """Solve and write the run directory; returns the manifest."""
    return json.loads(_core._run_solve(json.dumps(config or {}), os.fspath(out), force))


def compare(run_dir):
    return json.loads(_core._run_compare(os.fspath(run_dir)))


def check(path):
    return json.loads(_core._run_check(os.fspath(path)))


def oracle(config=None, out="oracle", force=False):
    return json.loads(_core._run_oracle(json.dumps(config or {}), os.fspath(out), force))
