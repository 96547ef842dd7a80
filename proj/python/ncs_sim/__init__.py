"""Power control and quantized state estimation over a fading channel."""

import json

from . import _ncs
from ._ncs import (
    ConfigError,
    NcsError,
    lambert_w0,
    lambert_w0_complex,
    matrix_exponential,
    noise_covariance,
    solve_dare,
)

__all__ = [
    "ConfigError",
    "NcsError",
    "config",
    "lambert_w0",
    "lambert_w0_complex",
    "matrix_exponential",
    "noise_covariance",
    "run_episode",
    "simulate",
    "solve_dare",
    "stability_check",
    "threshold",
    "via_solve",
]


def _dump(cfg):
    if cfg is None:
        return ""
    return json.dumps({k: (v.tolist() if hasattr(v, "tolist") else v) for k, v in cfg.items()})


def config(cfg=None):
    """Fully resolved configuration for a dict of overrides."""
    return json.loads(_ncs.resolved_config(_dump(cfg)))


def simulate(cfg=None, seed=None, trials=None):
    """Monte Carlo aggregate metrics as a dict."""
    return json.loads(_ncs.simulate(_dump(cfg), seed, trials))


def run_episode(cfg=None, seed=1, horizon=-1):
    """One episode; returns (metrics, trace) with numpy arrays in the trace."""
    metrics, trace = _ncs.run_episode(_dump(cfg), seed, horizon)
    return json.loads(metrics), trace


def threshold(cfg, delta, alpha, lambda_=float("nan")):
    return _ncs.threshold(_dump(cfg), delta, alpha, lambda_)


def stability_check(cfg=None):
    return _ncs.stability_check(_dump(cfg))


def via_solve(cfg=None):
    return _ncs.via_solve(_dump(cfg))
