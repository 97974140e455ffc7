"""Bayesian mixture autoregressive models: sampling, relabelling, order and
component selection, evidence and density forecasts."""

import json as _json

from ._marbayes import (
    Chain,
    MARSpec,
    density_grid,
    fit,
    forecast,
    hpd_interval,
    is_stable,
    log_likelihood,
    marginal_log_likelihood,
    predictive_mixture,
    simulate,
    spectral_radius,
    theoretical_acf,
)

__version__ = "0.1.0"


def model_a():
    """The two-component example: AR(1) with phi=-0.5 and a unit root."""
    return MARSpec([0.5, 0.5], [0.0, 0.0], [[-0.5], [1.0]], [1.0, 2.0])


def run(command, **settings):
    """Run a harness command (simulate, fit, select, forecast, replicate) and
    return its manifest. Settings use the command-line keys."""
    from ._marbayes import run as _run

    return _json.loads(_run(command, {k: str(v) for k, v in settings.items()}))
