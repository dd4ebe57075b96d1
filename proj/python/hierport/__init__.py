"""Hierarchical portfolio construction: HRP, HERC and Monte-Carlo mean-variance.

Arrays follow numpy conventions: returns are T x n (rows are dates), covariance
is n x n, and linkage matrices have rows (left, right, height, size) where the
node created by row k has id n + k.
"""

import json as _json

from ._hierport import (
    HierportError,
    __version__,
    correlation,
    correlation_distance,
    covariance,
    cumulative_series,
    cut_k,
    gap_optimal_k,
    herc_weights,
    hrp_weights,
    ivp_weights,
    linkage,
    load_wide_csv,
    mvp,
    portfolio_metrics,
    quasi_diagonalize,
)
from ._hierport import run_pipeline as _run_pipeline


def run_pipeline(config, output_dir=None, seed=None):
    """Run every sector and method in `config`; returns the manifest as a dict."""
    return _json.loads(_run_pipeline(config, output_dir, seed))


def hrp(returns, rule="ward"):
    """HRP weights fitted on a T x n return array."""
    return hrp_weights(covariance(returns), linkage(correlation_distance(returns), rule))


def herc(returns, k=None, rule="ward", risk_measure="std_dev", cluster_weighting="inverse", seed=0):
    """HERC weights; k=None picks the cluster count with the gap statistic."""
    if k is None:
        k = gap_optimal_k(returns, seed=seed, rule=rule)
    return herc_weights(covariance(returns), linkage(correlation_distance(returns), rule), k, risk_measure,
                        cluster_weighting)


__all__ = [
    "HierportError", "__version__", "correlation", "correlation_distance", "covariance", "cumulative_series",
    "cut_k", "gap_optimal_k", "herc", "herc_weights", "hrp", "hrp_weights", "ivp_weights", "linkage",
    "load_wide_csv", "mvp", "portfolio_metrics", "quasi_diagonalize", "run_pipeline",
]
