"""Chaining-based uniform mean estimation.

Arrays are row-major point clouds: ``sample`` is N x d, ``directions`` is m x d.
"""

from ._core import (
    ChainmeanError,
    LpOracle,
    block_count,
    covariance,
    covariance_direction_set,
    estimate,
    gaussian_width,
    median_of_means,
    mom_corrupted,
    psd_project,
    simulate,
    simulate_csv,
    trimmed_mean,
)

__all__ = [
    "ChainmeanError",
    "LpOracle",
    "block_count",
    "covariance",
    "covariance_direction_set",
    "estimate",
    "gaussian_width",
    "median_of_means",
    "mom_corrupted",
    "psd_project",
    "simulate",
    "simulate_csv",
    "trimmed_mean",
]
