"""Simulation laboratory for the extremes of the 4D membrane model."""

from ._mbr4 import (  # noqa: F401
    COVARIANCE_SCALE,
    FIELD_SCALE,
    GAMMA,
    Solver,
    brw_covariance,
    centering,
    derivative_martingale,
    dysonize,
    extract_extremal_process,
    fit_exponential_tail,
    level_set,
    mbrw_covariance,
    pair_max,
    sample_brw,
    sample_mbrw,
    top_sum,
    torus_distance,
)

__all__ = [
    "COVARIANCE_SCALE",
    "FIELD_SCALE",
    "GAMMA",
    "Solver",
    "brw_covariance",
    "centering",
    "derivative_martingale",
    "dysonize",
    "extract_extremal_process",
    "fit_exponential_tail",
    "level_set",
    "mbrw_covariance",
    "pair_max",
    "sample_brw",
    "sample_mbrw",
    "top_sum",
    "torus_distance",
]
