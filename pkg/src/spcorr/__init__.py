"""Spectral projection correlation functions for Markov processes and their
subordinated and inverse-subordinated time changes."""

from importlib.metadata import PackageNotFoundError, version as _version

try:
    __version__ = _version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .corrkernel import (CorrelationQuery, EigenSystem, bochner_corr, correlate,
                         inverse_tc_asymptotic, inverse_tc_bounds, inverse_tc_corr,
                         markov_corr, same_time_corr)
from .subordinate import SubordinatorSpec, eta, laplace_exponent
from .specfun import mittag_leffler

__all__ = [
    "CorrelationQuery",
    "EigenSystem",
    "SubordinatorSpec",
    "bochner_corr",
    "correlate",
    "eta",
    "inverse_tc_asymptotic",
    "inverse_tc_bounds",
    "inverse_tc_corr",
    "laplace_exponent",
    "markov_corr",
    "mittag_leffler",
    "same_time_corr",
]
