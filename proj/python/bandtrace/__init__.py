"""Finite sections of periodic Fermi projections and their log-corrected traces."""

import json as _json

from ._core import (
    EigensolverError,
    Potential,
    Problem,
    ValidationError,
    band_edges,
    fibre_eigenvalues,
    lw_trace,
    schatten_q,
    trace_h,
    widom_coefficient,
)
from ._core import fit_csv
from ._core import run_sweep as _run_sweep


def run_sweep(config):
    """Run a sweep from a config dict (or JSON string); returns rows and metadata."""
    if not isinstance(config, str):
        config = _json.dumps(config)
    return _run_sweep(config)


__all__ = [
    "EigensolverError",
    "Potential",
    "Problem",
    "ValidationError",
    "band_edges",
    "fibre_eigenvalues",
    "fit_csv",
    "lw_trace",
    "run_sweep",
    "schatten_q",
    "trace_h",
    "widom_coefficient",
]
