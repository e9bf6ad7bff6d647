"""Static HTML reports from stokeslame CSV run artifacts.

The package is a pure consumer of the CSV files the simulation CLI writes
(history, studies, estimate report, norms); it never recomputes norms or
re-runs solvers.
"""

from .artifacts import RunArtifacts, discover_artifacts
from .fits import fit_geometric_factor, fit_loglog_slope
from .render import generate_report

__all__ = [
    "RunArtifacts",
    "discover_artifacts",
    "fit_geometric_factor",
    "fit_loglog_slope",
    "generate_report",
]
