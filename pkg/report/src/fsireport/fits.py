"""Least-squares fits on logarithms of the tabulated quantities."""

from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np


def _lsq_line(x: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    """Ordinary least-squares slope and intercept of y over x."""
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


def fit_loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Slope of log(y) vs log(x); requires positive entries."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0)
    if keep.sum() < 2:
        raise ValueError("need at least two positive points for a slope fit")
    slope, _ = _lsq_line(np.log(x[keep]), np.log(y[keep]))
    return slope


def fit_geometric_factor(ks: Sequence[int], norms: Sequence[float]) -> float:
    """Per-iteration decay factor of a geometric sequence.

    Fits log(norm) vs iteration index by least squares and returns
    exp(slope), the average contraction factor per step.
    """
    ks = np.asarray(ks, dtype=float)
    norms = np.asarray(norms, dtype=float)
    keep = norms > 0
    if keep.sum() < 2:
        raise ValueError("need at least two positive norms for a factor fit")
    slope, _ = _lsq_line(ks[keep], np.log(norms[keep]))
    return float(np.exp(slope))
