"""Discrete interface and space-time norms.

Fractional interface norms are realized spectrally: with the generalized
eigenpairs stiff*phi = lambda*mass*phi of the 1-D interface Laplacian (zero
endpoint values), the H^s norm of v = sum c_i phi_i is
(sum (1+lambda_i)^s c_i^2)^(1/2), and the dual H^(-1/2) norm of a load g is
(sum (1+lambda_i)^(-1/2) (phi_i^T g)^2)^(1/2).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict

import numpy as np
import scipy.linalg

from .errors import DomainError, PreconditionError, ShapeError
from .fem import InterfaceSpace
from .geometry import TimeGrid
from .traces import DISPLACEMENT, TraceSeries


@dataclass(frozen=True)
class InterfaceGram:
    """Mass/stiffness Gram operators on the interior interface nodes."""

    mass: np.ndarray      # (m, m) SPD
    stiff: np.ndarray     # (m, m) PSD, zero endpoint values built in
    eigvals: np.ndarray   # (m,) nondecreasing, >= 0
    eigvecs: np.ndarray   # (m, m) columns, mass-orthonormal
    n_if: int             # full interface node count (m + 2)

    @property
    def m(self) -> int:
        return self.mass.shape[0]


def build_gram(iface: InterfaceSpace) -> InterfaceGram:
    sl = iface.interior
    mass = iface.mass[sl, sl]
    stiff = iface.stiff[sl, sl]
    vals, vecs = scipy.linalg.eigh(stiff, mass)
    vals = np.maximum(vals, 0.0)
    return InterfaceGram(mass=mass, stiff=stiff, eigvals=vals, eigvecs=vecs,
                         n_if=iface.n_nodes)


def _interior(gram: InterfaceGram, v: np.ndarray, zero_trace: bool) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape[0] == gram.m:
        return v
    if v.shape[0] == gram.n_if:
        ends = np.abs(v[[0, -1]]).max()
        scale = max(np.abs(v).max(), 1.0)
        if zero_trace and ends > 1e-10 * scale:
            raise PreconditionError("trace violates the zero-endpoint constraint")
        return v[1:-1]
    raise ShapeError(f"interface vector of length {v.shape[0]}; expected "
                     f"{gram.m} or {gram.n_if}")


def eigen_coefficients(gram: InterfaceGram, v: np.ndarray) -> np.ndarray:
    """Mass-orthonormal expansion coefficients of interior nodal values."""
    return gram.eigvecs.T @ (gram.mass @ v)


def fractional_norm(gram: InterfaceGram, s: float, v: np.ndarray) -> float:
    """H^s(Sigma) norm of interface nodal values, s in [0, 1].

    v may be scalar (m,) or multi-component (m, k); components combine in
    quadrature.  Full-length (n_if) inputs must vanish at the endpoints.
    """
    if not 0.0 <= s <= 1.0:
        raise DomainError(f"s = {s} outside [0, 1]")
    v = _interior(gram, v, zero_trace=s > 0.0)
    c = eigen_coefficients(gram, v)
    weights = (1.0 + gram.eigvals) ** s
    if c.ndim == 1:
        return float(np.sqrt(weights @ c ** 2))
    return float(np.sqrt(np.sum(weights[:, None] * c ** 2)))


def dual_half_norm(gram: InterfaceGram, g: np.ndarray) -> float:
    """Dual H^(-1/2)(Sigma) norm of a load (dual) vector g."""
    g = _interior(gram, g, zero_trace=False)
    p = gram.eigvecs.T @ g
    weights = (1.0 + gram.eigvals) ** (-0.5)
    if p.ndim == 1:
        return float(np.sqrt(weights @ p ** 2))
    return float(np.sqrt(np.sum(weights[:, None] * p ** 2)))


def riesz_load(gram: InterfaceGram, v: np.ndarray) -> np.ndarray:
    """Load vector whose pairing realizes the H^(1/2) inner product with v."""
    c = eigen_coefficients(gram, v)
    w = np.sqrt(1.0 + gram.eigvals)
    if c.ndim == 1:
        return gram.mass @ (gram.eigvecs @ (w * c))
    return gram.mass @ (gram.eigvecs @ (w[:, None] * c))


def trace_l2_norm(gram: InterfaceGram, v: np.ndarray) -> float:
    v = _interior(gram, v, zero_trace=False)
    return float(np.sqrt(np.sum(v * (gram.mass @ v))))


@dataclass(frozen=True)
class NormReport:
    name: str
    value: float
    components: Dict[str, float]

    def __post_init__(self):
        if self.value < 0:
            raise ShapeError("norm value must be nonnegative")
        total = sum(self.components.values())
        if abs(self.value ** 2 - total) > 1e-10 * max(total, 1e-300):
            raise ShapeError("norm components do not sum to value^2")

    def csv_row(self) -> str:
        comps = ",".join(repr(c) for c in self.components.values())
        return f"{self.name},{self.value!r},{comps}"


def x_norm(gram: InterfaceGram, grid: TimeGrid, u: TraceSeries) -> NormReport:
    """Intersection norm H^(1/2)(0,T;L2) cap L2(0,T;H^(1/2)_0) of a trace.

    value^2 = Gagliardo-in-time double sum + L2(0,T;L2) + L2(0,T;H^(1/2));
    the time-fractional part uses the quotient kernel |t_m - t_n|^2 with the
    diagonal excluded, summed in ascending (m, n) order.
    """
    if u.role != DISPLACEMENT:
        raise PreconditionError("x_norm expects a displacement-role trace")
    if np.any(u.values[0] != 0.0):
        raise PreconditionError("x_norm requires u(t_0) = 0")
    if u.n_steps != grid.n_steps:
        raise ShapeError("trace series does not match the time grid")
    dt = grid.dt
    times = grid.times
    vals = u.values[:, 1:-1, :]  # interior nodes
    n1 = u.n_steps + 1

    # pairwise L2(Sigma) inner products S[m, n]
    flat = vals.reshape(n1, -1)
    mv = np.einsum("mic,ij->mjc", vals, gram.mass).reshape(n1, -1)
    S = flat @ mv.T

    gag = 0.0
    for m in range(n1):
        nn = np.arange(n1) != m
        num = S[m, m] + np.diag(S)[nn] - 2.0 * S[m, nn]
        gag += float(np.sum(dt ** 2 * num / (times[nn] - times[m]) ** 2))

    l2 = float(np.sum(dt * np.diag(S)[1:]))
    half = float(sum(dt * fractional_norm(gram, 0.5, vals[n]) ** 2
                     for n in range(1, n1)))
    total = gag + l2 + half
    return NormReport(
        name="x_norm", value=float(np.sqrt(total)),
        components={"time_gagliardo": gag, "l2_l2": l2, "l2_h_half": half},
    )


def x_norm_value(gram: InterfaceGram, grid: TimeGrid, u: TraceSeries) -> float:
    return x_norm(gram, grid, u).value


def bochner_norm(kind: str, grid: TimeGrid, mass, stiff, series: np.ndarray) -> float:
    """Rectangle-rule space-time norms of a coefficient series (n_steps+1, ndof).

    kinds: L2L2, L2H1 (mass + stiff spatial norm), H1L2 (backward differences
    in time, mass norm).
    """
    series = np.asarray(series, dtype=float)
    if series.shape[0] != grid.n_steps + 1:
        raise ShapeError("series length does not match the time grid")
    dt = grid.dt
    if kind == "L2L2":
        return float(np.sqrt(sum(dt * series[n] @ (mass @ series[n])
                                 for n in range(1, series.shape[0]))))
    if kind == "L2H1":
        return float(np.sqrt(sum(dt * (series[n] @ (mass @ series[n])
                                       + series[n] @ (stiff @ series[n]))
                                 for n in range(1, series.shape[0]))))
    if kind == "H1L2":
        diffs = np.diff(series, axis=0) / dt
        return float(np.sqrt(sum(dt * d @ (mass @ d) for d in diffs)))
    raise DomainError(f"unknown Bochner norm kind {kind!r}")
