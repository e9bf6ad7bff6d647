"""Quasi-linear diffusion laws with certified monotonicity/Lipschitz constants."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import CertificationError, ConfigError, DomainError


@dataclass(frozen=True)
class DiffusionLaw:
    """Vector law a(t, xi) acting on 2-vectors, with a(t, 0) = 0.

    c_m and lip are the certified strong-monotonicity and Lipschitz constants:
    (a(t,xi)-a(t,eta)).(xi-eta) >= c_m |xi-eta|^2 and |a(t,xi)-a(t,eta)| <=
    lip |xi-eta| for all t in [0, t_final].
    """

    id: str
    kappa: float = 1.0
    beta: float = 0.0
    alpha_fn: Optional[Callable[[float], float]] = None
    alpha_min: float = 1.0
    alpha_max: float = 1.0
    t_final: float = 1.0
    c_m: float = 1.0
    lip: float = 1.0


@dataclass(frozen=True)
class SolidParams:
    mu: float = 1.0
    lam: float = 0.5

    def __post_init__(self):
        if self.mu <= 0 or self.lam < 0:
            raise ConfigError("require mu > 0 and lambda >= 0")


@dataclass(frozen=True)
class FluidParams:
    law: DiffusionLaw
    nu: float = 1.0

    def __post_init__(self):
        if self.nu != 1.0:
            raise ConfigError("viscosity is normalized to 1")


def linear_law(kappa: float = 1.0, t_final: float = 1.0) -> DiffusionLaw:
    if kappa <= 0:
        raise ConfigError("linear law requires kappa > 0")
    return DiffusionLaw("linear", kappa=kappa, t_final=t_final, c_m=kappa, lip=kappa)


def saturating_law(kappa: float = 1.0, beta: float = 1.0, t_final: float = 1.0) -> DiffusionLaw:
    if kappa <= 0 or beta < 0:
        raise ConfigError("saturating law requires kappa > 0 and beta >= 0")
    return DiffusionLaw("saturating", kappa=kappa, beta=beta, t_final=t_final,
                        c_m=kappa, lip=kappa + beta)


def time_modulated_law(alpha_min: float, alpha_max: float, beta: float = 0.0,
                       t_final: float = 1.0,
                       alpha_fn: Optional[Callable[[float], float]] = None) -> DiffusionLaw:
    """Law alpha(t)*xi + beta*xi/(1+|xi|) with 0 < alpha_min <= alpha <= alpha_max.

    The default modulation is a full sine sweep between the two bounds over
    [0, t_final].
    """
    if not 0 < alpha_min <= alpha_max or beta < 0:
        raise ConfigError("require 0 < alpha_min <= alpha_max and beta >= 0")
    if alpha_fn is None:
        mid = 0.5 * (alpha_min + alpha_max)
        amp = 0.5 * (alpha_max - alpha_min)

        def alpha_fn(t, _mid=mid, _amp=amp, _T=t_final):
            return _mid + _amp * np.sin(2.0 * np.pi * t / _T)

    return DiffusionLaw("time-modulated", beta=beta, alpha_fn=alpha_fn,
                        alpha_min=alpha_min, alpha_max=alpha_max, t_final=t_final,
                        c_m=alpha_min, lip=alpha_max + beta)


def make_law(law_id: str, kappa: float = 1.0, beta: float = 1.0,
             alpha_min: float = 1.0, alpha_max: float = 3.0,
             t_final: float = 1.0) -> DiffusionLaw:
    if law_id == "linear":
        return linear_law(kappa, t_final)
    if law_id == "saturating":
        return saturating_law(kappa, beta, t_final)
    if law_id == "time-modulated":
        return time_modulated_law(alpha_min, alpha_max, beta, t_final)
    raise ConfigError(f"unknown law id {law_id!r}")


def _check_time(law: DiffusionLaw, t):
    t = np.asarray(t)
    if np.any(t < 0.0) or np.any(t > law.t_final):
        raise DomainError(f"time outside [0, {law.t_final}]")


def _coeff(law: DiffusionLaw, t):
    if law.id == "time-modulated":
        return np.asarray(law.alpha_fn(np.asarray(t, dtype=float)), dtype=float)
    return np.asarray(law.kappa)


def eval_law(law: DiffusionLaw, t, xi: np.ndarray) -> np.ndarray:
    """Evaluate a(t, xi) for a batch of 2-vectors xi of shape (..., 2).

    t may be a scalar or an array broadcastable against xi[..., 0].
    """
    _check_time(law, t)
    xi = np.asarray(xi, dtype=float)
    out = _coeff(law, t)[..., None] * xi
    if law.beta != 0.0:
        mag = np.linalg.norm(xi, axis=-1, keepdims=True)
        out = out + law.beta * xi / (1.0 + mag)
    return out


def eval_law_jacobian(law: DiffusionLaw, t: float, xi: np.ndarray) -> np.ndarray:
    """Exact Jacobian d a / d xi, shape (..., 2, 2)."""
    _check_time(law, t)
    xi = np.asarray(xi, dtype=float)
    eye = np.eye(2)
    out = _coeff(law, t)[..., None, None] * np.broadcast_to(eye, xi.shape + (2,)).copy()
    if law.beta != 0.0:
        mag = np.linalg.norm(xi, axis=-1)[..., None, None]
        outer = xi[..., :, None] * xi[..., None, :]
        # d/dxi [xi / (1+|xi|)] = I/(1+|xi|) - (xi xi^T) / (|xi| (1+|xi|)^2)
        with np.errstate(invalid="ignore", divide="ignore"):
            corr = np.where(mag > 0, outer / (mag * (1.0 + mag) ** 2), 0.0)
        out = out + law.beta * (eye / (1.0 + mag) - corr)
    return out


def certify_constants(law: DiffusionLaw, samples: int = 10000,
                      seed: int = 0) -> tuple[float, float]:
    """Empirical monotonicity/Lipschitz constants over random (t, xi, eta).

    Returns (c_m_hat, lip_hat) and raises CertificationError if they violate
    the law's certified constants beyond 1e-9.
    """
    if samples < 10000:
        raise ConfigError("certification needs at least 1e4 samples")
    rng = np.random.default_rng(seed)
    t = rng.uniform(0.0, law.t_final, samples)
    scale = 10.0 ** rng.uniform(-6, 3, (samples, 1))
    xi = rng.standard_normal((samples, 2)) * scale
    eta = rng.standard_normal((samples, 2)) * scale
    d = xi - eta
    da = eval_law(law, t, xi) - eval_law(law, t, eta)
    dd = np.sum(d * d, axis=1)
    mono = np.sum(da * d, axis=1) / dd
    lipq = np.linalg.norm(da, axis=1) / np.sqrt(dd)
    c_m_hat = float(np.min(mono))
    lip_hat = float(np.max(lipq))
    if c_m_hat < law.c_m - 1e-9:
        raise CertificationError(
            f"law {law.id}: measured monotonicity {c_m_hat} below certified {law.c_m}")
    if lip_hat > law.lip + 1e-9:
        raise CertificationError(
            f"law {law.id}: measured Lipschitz {lip_hat} above certified {law.lip}")
    return c_m_hat, lip_hat
