"""Run configuration: a flat sectioned key=value file with strict validation.

Every key has a documented default; unknown sections or keys are rejected so
that typos cannot silently fall back to defaults.  parse/serialize round-trip
to an equal configuration.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass
from typing import Tuple

from .errors import ConfigError, GeometryError
from .coupling import CouplingConfig
from .geometry import TimeGrid, build_geometry
from .laws import DiffusionLaw, FluidParams, SolidParams, make_law

_SCHEMA = {
    "geometry": {
        "preset": "flat-channel",
        "amplitude": "0.0",
        "refinement": "1",
    },
    "time": {
        "t_final": "1.0",
        "n_steps": "16",
    },
    "solid": {
        "mu": "1.0",
        "lambda": "0.5",
    },
    "law": {
        "id": "saturating",
        "kappa": "1.0",
        "beta": "1.0",
        "alpha_min": "1.0",
        "alpha_max": "3.0",
    },
    "coupling": {
        "eps_schedule": "1e-2",
        "omega": "0.7",
        "rho_mode": "one",
        "tol_rel": "1e-8",
        "tol_abs": "1e-12",
        "max_outer": "50",
        "newton": "false",
    },
    "data": {
        "body_force": "none",
        "v0": "zero",
    },
    "output": {
        "out": "out",
        "dump_fields": "false",
        "seed": "0",
    },
}

_BODY_FORCE_PRESETS = ("none", "unit-right", "unit-down")
_V0_PRESETS = ("zero",)
_RHO_MODES = ("one", "paper")


@dataclass(frozen=True)
class RunConfig:
    preset: str
    amplitude: float
    refinement: int
    t_final: float
    n_steps: int
    mu: float
    lam: float
    law_id: str
    kappa: float
    beta: float
    alpha_min: float
    alpha_max: float
    eps_schedule: Tuple[float, ...]
    omega: float
    rho_mode: str
    tol_rel: float
    tol_abs: float
    max_outer: int
    newton: bool
    body_force: str
    v0: str
    out: str
    dump_fields: bool
    seed: int

    def solid_params(self) -> SolidParams:
        return SolidParams(mu=self.mu, lam=self.lam)

    def law(self) -> DiffusionLaw:
        return make_law(self.law_id, kappa=self.kappa, beta=self.beta,
                        alpha_min=self.alpha_min, alpha_max=self.alpha_max,
                        t_final=self.t_final)

    def fluid_params(self) -> FluidParams:
        return FluidParams(self.law())

    def grid(self) -> TimeGrid:
        return TimeGrid(self.t_final, self.n_steps)

    def coupling_config(self, rho: float = 1.0) -> CouplingConfig:
        return CouplingConfig(eps_schedule=self.eps_schedule, omega=self.omega,
                              rho=rho, tol_rel=self.tol_rel,
                              tol_abs=self.tol_abs, max_outer=self.max_outer)


def _get_float(raw: dict, section: str, key: str) -> float:
    try:
        return float(raw[section][key])
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: not a number "
                          f"({raw[section][key]!r})") from exc


def _get_int(raw: dict, section: str, key: str) -> int:
    try:
        return int(raw[section][key])
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: not an integer "
                          f"({raw[section][key]!r})") from exc


def _get_bool(raw: dict, section: str, key: str) -> bool:
    val = raw[section][key].strip().lower()
    if val in ("true", "1", "yes", "on"):
        return True
    if val in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"[{section}] {key}: not a boolean ({val!r})")


def _build(raw: dict) -> RunConfig:
    sched = tuple(float(tok) for tok in
                  raw["coupling"]["eps_schedule"].split(",") if tok.strip())
    if not sched:
        raise ConfigError("[coupling] eps_schedule: empty")
    cfg = RunConfig(
        preset=raw["geometry"]["preset"],
        amplitude=_get_float(raw, "geometry", "amplitude"),
        refinement=_get_int(raw, "geometry", "refinement"),
        t_final=_get_float(raw, "time", "t_final"),
        n_steps=_get_int(raw, "time", "n_steps"),
        mu=_get_float(raw, "solid", "mu"),
        lam=_get_float(raw, "solid", "lambda"),
        law_id=raw["law"]["id"],
        kappa=_get_float(raw, "law", "kappa"),
        beta=_get_float(raw, "law", "beta"),
        alpha_min=_get_float(raw, "law", "alpha_min"),
        alpha_max=_get_float(raw, "law", "alpha_max"),
        eps_schedule=sched,
        omega=_get_float(raw, "coupling", "omega"),
        rho_mode=raw["coupling"]["rho_mode"],
        tol_rel=_get_float(raw, "coupling", "tol_rel"),
        tol_abs=_get_float(raw, "coupling", "tol_abs"),
        max_outer=_get_int(raw, "coupling", "max_outer"),
        newton=_get_bool(raw, "coupling", "newton"),
        body_force=raw["data"]["body_force"],
        v0=raw["data"]["v0"],
        out=raw["output"]["out"],
        dump_fields=_get_bool(raw, "output", "dump_fields"),
        seed=_get_int(raw, "output", "seed"),
    )
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    # re-run the owning modules' range checks eagerly so errors surface at
    # parse time, not mid-run
    try:
        build_geometry(cfg.preset, cfg.amplitude, cfg.refinement)
    except GeometryError as exc:
        raise ConfigError(f"[geometry] {exc}") from exc
    cfg.grid()
    cfg.solid_params()
    cfg.law()
    cfg.coupling_config()
    if cfg.rho_mode not in _RHO_MODES:
        raise ConfigError(f"[coupling] rho_mode must be one of {_RHO_MODES}")
    if cfg.body_force not in _BODY_FORCE_PRESETS:
        raise ConfigError(f"[data] body_force must be one of {_BODY_FORCE_PRESETS}")
    if cfg.v0 not in _V0_PRESETS:
        raise ConfigError(f"[data] v0 must be one of {_V0_PRESETS}")
    if cfg.seed < 0:
        raise ConfigError("[output] seed must be nonnegative")


def default_config() -> RunConfig:
    return _build({s: dict(kv) for s, kv in _SCHEMA.items()})


def parse_config(path: str) -> RunConfig:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as f:
            parser.read_file(f)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error in {path}: {exc}") from exc
    raw = {s: dict(kv) for s, kv in _SCHEMA.items()}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, value in parser.items(section):
            if key not in _SCHEMA[section]:
                known = ", ".join(sorted(_SCHEMA[section]))
                raise ConfigError(
                    f"unknown key {key!r} in [{section}] (known: {known})")
            raw[section][key] = value
    return _build(raw)


def serialize_config(cfg: RunConfig) -> str:
    sched = ",".join(repr(e) for e in cfg.eps_schedule)
    lines = [
        "[geometry]",
        f"preset = {cfg.preset}",
        f"amplitude = {cfg.amplitude!r}",
        f"refinement = {cfg.refinement}",
        "",
        "[time]",
        f"t_final = {cfg.t_final!r}",
        f"n_steps = {cfg.n_steps}",
        "",
        "[solid]",
        f"mu = {cfg.mu!r}",
        f"lambda = {cfg.lam!r}",
        "",
        "[law]",
        f"id = {cfg.law_id}",
        f"kappa = {cfg.kappa!r}",
        f"beta = {cfg.beta!r}",
        f"alpha_min = {cfg.alpha_min!r}",
        f"alpha_max = {cfg.alpha_max!r}",
        "",
        "[coupling]",
        f"eps_schedule = {sched}",
        f"omega = {cfg.omega!r}",
        f"rho_mode = {cfg.rho_mode}",
        f"tol_rel = {cfg.tol_rel!r}",
        f"tol_abs = {cfg.tol_abs!r}",
        f"max_outer = {cfg.max_outer}",
        f"newton = {str(cfg.newton).lower()}",
        "",
        "[data]",
        f"body_force = {cfg.body_force}",
        f"v0 = {cfg.v0}",
        "",
        "[output]",
        f"out = {cfg.out}",
        f"dump_fields = {str(cfg.dump_fields).lower()}",
        f"seed = {cfg.seed}",
        "",
    ]
    return "\n".join(lines)
