"""Discovery and parsing of the simulation CLI's CSV artifacts.

Discovery is by exact filename in the run directory root.  Parsing is
strict: a file whose header or rows do not match the documented format
raises ``ArtifactError`` so the renderer can flag the section as
unreadable without aborting the report.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from typing import Dict, List, Optional

HISTORY = "history.csv"
STUDY_MMS = "study_mms.csv"
STUDY_EPS = "study_eps.csv"
ESTIMATES = "estimate_report.csv"
NORMS = "norms.csv"

KNOWN_FILES = (HISTORY, STUDY_MMS, STUDY_EPS, ESTIMATES, NORMS)

_HEADERS = {
    HISTORY: ["eps", "k", "update_norm_X", "contraction_factor",
              "picard_total"],
    STUDY_MMS: ["side", "refinement", "h", "error", "order"],
    STUDY_EPS: ["eps", "u_gap_x", "grad_gap", "a_gap", "reg_energy"],
    ESTIMATES: ["estimate_id", "constant", "samples", "refinement", "pass",
                "slack"],
    NORMS: ["name", "value", "component1", "component2", "component3"],
}


class ArtifactError(Exception):
    """A discovered CSV does not conform to the documented format."""


@dataclass
class HistoryRow:
    eps: float
    k: int
    update_norm_x: float
    contraction_factor: float
    picard_total: int


@dataclass
class MmsRow:
    side: str
    refinement: int
    h: float
    error: float
    order: float


@dataclass
class EpsRow:
    eps: float
    u_gap_x: float
    grad_gap: float
    a_gap: float
    reg_energy: float


@dataclass
class EstimateRow:
    estimate_id: str
    constant: float
    samples: int
    refinement: int
    passed: Optional[bool]
    slack: float


@dataclass
class NormRow:
    name: str
    value: float
    components: List[float]


@dataclass
class RunArtifacts:
    """Paths of the known CSV kinds found under a run directory."""

    root: str
    paths: Dict[str, str]

    def has(self, kind: str) -> bool:
        return kind in self.paths


def discover_artifacts(root: str) -> RunArtifacts:
    if not os.path.isdir(root):
        raise ArtifactError(f"not a directory: {root}")
    paths = {name: os.path.join(root, name) for name in KNOWN_FILES
             if os.path.isfile(os.path.join(root, name))}
    return RunArtifacts(root=root, paths=paths)


def _read_rows(path: str, kind: str) -> List[List[str]]:
    expect = _HEADERS[kind]
    try:
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
    except OSError as exc:
        raise ArtifactError(f"cannot read {path}: {exc}") from exc
    if not rows or rows[0] != expect:
        raise ArtifactError(
            f"{os.path.basename(path)}: expected header {','.join(expect)}")
    for row in rows[1:]:
        if len(row) != len(expect):
            raise ArtifactError(
                f"{os.path.basename(path)}: row has {len(row)} fields, "
                f"expected {len(expect)}")
    return rows[1:]


def _num(text: str, path: str) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise ArtifactError(
            f"{os.path.basename(path)}: not a number: {text!r}") from exc


def _int(text: str, path: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise ArtifactError(
            f"{os.path.basename(path)}: not an integer: {text!r}") from exc


def load_history(path: str) -> List[HistoryRow]:
    return [HistoryRow(eps=_num(r[0], path), k=_int(r[1], path),
                       update_norm_x=_num(r[2], path),
                       contraction_factor=_num(r[3], path),
                       picard_total=_int(r[4], path))
            for r in _read_rows(path, HISTORY)]


def load_study_mms(path: str) -> List[MmsRow]:
    return [MmsRow(side=r[0], refinement=_int(r[1], path),
                   h=_num(r[2], path), error=_num(r[3], path),
                   order=_num(r[4], path))
            for r in _read_rows(path, STUDY_MMS)]


def load_study_eps(path: str) -> List[EpsRow]:
    return [EpsRow(eps=_num(r[0], path), u_gap_x=_num(r[1], path),
                   grad_gap=_num(r[2], path), a_gap=_num(r[3], path),
                   reg_energy=_num(r[4], path))
            for r in _read_rows(path, STUDY_EPS)]


def _flag(text: str, path: str) -> Optional[bool]:
    if text == "True":
        return True
    if text == "False":
        return False
    if text == "None":
        return None
    raise ArtifactError(f"{os.path.basename(path)}: bad pass flag {text!r}")


def load_estimates(path: str) -> List[EstimateRow]:
    return [EstimateRow(estimate_id=r[0], constant=_num(r[1], path),
                        samples=_int(r[2], path),
                        refinement=_int(r[3], path),
                        passed=_flag(r[4], path), slack=_num(r[5], path))
            for r in _read_rows(path, ESTIMATES)]


def load_norms(path: str) -> List[NormRow]:
    return [NormRow(name=r[0], value=_num(r[1], path),
                    components=[_num(c, path) for c in r[2:]])
            for r in _read_rows(path, NORMS)]
