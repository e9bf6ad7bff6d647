"""Report rendering: one static HTML page plus a PNG per figure.

Each known CSV kind maps to one section.  A missing file yields a
placeholder section; a file that fails to parse yields a section flagged
unreadable.  Neither aborts the report.
"""

from __future__ import annotations

import html
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from . import artifacts as art
from .fits import fit_geometric_factor, fit_loglog_slope

OK = "ok"
MISSING = "missing"
UNREADABLE = "unreadable"


@dataclass
class ReportSummary:
    """What the renderer produced, for callers and tests."""

    html_path: str
    png_paths: List[str] = field(default_factory=list)
    status: Dict[str, str] = field(default_factory=dict)
    fitted_factor: Optional[float] = None
    recorded_mean_factor: Optional[float] = None
    eps_slope: Optional[float] = None
    mms_slopes: Dict[str, float] = field(default_factory=dict)


def _fig_path(out_html: str, name: str) -> str:
    return os.path.join(os.path.dirname(os.path.abspath(out_html)), name)


def _section(title: str, body: str) -> str:
    return f"<section>\n<h2>{html.escape(title)}</h2>\n{body}\n</section>"


def _placeholder(filename: str) -> str:
    return (f'<p class="placeholder">no {html.escape(filename)} in the run '
            f"directory</p>")


def _unreadable(filename: str, err: Exception) -> str:
    return (f'<p class="unreadable">{html.escape(filename)} unreadable: '
            f"{html.escape(str(err))}</p>")


def _history_section(rows: List[art.HistoryRow], out_html: str,
                     summary: ReportSummary) -> str:
    levels: Dict[float, List[art.HistoryRow]] = {}
    for row in rows:
        levels.setdefault(row.eps, []).append(row)

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    table_lines = []
    for eps, recs in levels.items():
        ks = [r.k for r in recs]
        norms = [r.update_norm_x for r in recs]
        pos = [(k, n) for k, n in zip(ks, norms) if n > 0]
        if pos:
            ax.semilogy(*zip(*pos), marker="o",
                        label=f"eps = {eps:g}")
        factors = [r.contraction_factor for r in recs if r.k >= 2]
        mean = sum(factors) / len(factors) if factors else float("nan")
        try:
            fitted = fit_geometric_factor(ks, norms)
        except ValueError:
            fitted = float("nan")
        # the last schedule level is the converged operator; its fit is the
        # headline contraction factor
        summary.fitted_factor = fitted
        summary.recorded_mean_factor = mean
        table_lines.append(
            f"<tr><td>{eps:g}</td><td>{len(recs)}</td>"
            f"<td>{fitted:.4f}</td><td>{mean:.4f}</td></tr>")
    ax.set_xlabel("outer iteration k")
    ax.set_ylabel("update norm in X")
    ax.legend()
    ax.set_title("fixed-point update norms")
    png = _fig_path(out_html, "history.png")
    fig.savefig(png, dpi=110)
    plt.close(fig)
    summary.png_paths.append(png)

    table = ("<table><tr><th>eps</th><th>iterations</th>"
             "<th>fitted factor</th><th>recorded mean factor</th></tr>"
             + "".join(table_lines) + "</table>")
    headline = (f'<p>fitted contraction factor (final level): '
                f'<span id="contraction-factor">'
                f"{summary.fitted_factor:.4f}</span></p>")
    return f'<img src="history.png" alt="update norms"/>\n{headline}\n{table}'


def _eps_section(rows: List[art.EpsRow], out_html: str,
                 summary: ReportSummary) -> str:
    eps = [r.eps for r in rows]
    gaps = [r.u_gap_x for r in rows]
    try:
        slope = fit_loglog_slope(eps, gaps)
    except ValueError:
        slope = float("nan")
    summary.eps_slope = slope

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    pos = [(e, g) for e, g in zip(eps, gaps) if e > 0 and g > 0]
    if pos:
        ax.loglog(*zip(*pos), marker="o", label="|u*_eps - u*_last|_X")
    ax.set_xlabel("eps")
    ax.set_ylabel("distance to smallest-eps fixed point")
    ax.set_title(f"eps-limit study (fitted slope {slope:.3f})")
    ax.legend()
    png = _fig_path(out_html, "eps_study.png")
    fig.savefig(png, dpi=110)
    plt.close(fig)
    summary.png_paths.append(png)

    header = ("<tr><th>eps</th><th>u gap</th><th>grad gap</th>"
              "<th>a gap</th><th>reg energy</th></tr>")
    body = "".join(
        f"<tr><td>{r.eps:g}</td><td>{r.u_gap_x:.4e}</td>"
        f"<td>{r.grad_gap:.4e}</td><td>{r.a_gap:.4e}</td>"
        f"<td>{r.reg_energy:.4e}</td></tr>" for r in rows)
    return (f'<img src="eps_study.png" alt="eps study"/>\n'
            f'<p>fitted log-log slope: <span id="eps-slope">{slope:.4f}'
            f"</span></p>\n<table>{header}{body}</table>")


def _mms_section(rows: List[art.MmsRow], out_html: str,
                 summary: ReportSummary) -> str:
    sides: Dict[str, List[art.MmsRow]] = {}
    for row in rows:
        sides.setdefault(row.side, []).append(row)

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    notes = []
    for side, recs in sides.items():
        hs = [r.h for r in recs]
        errs = [r.error for r in recs]
        try:
            slope = fit_loglog_slope(hs, errs)
        except ValueError:
            slope = float("nan")
        summary.mms_slopes[side] = slope
        ax.loglog(hs, errs, marker="o", label=f"{side} (order {slope:.2f})")
        notes.append(f'<li>{html.escape(side)}: fitted order '
                     f'<span id="mms-slope-{html.escape(side)}">'
                     f"{slope:.4f}</span></li>")
    ax.set_xlabel("mesh size h")
    ax.set_ylabel("manufactured-solution error")
    ax.set_title("MMS convergence")
    ax.legend()
    png = _fig_path(out_html, "mms_orders.png")
    fig.savefig(png, dpi=110)
    plt.close(fig)
    summary.png_paths.append(png)
    return f'<img src="mms_orders.png" alt="MMS orders"/>\n<ul>{"".join(notes)}</ul>'


def _estimate_section(rows: List[art.EstimateRow]) -> str:
    header = ("<tr><th>estimate</th><th>constant</th><th>samples</th>"
              "<th>refinement</th><th>pass</th><th>slack</th></tr>")
    body = []
    for r in rows:
        flag = "not evaluated" if r.passed is None else str(r.passed)
        cls = {True: "pass", False: "fail", None: "skip"}[r.passed]
        body.append(
            f'<tr class="{cls}"><td>{html.escape(r.estimate_id)}</td>'
            f"<td>{r.constant:.6g}</td><td>{r.samples}</td>"
            f"<td>{r.refinement}</td><td>{flag}</td>"
            f"<td>{r.slack:g}</td></tr>")
    return f"<table>{header}{''.join(body)}</table>"


def _norms_section(rows: List[art.NormRow]) -> str:
    body = "".join(
        f"<tr><td>{html.escape(r.name)}</td><td>{r.value:.6e}</td>"
        f"<td>{', '.join(f'{c:.6e}' for c in r.components)}</td></tr>"
        for r in rows)
    return ("<table><tr><th>name</th><th>value</th><th>components</th></tr>"
            + body + "</table>")


_STYLE = """
body { font-family: sans-serif; margin: 2em; max-width: 60em; }
table { border-collapse: collapse; margin: 1em 0; }
td, th { border: 1px solid #999; padding: 0.3em 0.7em; }
tr.fail td { background: #fdd; }
tr.skip td { color: #777; }
.placeholder, .unreadable { color: #777; font-style: italic; }
.unreadable { color: #a33; }
img { max-width: 100%; }
"""


def generate_report(root: str, out_html: str) -> ReportSummary:
    """Render the report for a run directory; see module docstring."""
    found = art.discover_artifacts(root)
    if not found.paths:
        raise art.ArtifactError(
            f"no known run CSVs (one of {', '.join(art.KNOWN_FILES)}) "
            f"found in {root}")

    summary = ReportSummary(html_path=os.path.abspath(out_html))
    sections = []
    plan = (
        ("Coupled fixed-point history", art.HISTORY, art.load_history,
         lambda rows: _history_section(rows, out_html, summary)),
        ("Regularization-limit study", art.STUDY_EPS, art.load_study_eps,
         lambda rows: _eps_section(rows, out_html, summary)),
        ("Manufactured-solution convergence", art.STUDY_MMS,
         art.load_study_mms,
         lambda rows: _mms_section(rows, out_html, summary)),
        ("Estimate verification", art.ESTIMATES, art.load_estimates,
         _estimate_section),
        ("Recorded norms", art.NORMS, art.load_norms, _norms_section),
    )
    for title, kind, loader, renderer in plan:
        if not found.has(kind):
            summary.status[kind] = MISSING
            sections.append(_section(title, _placeholder(kind)))
            continue
        try:
            rows = loader(found.paths[kind])
            body = renderer(rows)
        except art.ArtifactError as exc:
            summary.status[kind] = UNREADABLE
            sections.append(_section(title, _unreadable(kind, exc)))
            continue
        summary.status[kind] = OK
        sections.append(_section(title, body))

    page = (
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\"/>\n"
        f"<title>run report: {html.escape(os.path.basename(os.path.abspath(root)))}"
        f"</title>\n<style>{_STYLE}</style>\n</head>\n<body>\n"
        f"<h1>Run report</h1>\n<p>source: {html.escape(os.path.abspath(root))}"
        "</p>\n" + "\n".join(sections) + "\n</body>\n</html>\n")
    with open(out_html, "w") as f:
        f.write(page)
    return summary
