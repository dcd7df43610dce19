"""
Text tables, JSON documents and figures for fitted models.

Numbers are rounded half away from zero at display time only; nothing is
recomputed in the formatter.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Mapping

import numpy as np

from .design import _regressors, coefficient_names, intervention_index, stata_names
from .estimator import FitResult
from .inference import BalanceReport, EstimandResult, lincom

__all__ = [
    "fmt_fixed",
    "fmt_p",
    "render_table",
    "PlotSeries",
    "plot_document",
    "render_svg",
    "emit_plot",
    "results_document",
]

P_FLOOR = 0.0005
P_MARK = "*"

_ROLE_LABELS = {"control1": "Control 1", "treatment": "Treatment", "control2": "Control 2"}


def fmt_fixed(x: float, places: int = 2) -> str:
    """Round half away from zero to ``places`` decimals."""
    if not np.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    q = Decimal(1).scaleb(-places)
    out = Decimal(float(x)).quantize(q, rounding=ROUND_HALF_UP)
    if out == 0:
        out = abs(out)
    return f"{out:f}"


def fmt_p(p: float) -> str:
    """Three-decimal p-value; values below 0.0005 print as ``0.000*``."""
    if p < P_FLOOR:
        return "0.000" + P_MARK
    return fmt_fixed(p, 3)


_HEAD = ("Coefficient", "Estimate", "Std Err", "Z", "P", "LCL", "UCL")


def _row(label: str, est: float, se: float, z: float, p: float, lo: float, hi: float):
    return (
        label,
        fmt_fixed(est),
        fmt_fixed(se),
        fmt_fixed(z),
        fmt_p(p),
        fmt_fixed(lo),
        fmt_fixed(hi),
    )


def _format_rows(rows, head, widths=None) -> list[str]:
    allrows = [head, *rows]
    if widths is None:
        widths = [max(len(r[i]) for r in allrows) for i in range(len(head))]
    lines = []
    for r in allrows:
        cells = [r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
    return lines


def _estimand_row(r: EstimandResult, label: str) -> tuple:
    return _row(label, r.estimate, r.se, r.z, r.p, r.ci_low, r.ci_high)


def render_table(
    fit: FitResult,
    catalog: Mapping[str, EstimandResult] | None = None,
    balance: BalanceReport | None = None,
    posttrend: Mapping[str, EstimandResult] | None = None,
    show_stata_names: bool = True,
) -> str:
    """
    Coefficient table with Estimate, Std Err, Z, P and confidence limits.

    Optional sections follow for post-treatment trends, the estimand
    catalog (the triple-difference block only for three-group fits) and
    the balance battery.
    """
    level = fit.spec.confidence_level
    pct = fmt_fixed(100 * level, 0) if (100 * level).is_integer() else f"{100 * level:g}"
    head = (_HEAD[0], *_HEAD[1:5], f"{pct}% LCL", f"{pct}% UCL")
    stat = "Z" if not fit.use_t else "t"
    head = (head[0], head[1], head[2], stat, *head[4:])

    names = [k for k, _ in coefficient_names(fit.spec)]
    aliases = stata_names(fit.spec)
    rows = []
    for j, key in enumerate(names):
        r = lincom(fit, np.eye(fit.k)[j])
        label = f"{key} {aliases[j]}" if show_stata_names else key
        rows.append(_estimand_row(r, label))

    out = [
        f"{fit.kind}-ITSA regression with Newey-West standard errors (lag {fit.hac_lag})",
        f"Observations: {fit.n}   Coefficients: {fit.k}   "
        f"Intervention: {_fmt_time(fit.spec.intervention_time)}",
        "",
    ]
    out += _format_rows(rows, head)
    used_floor = any(r[4].endswith(P_MARK) for r in rows)

    def section(title: str, results: Mapping[str, EstimandResult], extra=None):
        nonlocal used_floor
        srows = []
        for key, r in results.items():
            srows.append(_estimand_row(r, r.label or key))
        if not srows:
            return
        used_floor = used_floor or any(r[4].endswith(P_MARK) for r in srows)
        lines = _format_rows(srows, ("Estimand", *head[1:]))
        if extra is not None:
            lines = [lines[0]] + [
                f"{line}  {flag}" for line, flag in zip(lines[1:], extra)
            ]
        out.extend(["", title, *lines])

    if posttrend:
        section("Post-treatment trends", posttrend)
    if catalog:
        by_family: dict[str, dict] = {}
        for key, r in catalog.items():
            by_family.setdefault(r.combination.family, {})[key] = r
        titles = {
            "trend": "Trends by group",
            "level": "Levels by group",
            "did": "Difference-in-differences",
            "ddd": "Triple differences",
        }
        for fam in ("trend", "level", "did", "ddd"):
            if fam in by_family:
                section(titles[fam], by_family[fam])
    if balance is not None:
        flags = ["balanced" if balance.passed[k] else "NOT balanced" for k in balance.results]
        section(f"Baseline balance (alpha = {balance.alpha:g})", balance.results, flags)
    out.append("")
    out.append(f"Note: standard errors are Newey-West with lag {fit.hac_lag}; "
               f"{'normal' if not fit.use_t else 't'} reference distribution.")
    if used_floor:
        out.append(f"{P_MARK} p < {P_FLOOR}")
    return "\n".join(out) + "\n"


def _fmt_time(t) -> str:
    t = float(t)
    return str(int(t)) if t.is_integer() else f"{t:g}"


@dataclass(frozen=True)
class PlotSeries:
    """
    Observed points and fitted segments for one group.

    Segments are dicts with ``start``, ``end`` (times), ``intercept`` (fitted
    value at ``start``), ``slope`` (change per period) and ``points``.
    """

    label: str
    role: str
    observed: list
    pre: dict
    post: dict
    counterfactual: dict

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "role": self.role,
            "observed": self.observed,
            "pre": self.pre,
            "post": self.post,
            "counterfactual": self.counterfactual,
        }


def _segment(times, values, start_idx, end_idx, slope) -> dict:
    return {
        "start": times[start_idx].item(),
        "end": times[end_idx].item(),
        "intercept": float(values[start_idx]),
        "slope": float(slope),
        "points": [[times[i].item(), float(values[i])] for i in range(start_idx, end_idx + 1)],
    }


def plot_series(fit: FitResult) -> list[PlotSeries]:
    """One :class:`PlotSeries` per group, in control 1, treatment, control 2 order."""
    spec = fit.spec
    times = fit.times[fit.blocks == fit.blocks[0]]
    N = times.size
    idx = intervention_index(times, spec.intervention_time)
    T = np.arange(N)
    beta = np.asarray(fit.beta)
    out = []
    for role in spec.roles:
        R = _regressors(spec.kind, role, T, idx, spec.interaction_origin)
        fitted = R @ beta
        mask = fit.roles == role
        resid = fit.residuals[mask].reshape(-1, N)
        observed = fitted + resid.mean(axis=0)
        pre_w = R[1] - R[0]
        post_w = R[idx + 1] - R[idx] if idx + 1 < N else R[idx] - R[idx - 1]
        pre_slope, post_slope = pre_w @ beta, post_w @ beta
        # pre line extended over the post period
        cf = R[0] @ beta + pre_slope * T
        members = ""
        if fit.groups is not None:
            units = sorted({u for g in fit.groups if g.role == role for u in g.member_units})
            members = f" ({', '.join(units)})"
        out.append(
            PlotSeries(
                label=_ROLE_LABELS[role] + members,
                role=role,
                observed=[[t.item(), float(v)] for t, v in zip(times, observed)],
                pre=_segment(times, fitted, 0, idx - 1, pre_slope),
                post=_segment(times, fitted, idx, N - 1, post_slope),
                counterfactual=_segment(times, cf, idx, N - 1, pre_slope),
            )
        )
    return out


def plot_document(fit: FitResult) -> dict:
    """Machine-readable figure description (the stable plotting interface)."""
    return {
        "title": f"{fit.kind}-ITSA: observed and fitted outcomes",
        "intervention_time": _num(fit.spec.intervention_time),
        "series": [s.to_dict() for s in plot_series(fit)],
    }


def _num(x):
    return x.item() if hasattr(x, "item") else x


_COLORS = {"control1": "#1f77b4", "treatment": "#d62728", "control2": "#2ca02c"}


def render_svg(doc: Mapping, width: int = 760, height: int = 460) -> str:
    """
    Static SVG line chart from a plot document.

    Output depends only on ``doc``, so re-rendering a saved document gives
    identical bytes.
    """
    ml, mr, mt, mb = 60, 170, 40, 45
    xs, ys = [], []
    for s in doc["series"]:
        for t, v in s["observed"]:
            xs.append(t)
            ys.append(v)
        for seg in ("pre", "post", "counterfactual"):
            for t, v in s[seg]["points"]:
                ys.append(v)
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    pad = 0.05 * (y1 - y0 or 1.0)
    y0, y1 = y0 - pad, y1 + pad
    pw, ph = width - ml - mr, height - mt - mb

    def px(t):
        return ml + (t - x0) / ((x1 - x0) or 1.0) * pw

    def py(v):
        return mt + (y1 - v) / (y1 - y0) * ph

    def pts(points):
        return " ".join(f"{px(t):.2f},{py(v):.2f}" for t, v in points)

    el = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{ml}" y="22" font-size="13">{_esc(doc.get("title", ""))}</text>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
    ]
    for tick in np.linspace(y0 + pad, y1 - pad, 5):
        el.append(f'<line x1="{ml - 4}" y1="{py(tick):.2f}" x2="{ml}" y2="{py(tick):.2f}" stroke="#444"/>')
        el.append(
            f'<text x="{ml - 6}" y="{py(tick) + 4:.2f}" text-anchor="end">{tick:.1f}</text>'
        )
    for tick in np.linspace(x0, x1, 6):
        el.append(
            f'<text x="{px(tick):.2f}" y="{mt + ph + 16}" text-anchor="middle">{tick:g}</text>'
        )
    ti = doc["intervention_time"]
    el.append(
        f'<line x1="{px(ti):.2f}" y1="{mt}" x2="{px(ti):.2f}" y2="{mt + ph}" '
        'stroke="#888" stroke-dasharray="2,3"/>'
    )
    for i, s in enumerate(doc["series"]):
        c = _COLORS.get(s["role"], "#000")
        for t, v in s["observed"]:
            el.append(f'<circle cx="{px(t):.2f}" cy="{py(v):.2f}" r="2.5" fill="{c}"/>')
        for seg in ("pre", "post"):
            el.append(
                f'<polyline points="{pts(s[seg]["points"])}" fill="none" stroke="{c}" stroke-width="1.6"/>'
            )
        el.append(
            f'<polyline points="{pts(s["counterfactual"]["points"])}" fill="none" stroke="{c}" '
            'stroke-width="1.2" stroke-dasharray="5,4"/>'
        )
        ly = mt + 14 + 18 * i
        el.append(f'<line x1="{ml + pw + 12}" y1="{ly}" x2="{ml + pw + 32}" y2="{ly}" stroke="{c}" stroke-width="2"/>')
        el.append(f'<text x="{ml + pw + 36}" y="{ly + 4}">{_esc(s["label"])}</text>')
    el.append("</svg>")
    return "\n".join(el) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def emit_plot(fit: FitResult, json_path=None, svg_path=None) -> dict:
    """Write the plot document (and optionally its SVG rendering); returns the document."""
    doc = plot_document(fit)
    for path, text in ((json_path, lambda: json.dumps(doc, indent=2) + "\n"),
                       (svg_path, lambda: render_svg(doc))):
        if path is None:
            continue
        try:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text())
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    return doc


def results_document(
    fit: FitResult,
    catalog: Mapping[str, EstimandResult] | None = None,
    balance: BalanceReport | None = None,
) -> dict:
    """Fit, estimands and balance as one JSON-ready dict."""
    doc = {"fit": fit.to_dict()}
    if catalog is not None:
        doc["estimands"] = {k: r.to_dict() for k, r in catalog.items()}
    if balance is not None:
        doc["balance"] = balance.to_dict()
    return doc
