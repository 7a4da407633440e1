"""Static SVG renderings of audit and sensitivity outputs.

Hand-rolled SVG keeps the artifact dependency-free and diffable.  Every
number drawn here comes from rows already written to the CSV/JSON outputs;
nothing is recomputed.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

from .errors import StopAuditError

_WIDTH = 640
_HEIGHT = 360
_MARGIN = 48


def _header(width: int = _WIDTH, height: int = _HEIGHT) -> str:
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">'
    )


def _scale(values: Sequence[float], lo_px: float, hi_px: float):
    lo, hi = min(values), max(values)
    if math.isclose(lo, hi):
        lo -= 0.5
        hi += 0.5
    span = hi - lo

    def to_px(v: float) -> float:
        return lo_px + (v - lo) / span * (hi_px - lo_px)

    return to_px, lo, hi


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def render_series_scatter(series, title: str = "") -> str:
    """Scatter of rate vs bin for a CMR series: one circle per bin."""
    points = series.points
    if not points:
        raise StopAuditError("empty series")
    rates = [p.rate for p in points]
    x_px = lambda i: _MARGIN + (
        (i / max(len(points) - 1, 1)) * (_WIDTH - 2 * _MARGIN)
    )
    y_scale, y_lo, y_hi = _scale(rates, _HEIGHT - _MARGIN, _MARGIN)
    parts = [_header()]
    if title:
        parts.append(f'<text x="{_MARGIN}" y="20" font-size="13">{title}</text>')
    parts.append(
        f'<line x1="{_MARGIN}" y1="{_HEIGHT - _MARGIN}" x2="{_WIDTH - _MARGIN}" '
        f'y2="{_HEIGHT - _MARGIN}" stroke="#444"/>'
    )
    parts.append(
        f'<text x="{_MARGIN}" y="{_HEIGHT - 8}" font-size="11">'
        f"{points[0].bin_id} .. {points[-1].bin_id}</text>"
    )
    parts.append(
        f'<text x="4" y="{_MARGIN}" font-size="11">{_fmt(y_hi)}</text>'
        f'<text x="4" y="{_HEIGHT - _MARGIN}" font-size="11">{_fmt(y_lo)}</text>'
    )
    for i, p in enumerate(points):
        parts.append(
            f'<circle class="point" cx="{x_px(i):.1f}" cy="{y_scale(p.rate):.1f}" '
            f'r="3" fill="steelblue"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


def _gray(prop_white: Optional[float]) -> str:
    if prop_white is None or math.isnan(prop_white):
        return "#999999"
    level = int(40 + 180 * prop_white)
    return f"rgb({level},{level // 2},{255 - level})"


def render_outcome_strip(rows: Sequence[dict], title: str = "") -> str:
    """Color-graded strip of augmented disparities per group.

    ``rows`` hold dicts with keys group, prop_white, disparity.  Each group
    gets one horizontal lane of allocation marks plus a black line at the
    median of its augmented disparities.
    """
    if not rows:
        raise StopAuditError("empty sensitivity output")
    groups = sorted({str(r["group"]) for r in rows})
    disparities = [float(r["disparity"]) for r in rows]
    x_scale, _, _ = _scale(disparities + [0.0], _MARGIN, _WIDTH - _MARGIN)
    lane_h = (_HEIGHT - 2 * _MARGIN) / max(len(groups), 1)
    parts = [_header()]
    if title:
        parts.append(f'<text x="{_MARGIN}" y="20" font-size="13">{title}</text>')
    zero_x = x_scale(0.0)
    parts.append(
        f'<line class="zero" x1="{zero_x:.1f}" y1="{_MARGIN}" x2="{zero_x:.1f}" '
        f'y2="{_HEIGHT - _MARGIN}" stroke="#444" stroke-dasharray="4 3"/>'
    )
    for gi, group in enumerate(groups):
        y_mid = _MARGIN + lane_h * (gi + 0.5)
        group_rows = [r for r in rows if str(r["group"]) == group]
        for r in group_rows:
            pw = r.get("prop_white")
            pw = float(pw) if pw is not None else float("nan")
            parts.append(
                f'<circle class="allocation" cx="{x_scale(float(r["disparity"])):.1f}" '
                f'cy="{y_mid:.1f}" r="2.5" fill="{_gray(pw)}" fill-opacity="0.6"/>'
            )
        values = sorted(float(r["disparity"]) for r in group_rows)
        mid = len(values) // 2
        if len(values) % 2:
            median = values[mid]
        else:
            median = (values[mid - 1] + values[mid]) / 2
        mx = x_scale(median)
        parts.append(
            f'<line class="median" x1="{mx:.1f}" y1="{y_mid - lane_h * 0.4:.1f}" '
            f'x2="{mx:.1f}" y2="{y_mid + lane_h * 0.4:.1f}" stroke="black" '
            f'stroke-width="2"/>'
        )
        parts.append(
            f'<text x="4" y="{y_mid + 4:.1f}" font-size="11">{group}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


def render_ate_ribbons(rows: Sequence[dict], title: str = "") -> str:
    """One panel per rho with bound ribbons, naive dots and a dashed zero line.

    ``rows`` hold dicts with keys plan, p_white, rho, naive, lower, upper.
    """
    if not rows:
        raise StopAuditError("empty sensitivity output")
    rhos = sorted({float(r["rho"]) for r in rows})
    panel_w = (_WIDTH - 2 * _MARGIN) / len(rhos)
    all_vals = [float(r[k]) for r in rows for k in ("naive", "lower", "upper")]
    y_scale, _, _ = _scale(all_vals + [0.0], _HEIGHT - _MARGIN, _MARGIN)
    parts = [_header()]
    if title:
        parts.append(f'<text x="{_MARGIN}" y="20" font-size="13">{title}</text>')
    for pi, rho in enumerate(rhos):
        x0 = _MARGIN + pi * panel_w
        x1 = x0 + panel_w - 12
        panel_rows = [r for r in rows if float(r["rho"]) == rho]
        zero_y = y_scale(0.0)
        panel = [f'<g class="panel" data-rho="{rho}">']
        panel.append(
            f'<line class="zero" x1="{x0:.1f}" y1="{zero_y:.1f}" x2="{x1:.1f}" '
            f'y2="{zero_y:.1f}" stroke="#444" stroke-dasharray="4 3"/>'
        )
        panel.append(
            f'<text x="{x0:.1f}" y="{_MARGIN - 6}" font-size="11">rho={rho}</text>'
        )
        n = len(panel_rows)
        for ri, r in enumerate(sorted(panel_rows, key=_plan_sort_key)):
            cx = x0 + (ri + 0.5) / max(n, 1) * (x1 - x0)
            lo_y = y_scale(float(r["lower"]))
            hi_y = y_scale(float(r["upper"]))
            panel.append(
                f'<line class="ribbon" x1="{cx:.1f}" y1="{lo_y:.1f}" '
                f'x2="{cx:.1f}" y2="{hi_y:.1f}" stroke="steelblue" '
                f'stroke-width="5" stroke-opacity="0.5"/>'
            )
            panel.append(
                f'<circle class="naive" cx="{cx:.1f}" cy="{y_scale(float(r["naive"])):.1f}" '
                f'r="3" fill="firebrick"/>'
            )
        panel.append("</g>")
        parts.extend(panel)
    parts.append("</svg>")
    return "\n".join(parts)


def _plan_sort_key(row: dict):
    plan = str(row["plan"])
    pw = row.get("p_white")
    pw = float(pw) if pw not in (None, "") else -1.0
    return (plan, pw, int(row.get("draw", 0) or 0))


CHART_KINDS = ("series-scatter", "outcome-strip", "ate-ribbons")


def render_svg(data, kind: str, title: str = "") -> str:
    """Render one chart kind to a self-contained SVG document.

    ``series-scatter`` takes a CMR series, the sensitivity kinds take the
    row dicts of their respective CSV outputs.
    """
    if kind == "series-scatter":
        return render_series_scatter(data, title=title)
    if kind == "outcome-strip":
        return render_outcome_strip(data, title=title)
    if kind == "ate-ribbons":
        return render_ate_ribbons(data, title=title)
    raise StopAuditError(f"unknown chart kind {kind!r}")
