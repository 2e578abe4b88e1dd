"""Self-contained SVG line charts of metric-vs-sampling-ratio curves.

No plotting dependency: the chart is assembled as text, one polyline per
method, averaging each (method, round) group over trials.
"""

from __future__ import annotations

import math
from pathlib import Path

from .experiment import parse_csv

VALID_METRICS = ("k_test", "ser_db", "psnr_db")

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")

_W, _H = 720, 480
_ML, _MR, _MT, _MB = 70, 160, 24, 56


def aggregate_metric(csv_path, metric: str) -> dict:
    """Per method: (x, y) points sorted by round, where x is the mean sampling
    ratio and y the mean metric over trials. Groups containing a non-finite
    metric value are dropped."""
    if metric not in VALID_METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose one of {VALID_METRICS}")
    rows = parse_csv(csv_path)
    if not rows:
        raise ValueError("empty CSV: no data rows to plot")
    groups: dict = {}
    method_order: list = []
    for row in rows:
        if row.method not in method_order:
            method_order.append(row.method)
        groups.setdefault((row.method, row.round), []).append(row)
    curves: dict = {}
    for method in method_order:
        pts = []
        rounds = sorted(r for (m, r) in groups if m == method)
        for rnd in rounds:
            members = groups[(method, rnd)]
            ys = [getattr(row, metric) for row in members]
            if not all(math.isfinite(y) for y in ys):
                continue
            x = sum(row.sampling_ratio for row in members) / len(members)
            pts.append((x, sum(ys) / len(ys)))
        curves[method] = pts
    if all(not pts for pts in curves.values()):
        raise ValueError("no finite data points to plot")
    return curves


def _ticks(lo: float, hi: float, n: int = 5) -> list:
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def emit_plot(csv_path, metric: str, out_path):
    """Render the aggregated curves to a standalone SVG file."""
    curves = aggregate_metric(csv_path, metric)
    xs = [x for pts in curves.values() for (x, _) in pts]
    ys = [y for pts in curves.values() for (_, y) in pts]
    xlo, xhi = min(xs), max(xs)
    ylo, yhi = min(ys), max(ys)
    if xhi == xlo:
        xlo, xhi = xlo - 0.5, xhi + 0.5
    if yhi == ylo:
        ylo, yhi = ylo - 0.5, yhi + 0.5

    def px(x):
        return _ML + (x - xlo) / (xhi - xlo) * (_W - _ML - _MR)

    def py(y):
        return _H - _MB - (y - ylo) / (yhi - ylo) * (_H - _MT - _MB)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" y2="{_H - _MB}" stroke="black"/>',
        f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" stroke="black"/>',
    ]
    for t in _ticks(xlo, xhi):
        parts.append(f'<line x1="{px(t):.2f}" y1="{_H - _MB}" x2="{px(t):.2f}" y2="{_H - _MB + 5}" stroke="black"/>')
        parts.append(f'<text x="{px(t):.2f}" y="{_H - _MB + 18}" text-anchor="middle">{t:.4g}</text>')
    for t in _ticks(ylo, yhi):
        parts.append(f'<line x1="{_ML - 5}" y1="{py(t):.2f}" x2="{_ML}" y2="{py(t):.2f}" stroke="black"/>')
        parts.append(f'<text x="{_ML - 8}" y="{py(t):.2f}" text-anchor="end" dominant-baseline="middle">{t:.4g}</text>')
    parts.append(
        f'<text x="{(_ML + _W - _MR) / 2:.0f}" y="{_H - 16}" text-anchor="middle">sampling ratio</text>'
    )
    parts.append(
        f'<text x="18" y="{(_MT + _H - _MB) / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {(_MT + _H - _MB) / 2:.0f})">{metric}</text>'
    )
    legend_x = _W - _MR + 14
    legend_y = _MT + 10
    for i, (method, pts) in enumerate(curves.items()):
        color = _PALETTE[i % len(_PALETTE)]
        if pts:
            coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
            parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = legend_y + 18 * i
        parts.append(f'<line x1="{legend_x}" y1="{ly}" x2="{legend_x + 22}" y2="{ly}" stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{legend_x + 28}" y="{ly + 4}">{method}</text>')
    parts.append("</svg>")
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text("\n".join(parts) + "\n")
