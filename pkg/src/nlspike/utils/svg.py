"""Minimal SVG line charts for sweep diagnostics."""

import math
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union
from xml.sax.saxutils import escape

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"]

Series = Dict[str, Sequence[Tuple[float, float]]]


def _ticks(lo: float, hi: float, count: int = 5) -> List[float]:
    if hi <= lo:
        return [lo]
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def line_chart(
    series: Series,
    title: str,
    x_label: str,
    y_label: str,
    width: int = 640,
    height: int = 400,
    log_y: bool = False,
) -> str:
    """Render named (x, y) series as one SVG document."""
    margin_l, margin_r, margin_t, margin_b = 70, 150, 40, 50
    plot_w = width - margin_l - margin_r
    plot_h = height - margin_t - margin_b

    def ty(v: float) -> float:
        return math.log10(v) if log_y else v

    points = [(x, y) for pts in series.values() for x, y in pts if not log_y or y > 0]
    if not points:
        points = [(0.0, 0.0), (1.0, 1.0)]
    xs = [p[0] for p in points]
    ys = [ty(p[1]) for p in points]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def sx(x: float) -> float:
        return margin_l + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y: float) -> float:
        return margin_t + plot_h - (ty(y) - y_lo) / (y_hi - y_lo) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{margin_l}" y1="{margin_t + plot_h}" x2="{margin_l + plot_w}" '
        f'y2="{margin_t + plot_h}" stroke="black"/>',
        f'<line x1="{margin_l}" y1="{margin_t}" x2="{margin_l}" y2="{margin_t + plot_h}" stroke="black"/>',
    ]
    for tx in _ticks(x_lo, x_hi):
        px = margin_l + (tx - x_lo) / (x_hi - x_lo) * plot_w
        out.append(
            f'<text x="{px:.1f}" y="{margin_t + plot_h + 16}" text-anchor="middle">{tx:g}</text>'
        )
    for tv in _ticks(y_lo, y_hi):
        py = margin_t + plot_h - (tv - y_lo) / (y_hi - y_lo) * plot_h
        label = f"{10 ** tv:.2e}" if log_y else f"{tv:.3g}"
        out.append(f'<text x="{margin_l - 6}" y="{py + 4:.1f}" text-anchor="end">{label}</text>')
    out.append(
        f'<text x="{margin_l + plot_w / 2:.1f}" y="{height - 10}" text-anchor="middle">{escape(x_label)}</text>'
    )
    out.append(
        f'<text x="16" y="{margin_t + plot_h / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {margin_t + plot_h / 2:.1f})">{escape(y_label)}</text>'
    )

    for i, (name, pts) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        kept = [(x, y) for x, y in pts if not log_y or y > 0]
        if kept:
            coords = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in kept)
            out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
            for x, y in kept:
                out.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3" fill="{color}"/>')
        ly = margin_t + 14 * i + 10
        lx = margin_l + plot_w + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 18}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 24}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_line_chart(path: Union[str, Path], series: Series, title: str, x_label: str, y_label: str, **kwargs) -> Path:
    path = Path(path)
    path.write_text(line_chart(series, title, x_label, y_label, **kwargs), encoding="utf-8")
    return path
