"""Tiny dependency-free SVG plots: polylines and point markers on linear
axes in a fixed 800x600 viewport.  Output is deterministic text, which
keeps the figures diffable and testable."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

WIDTH, HEIGHT = 800, 600
MARGIN_LEFT, MARGIN_RIGHT = 75, 170
MARGIN_TOP, MARGIN_BOTTOM = 45, 55
N_TICKS = 5

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#e377c2", "#7f7f7f", "#17becf", "#bcbd22")


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray
    style: str = "line"  # "line" or "points"

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.shape != self.y.shape or self.x.ndim != 1:
            raise ValueError("series x and y must be equal-length 1D arrays")
        if self.style not in ("line", "points"):
            raise ValueError(f"style must be 'line' or 'points', got {self.style!r}")


@dataclass
class PlotSpec:
    series: list
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    path: str | None = None

    def __post_init__(self):
        if not self.series:
            raise ValueError("a plot needs at least one series")


def _limits(values):
    lo, hi = float(np.min(values)), float(np.max(values))
    if hi == lo:
        pad = 0.5 if lo == 0.0 else 0.05 * abs(lo)
    else:
        pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _esc(text: str) -> str:
    return (str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
            .replace('"', "&quot;"))


def render(spec: PlotSpec) -> str:
    """Render the plot to an SVG string."""
    xlo, xhi = _limits(np.concatenate([s.x for s in spec.series]))
    ylo, yhi = _limits(np.concatenate([s.y for s in spec.series]))
    px0, px1 = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
    py0, py1 = HEIGHT - MARGIN_BOTTOM, MARGIN_TOP  # y grows upward

    def sx(v):
        return px0 + (v - xlo) / (xhi - xlo) * (px1 - px0)

    def sy(v):
        return py0 + (v - ylo) / (yhi - ylo) * (py1 - py0)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{(px0 + px1) / 2:.2f}" y="25" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{_esc(spec.title)}</text>',
    ]
    # axes
    out.append(f'<line x1="{px0}" y1="{py0}" x2="{px1}" y2="{py0}" stroke="black"/>')
    out.append(f'<line x1="{px0}" y1="{py0}" x2="{px0}" y2="{py1}" stroke="black"/>')
    for tick in np.linspace(xlo, xhi, N_TICKS):
        tx = sx(tick)
        out.append(f'<line x1="{tx:.2f}" y1="{py0}" x2="{tx:.2f}" y2="{py0 + 6}" stroke="black"/>')
        out.append(f'<text x="{tx:.2f}" y="{py0 + 22}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="12">{tick:.4g}</text>')
    for tick in np.linspace(ylo, yhi, N_TICKS):
        ty = sy(tick)
        out.append(f'<line x1="{px0 - 6}" y1="{ty:.2f}" x2="{px0}" y2="{ty:.2f}" stroke="black"/>')
        out.append(f'<text x="{px0 - 10}" y="{ty + 4:.2f}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="12">{tick:.4g}</text>')
    out.append(f'<text x="{(px0 + px1) / 2:.2f}" y="{HEIGHT - 12}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="13">{_esc(spec.xlabel)}</text>')
    out.append(f'<text x="20" y="{(py0 + py1) / 2:.2f}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="13" '
               f'transform="rotate(-90 20 {(py0 + py1) / 2:.2f})">{_esc(spec.ylabel)}</text>')
    # data
    for k, s in enumerate(spec.series):
        color = PALETTE[k % len(PALETTE)]
        if s.style == "line":
            pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(s.x, s.y))
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.6"/>')
        else:
            for a, b in zip(s.x, s.y):
                out.append(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="3" '
                           f'fill="none" stroke="{color}" stroke-width="1.2"/>')
    # legend
    lx, ly = px1 + 12, py1 + 10
    for k, s in enumerate(spec.series):
        color = PALETTE[k % len(PALETTE)]
        row = ly + 20 * k
        if s.style == "line":
            out.append(f'<line x1="{lx}" y1="{row - 4}" x2="{lx + 22}" y2="{row - 4}" '
                       f'stroke="{color}" stroke-width="1.6"/>')
        else:
            out.append(f'<circle cx="{lx + 11}" cy="{row - 4}" r="3" fill="none" '
                       f'stroke="{color}" stroke-width="1.2"/>')
        out.append(f'<text x="{lx + 28}" y="{row}" font-family="sans-serif" '
                   f'font-size="12">{_esc(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write(spec: PlotSpec, path=None) -> None:
    target = path if path is not None else spec.path
    if target is None:
        raise ValueError("no output path given")
    with open(target, "w") as f:
        f.write(render(spec))
