"""Standalone SVG learning curves, one panel per phase, one polyline per iteration.

The output is a pure function of the metrics' non-timing fields, so equal
runs give byte-identical files.
"""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

from ..metrics import PHASES, MetricsRecord
from .atomic import atomic_write_text

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]
METRIC_LABELS = {"fitness": "fitness (training accuracy)", "loss": "mean training loss"}

PANEL_W, PANEL_H = 420, 300
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 60, 20, 40, 45


def curve_groups(metrics: Sequence[MetricsRecord], metric: str) -> dict[str, dict[int, list[tuple[int, float]]]]:
    """phase -> iteration -> [(generation, mean value over that generation's evaluations)]."""
    acc: dict = defaultdict(lambda: defaultdict(lambda: defaultdict(list)))
    for r in metrics:
        if r.is_summary:
            continue
        value = r.fitness if metric == "fitness" else r.mean_train_loss
        acc[r.phase][r.iteration][r.generation].append(value)
    out: dict = {}
    for phase in PHASES:
        if phase not in acc:
            continue
        out[phase] = {it: [(g, sum(v) / len(v)) for g, v in sorted(gens.items())]
                      for it, gens in sorted(acc[phase].items())}
    return out


def _n(v: float) -> str:
    return f"{v:.2f}"


def render_svg(metrics: Sequence[MetricsRecord], metric: str = "fitness") -> str:
    if metric not in METRIC_LABELS:
        raise ValueError(f"metric must be one of {sorted(METRIC_LABELS)}, got {metric!r}")
    groups = curve_groups(metrics, metric)
    if not groups:
        raise ValueError("no path-evaluation rows to plot")
    width = PANEL_W * len(groups)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{PANEL_H}" '
             f'viewBox="0 0 {width} {PANEL_H}" font-family="sans-serif" font-size="11">',
             f'<rect width="{width}" height="{PANEL_H}" fill="white"/>']
    for p, (phase, curves) in enumerate(groups.items()):
        parts.append(_panel(p * PANEL_W, phase, curves, metric))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _panel(x0: float, phase: str, curves: dict[int, list[tuple[int, float]]], metric: str) -> str:
    xs = [g for pts in curves.values() for g, _ in pts]
    ys = [v for pts in curves.values() for _, v in pts]
    gx0, gx1 = min(xs), max(xs)
    if metric == "fitness":
        vy0, vy1 = 0.0, 1.0
    else:
        vy0, vy1 = 0.0, max(ys) if max(ys) > 0 else 1.0
    left, right = x0 + MARGIN_L, x0 + PANEL_W - MARGIN_R
    top, bottom = MARGIN_T, PANEL_H - MARGIN_B

    def sx(g):
        return left if gx1 == gx0 else left + (g - gx0) / (gx1 - gx0) * (right - left)

    def sy(v):
        return bottom - (v - vy0) / (vy1 - vy0) * (bottom - top)

    out = [f'<g class="panel" id="panel-{escape(phase)}">',
           f'<text x="{_n(x0 + PANEL_W / 2)}" y="18" text-anchor="middle" font-size="13">'
           f'{escape(phase)}: {escape(METRIC_LABELS[metric])}</text>',
           f'<line x1="{_n(left)}" y1="{_n(bottom)}" x2="{_n(right)}" y2="{_n(bottom)}" stroke="black"/>',
           f'<line x1="{_n(left)}" y1="{_n(top)}" x2="{_n(left)}" y2="{_n(bottom)}" stroke="black"/>']
    for frac in (0.0, 0.5, 1.0):
        v = vy0 + frac * (vy1 - vy0)
        out.append(f'<text x="{_n(left - 5)}" y="{_n(sy(v) + 4)}" text-anchor="end">{v:.3g}</text>')
    for g in sorted({gx0, gx1}):
        out.append(f'<text x="{_n(sx(g))}" y="{_n(bottom + 15)}" text-anchor="middle">{g}</text>')
    out.append(f'<text x="{_n((left + right) / 2)}" y="{_n(PANEL_H - 8)}" text-anchor="middle">generation</text>')
    for k, (it, pts) in enumerate(curves.items()):
        color = PALETTE[k % len(PALETTE)]
        if len(pts) == 1:
            g, v = pts[0]
            out.append(f'<circle cx="{_n(sx(g))}" cy="{_n(sy(v))}" r="3" fill="{color}"/>')
        else:
            coords = " ".join(f"{_n(sx(g))},{_n(sy(v))}" for g, v in pts)
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        ly = top + 12 * k
        out.append(f'<line x1="{_n(right - 80)}" y1="{_n(ly)}" x2="{_n(right - 65)}" y2="{_n(ly)}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{_n(right - 60)}" y="{_n(ly + 4)}">iteration {it}</text>')
    out.append("</g>")
    return "\n".join(out)


def render_curves(metrics: Sequence[MetricsRecord], output_path, metric: str = "fitness") -> Path:
    if not metrics:
        raise ValueError("render_curves needs at least one metrics row")
    atomic_write_text(output_path, render_svg(metrics, metric))
    return Path(output_path)
