"""Dependency-free SVG line charts.

Output is a pure function of the input: fixed layout, fixed palette, coordinates printed
with a fixed number of decimals and no timestamps, so identical tables give identical bytes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

KINDS = ("fdr_vs_mu", "error_vs_mu", "hc_curve")
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2",
           "#7f7f7f", "#bcbd22", "#17becf")

PANEL_W, PANEL_H = 320, 240
MARGIN = dict(left=56, right=12, top=28, bottom=40)
LEGEND_H = 18


@dataclass
class Series:
    label: str
    x: list
    y: list


@dataclass
class Panel:
    title: str
    series: list
    xlabel: str = "mu"
    ylabel: str = ""


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def nice_ticks(lo: float, hi: float, n: int = 5) -> list:
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("non-finite axis range")
    if hi <= lo:
        pad = abs(lo) * 0.1 or 1.0
        lo, hi = lo - pad, hi + pad
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.floor(lo / step) * step
    ticks = []
    k = 0
    while True:
        t = start + k * step
        ticks.append(round(t, 12))
        if t >= hi - 1e-12 * step:
            break
        k += 1
    return ticks


def _tick_label(t: float) -> str:
    s = f"{t:.6g}"
    return "0" if s == "-0" else s


def _panel_svg(panel: Panel, ox: float, oy: float, colors: dict) -> list:
    out = []
    x0, y0 = ox + MARGIN["left"], oy + MARGIN["top"]
    w = PANEL_W - MARGIN["left"] - MARGIN["right"]
    h = PANEL_H - MARGIN["top"] - MARGIN["bottom"]
    xs = [v for s in panel.series for v in s.x]
    ys = [v for s in panel.series for v in s.y if math.isfinite(v)]
    xt = nice_ticks(min(xs), max(xs)) if xs else [0.0, 1.0]
    yt = nice_ticks(min(ys + [0.0]), max(ys)) if ys else [0.0, 1.0]

    def px(v):
        return x0 + (v - xt[0]) / (xt[-1] - xt[0]) * w

    def py(v):
        return y0 + h - (v - yt[0]) / (yt[-1] - yt[0]) * h

    out.append(f'<g class="panel">')
    out.append(f'<text x="{_fmt(x0 + w / 2)}" y="{_fmt(oy + 18)}" text-anchor="middle" '
               f'font-size="12">{escape(panel.title)}</text>')
    out.append(f'<rect x="{_fmt(x0)}" y="{_fmt(y0)}" width="{_fmt(w)}" height="{_fmt(h)}" '
               f'fill="none" stroke="#000" stroke-width="1"/>')
    for t in xt:
        out.append(f'<line x1="{_fmt(px(t))}" y1="{_fmt(y0 + h)}" x2="{_fmt(px(t))}" '
                   f'y2="{_fmt(y0 + h + 4)}" stroke="#000"/>')
        out.append(f'<text x="{_fmt(px(t))}" y="{_fmt(y0 + h + 15)}" text-anchor="middle" '
                   f'font-size="9">{_tick_label(t)}</text>')
    for t in yt:
        out.append(f'<line x1="{_fmt(x0 - 4)}" y1="{_fmt(py(t))}" x2="{_fmt(x0)}" '
                   f'y2="{_fmt(py(t))}" stroke="#000"/>')
        out.append(f'<text x="{_fmt(x0 - 6)}" y="{_fmt(py(t) + 3)}" text-anchor="end" '
                   f'font-size="9">{_tick_label(t)}</text>')
    out.append(f'<text x="{_fmt(x0 + w / 2)}" y="{_fmt(y0 + h + 30)}" text-anchor="middle" '
               f'font-size="10">{escape(panel.xlabel)}</text>')
    out.append(f'<text x="{_fmt(ox + 12)}" y="{_fmt(y0 + h / 2)}" text-anchor="middle" '
               f'font-size="10" transform="rotate(-90 {_fmt(ox + 12)} {_fmt(y0 + h / 2)})">'
               f'{escape(panel.ylabel)}</text>')
    for s in panel.series:
        color = colors[s.label]
        pts = [(px(a), py(b)) for a, b in zip(s.x, s.y) if math.isfinite(b)]
        if len(pts) >= 2:
            coords = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in pts)
            out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                       f'stroke-width="1.5"><title>{escape(s.label)}</title></polyline>')
        for a, b in pts:
            out.append(f'<circle cx="{_fmt(a)}" cy="{_fmt(b)}" r="2.5" fill="{color}"/>')
    out.append("</g>")
    return out


def render_svg(panels: list, ncols: int = 3) -> str:
    if not panels:
        raise ValueError("nothing to plot")
    labels = list(dict.fromkeys(s.label for p in panels for s in p.series))
    colors = {lab: PALETTE[i % len(PALETTE)] for i, lab in enumerate(labels)}
    ncols = min(ncols, len(panels))
    nrows = math.ceil(len(panels) / ncols)
    width = ncols * PANEL_W
    height = nrows * PANEL_H + LEGEND_H * len(labels) + 10
    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="#fff"/>']
    for k, panel in enumerate(panels):
        out += _panel_svg(panel, (k % ncols) * PANEL_W, (k // ncols) * PANEL_H, colors)
    ly = nrows * PANEL_H + 5
    out.append('<g class="legend">')
    for i, lab in enumerate(labels):
        y = ly + i * LEGEND_H
        out.append(f'<line x1="10" y1="{y + 9}" x2="34" y2="{y + 9}" stroke="{colors[lab]}" '
                   f'stroke-width="2"/>')
        out.append(f'<text x="40" y="{y + 13}" font-size="11">{escape(lab)}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def panels_from_table(table, kind: str, metric: str | None = None) -> list:
    """One panel per scenario, one series per method, x = mu."""
    if kind == "fdr_vs_mu":
        metric = metric or "fdr"
    elif kind == "error_vs_mu":
        if metric is None:
            present = {r.metric for r in table.rows}
            metric = "error" if "error" in present else "mse"
    else:
        raise ValueError(f"{kind} is not a table plot")
    panels = []
    for sc in table.scenarios():
        series = []
        for m in table.methods():
            rows = sorted(table.select(sc, m, metric), key=lambda r: r.mu)
            if rows:
                series.append(Series(m, [r.mu for r in rows], [r.mean for r in rows]))
        if series:
            panels.append(Panel(sc, series, "mu", metric))
    if not panels:
        raise ValueError(f"table has no rows for metric {metric!r}")
    return panels


def read_hc_curve(path) -> Panel:
    """Two-column CSV ``j,hc`` as written by ``ngcs select --hc-out``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["j", "hc"]:
        raise ValueError(f"{path}: line 1: expected header j,hc")
    xs, ys = [], []
    for lineno, rec in enumerate(rows[1:], start=2):
        if not rec:
            continue
        try:
            xs.append(float(rec[0]))
            ys.append(float(rec[1]))
        except (ValueError, IndexError):
            raise ValueError(f"{path}: line {lineno}: expected two numbers") from None
    if not xs:
        raise ValueError(f"{path}: no data")
    return Panel("HC curve", [Series("HC", xs, ys)], "j", "HC(j)")


def write_hc_curve(path, hc) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "hc"])
        for j, v in enumerate(np.asarray(hc, dtype=float), start=1):
            w.writerow([j, f"{v:.17g}"])


def emit_plot(kind: str, source, out_path, metric: str | None = None) -> str:
    """Render ``source`` (a ResultTable, or a j,hc CSV path for ``hc_curve``) to ``out_path``."""
    if kind not in KINDS:
        raise ValueError(f"unknown plot kind {kind!r}")
    if kind == "hc_curve":
        panels = [read_hc_curve(source)]
    else:
        if isinstance(source, (str, Path)):
            from .experiments import ResultTable
            source = ResultTable.read_csv(source)
        panels = panels_from_table(source, kind, metric)
    svg = render_svg(panels)
    Path(out_path).write_text(svg)
    return svg
