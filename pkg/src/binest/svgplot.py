"""Minimal static SVG line charts with optional shaded bands."""
from __future__ import annotations

from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"]


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray
    color: str | None = None
    dashed: bool = False


@dataclass
class Band:
    x: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    color: str
    opacity: float = 0.2


@dataclass
class Chart:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    logx: bool = False
    logy: bool = False
    width: int = 720
    height: int = 440
    series: list = field(default_factory=list)
    bands: list = field(default_factory=list)

    def add(self, label, x, y, color=None, dashed=False):
        color = color or PALETTE[len(self.series) % len(PALETTE)]
        self.series.append(Series(label, np.asarray(x, float), np.asarray(y, float), color, dashed))
        return color

    def band(self, x, lo, hi, color, opacity=0.2):
        self.bands.append(Band(np.asarray(x, float), np.asarray(lo, float), np.asarray(hi, float),
                               color, opacity))

    def render(self) -> str:
        return _render(self)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.render())


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float, log: bool) -> str:
    if log:
        return f"1e{int(round(v))}"
    return f"{v:.3g}"


def _render(ch: Chart) -> str:
    left, right, top, bottom = 70, 160, 36, 50
    W, H = ch.width, ch.height
    pw, ph = W - left - right, H - top - bottom

    def tx(x):
        return np.log10(x) if ch.logx else x

    def ty(y):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log10(y) if ch.logy else y

    xs = [tx(s.x) for s in ch.series] + [tx(b.x) for b in ch.bands]
    ys = [ty(s.y) for s in ch.series] + [ty(b.lo) for b in ch.bands] + [ty(b.hi) for b in ch.bands]
    xs = np.concatenate([v[np.isfinite(v)] for v in xs]) if xs else np.array([0.0, 1.0])
    ys = np.concatenate([v[np.isfinite(v)] for v in ys]) if ys else np.array([0.0, 1.0])
    if xs.size == 0:
        xs = np.array([0.0, 1.0])
    if ys.size == 0:
        ys = np.array([0.0, 1.0])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(v):
        return left + (v - x0) / (x1 - x0) * pw

    def py(v):
        return top + (1.0 - (v - y0) / (y1 - y0)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
           f'<rect width="{W}" height="{H}" fill="white"/>']
    if ch.title:
        out.append(f'<text x="{W / 2:.1f}" y="20" text-anchor="middle" font-size="14">'
                   f'{escape(ch.title)}</text>')
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>')

    for axis, lo, hi, log in (("x", x0, x1, ch.logx), ("y", y0, y1, ch.logy)):
        if log:
            ticks = np.arange(np.ceil(lo), np.floor(hi) + 1)
        else:
            ticks = np.linspace(lo, hi, 6)
        for t in ticks:
            lab = escape(_tick_label(t, log))
            if axis == "x":
                p = px(t)
                out.append(f'<line x1="{_fmt(p)}" y1="{top + ph}" x2="{_fmt(p)}" y2="{top + ph + 5}" stroke="#333"/>')
                out.append(f'<text x="{_fmt(p)}" y="{top + ph + 18}" text-anchor="middle">{lab}</text>')
            else:
                p = py(t)
                out.append(f'<line x1="{left - 5}" y1="{_fmt(p)}" x2="{left}" y2="{_fmt(p)}" stroke="#333"/>')
                out.append(f'<text x="{left - 8}" y="{_fmt(p + 4)}" text-anchor="end">{lab}</text>')
    if ch.xlabel:
        out.append(f'<text x="{left + pw / 2:.1f}" y="{H - 10}" text-anchor="middle">{escape(ch.xlabel)}</text>')
    if ch.ylabel:
        out.append(f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
                   f'transform="rotate(-90 16 {top + ph / 2:.1f})">{escape(ch.ylabel)}</text>')

    for b in ch.bands:
        X, LO, HI = tx(b.x), ty(b.lo), ty(b.hi)
        ok = np.isfinite(X) & np.isfinite(LO) & np.isfinite(HI)
        if not np.any(ok):
            continue
        pts = [f"{_fmt(px(a))},{_fmt(py(c))}" for a, c in zip(X[ok], HI[ok])]
        pts += [f"{_fmt(px(a))},{_fmt(py(c))}" for a, c in zip(X[ok][::-1], LO[ok][::-1])]
        out.append(f'<polygon points="{" ".join(pts)}" fill="{b.color}" fill-opacity="{b.opacity}" stroke="none"/>')

    for i, s in enumerate(ch.series):
        X, Y = tx(s.x), ty(s.y)
        ok = np.isfinite(X) & np.isfinite(Y)
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(c))}" for a, c in zip(X[ok], Y[ok]))
        dash = ' stroke-dasharray="5,4"' if s.dashed else ""
        out.append(f'<polyline points="{pts}" fill="none" stroke="{s.color}" stroke-width="1.5"{dash}/>')
        ly = top + 14 + 16 * i
        out.append(f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 30}" y2="{ly}" '
                   f'stroke="{s.color}" stroke-width="2"{dash}/>')
        out.append(f'<text x="{left + pw + 35}" y="{ly + 4}">{escape(s.label)}</text>')
    out.append("</svg>\n")
    return "\n".join(out)
