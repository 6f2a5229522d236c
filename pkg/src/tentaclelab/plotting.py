"""Minimal deterministic SVG plotting.

Line plots and centerline overlays are written as plain SVG text with
fixed float formatting, so identical inputs produce byte-identical
files.
"""

from __future__ import annotations

import numpy as np

__all__ = ["line_plot_svg", "overlay_svg"]

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#17becf")

_W, _H = 560, 360
_ML, _MR, _MT, _MB = 62, 16, 34, 46


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    if hi == lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** np.floor(np.log10(raw))
    for m in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= m * mag:
            step = m * mag
            break
    t0 = np.ceil(lo / step) * step
    return np.arange(t0, hi + step * 1e-9, step)


def line_plot_svg(series: dict, path, title: str = "", xlabel: str = "",
                  ylabel: str = "") -> None:
    """Write a labeled multi-series line plot.

    `series` maps legend label -> (x array, y array).
    """
    xs = np.concatenate([np.asarray(x, dtype=float) for x, _ in series.values()])
    ys = np.concatenate([np.asarray(y, dtype=float) for _, y in series.values()])
    xlo, xhi = float(xs.min()), float(xs.max())
    ylo, yhi = float(ys.min()), float(ys.max())
    if xhi == xlo:
        xhi = xlo + 1.0
    if yhi == ylo:
        yhi = ylo + 1.0
    pad = 0.05 * (yhi - ylo)
    ylo -= pad
    yhi += pad

    def px(x):
        return _ML + (x - xlo) / (xhi - xlo) * (_W - _ML - _MR)

    def py(y):
        return _H - _MB - (y - ylo) / (yhi - ylo) * (_H - _MT - _MB)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" '
           f'height="{_H}" viewBox="0 0 {_W} {_H}">',
           f'<rect width="{_W}" height="{_H}" fill="white"/>']
    for tx in _ticks(xlo, xhi):
        out.append(f'<line x1="{_fmt(px(tx))}" y1="{_H - _MB}" '
                   f'x2="{_fmt(px(tx))}" y2="{_H - _MB + 5}" stroke="#444"/>')
        out.append(f'<text x="{_fmt(px(tx))}" y="{_H - _MB + 18}" '
                   f'font-size="11" text-anchor="middle">{_fmt(tx)}</text>')
    for ty in _ticks(ylo, yhi):
        out.append(f'<line x1="{_ML - 5}" y1="{_fmt(py(ty))}" '
                   f'x2="{_ML}" y2="{_fmt(py(ty))}" stroke="#444"/>')
        out.append(f'<text x="{_ML - 8}" y="{_fmt(py(ty) + 4)}" '
                   f'font-size="11" text-anchor="end">{_fmt(ty)}</text>')
    out.append(f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" '
               f'height="{_H - _MT - _MB}" fill="none" stroke="#444"/>')
    for k, (label, (x, y)) in enumerate(series.items()):
        color = _COLORS[k % len(_COLORS)]
        pts = " ".join(f"{_fmt(px(float(a)))},{_fmt(py(float(b)))}"
                       for a, b in zip(x, y))
        out.append(f'<polyline points="{pts}" fill="none" '
                   f'stroke="{color}" stroke-width="1.5"/>')
        ly = _MT + 14 + 14 * k
        out.append(f'<line x1="{_W - _MR - 120}" y1="{ly - 4}" '
                   f'x2="{_W - _MR - 100}" y2="{ly - 4}" stroke="{color}" '
                   f'stroke-width="1.5"/>')
        out.append(f'<text x="{_W - _MR - 95}" y="{ly}" '
                   f'font-size="11">{label}</text>')
    if title:
        out.append(f'<text x="{_W // 2}" y="18" font-size="13" '
                   f'text-anchor="middle">{title}</text>')
    if xlabel:
        out.append(f'<text x="{_W // 2}" y="{_H - 8}" font-size="12" '
                   f'text-anchor="middle">{xlabel}</text>')
    if ylabel:
        out.append(f'<text x="14" y="{_H // 2}" font-size="12" '
                   f'text-anchor="middle" transform="rotate(-90 14 '
                   f'{_H // 2})">{ylabel}</text>')
    out.append("</svg>")
    with open(path, "w") as f:
        f.write("\n".join(out) + "\n")


def overlay_svg(curve_pairs, path, title: str = "") -> None:
    """Overlay of (truth, prediction) centerline pairs, truth solid.

    `curve_pairs` is a list of ((N,2) truth mm, (N,2) prediction mm).
    """
    allpts = np.concatenate([np.concatenate([t, p]) for t, p in curve_pairs])
    xlo, xhi = float(allpts[:, 0].min()) - 10, float(allpts[:, 0].max()) + 10
    ylo, yhi = float(allpts[:, 1].min()) - 10, float(allpts[:, 1].max()) + 10
    span = max(xhi - xlo, yhi - ylo)
    size = 480
    scale = (size - 40) / span

    def px(x):
        return 20 + (x - xlo) * scale

    def py(y):
        return size - 20 - (y - ylo) * scale

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" '
           f'height="{size}" viewBox="0 0 {size} {size}">',
           f'<rect width="{size}" height="{size}" fill="white"/>']
    for k, (t, p) in enumerate(curve_pairs):
        color = _COLORS[k % len(_COLORS)]
        for pts, dash in ((t, ""), (p, ' stroke-dasharray="5,4"')):
            path_pts = " ".join(f"{_fmt(px(float(a)))},{_fmt(py(float(b)))}"
                                for a, b in pts)
            out.append(f'<polyline points="{path_pts}" fill="none" '
                       f'stroke="{color}" stroke-width="1.5"{dash}/>')
    if title:
        out.append(f'<text x="{size // 2}" y="16" font-size="13" '
                   f'text-anchor="middle">{title}</text>')
    out.append(f'<text x="24" y="{size - 6}" font-size="11">solid: truth, '
               f'dashed: reconstruction (mm)</text>')
    out.append("</svg>")
    with open(path, "w") as f:
        f.write("\n".join(out) + "\n")
