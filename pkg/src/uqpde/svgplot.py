"""Minimal SVG writers: line plots with bands, coefficient CI plots, triangle heatmaps."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

W, H = 640, 400
MARGIN = dict(left=64, right=20, top=36, bottom=48)
COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"]
# viridis anchors
_CMAP = np.array([[68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37]],
                 dtype=np.float64)


def colormap(t):
    t = np.clip(np.asarray(t, dtype=np.float64), 0.0, 1.0) * (len(_CMAP) - 1)
    i = np.minimum(t.astype(int), len(_CMAP) - 2)
    f = (t - i)[..., None]
    rgb = (1 - f) * _CMAP[i] + f * _CMAP[i + 1]
    return [f"#{int(r):02x}{int(g):02x}{int(b):02x}" for r, g, b in np.round(rgb).reshape(-1, 3)]


def _nice_ticks(lo, hi, n=5):
    if not np.isfinite(lo) or not np.isfinite(hi) or hi <= lo:
        return [lo]
    step = 10 ** np.floor(np.log10((hi - lo) / n))
    for m in (1, 2, 5, 10):
        if (hi - lo) / (m * step) <= n:
            step *= m
            break
    start = np.ceil(lo / step) * step
    return list(np.arange(start, hi + 0.5 * step, step))


class _Axes:
    def __init__(self, xlim, ylim, title="", xlabel="", ylabel=""):
        lo, hi = ylim
        if hi <= lo:
            lo, hi = lo - 0.5, hi + 0.5
        pad = 0.05 * (hi - lo)
        self.xlim = xlim if xlim[1] > xlim[0] else (xlim[0] - 0.5, xlim[1] + 0.5)
        self.ylim = (lo - pad, hi + pad)
        self.parts = []
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel

    def px(self, x):
        a, b = self.xlim
        return MARGIN["left"] + (np.asarray(x) - a) / (b - a) * (W - MARGIN["left"] - MARGIN["right"])

    def py(self, y):
        a, b = self.ylim
        return H - MARGIN["bottom"] - (np.asarray(y) - a) / (b - a) * (H - MARGIN["top"] - MARGIN["bottom"])

    def polyline(self, x, y, color, width=1.5, dash=None):
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(self.px(x), self.py(y)))
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="{width}"{d} points="{pts}"/>')

    def band(self, x, lo, hi, color, opacity=0.25):
        xs = np.concatenate([x, x[::-1]])
        ys = np.concatenate([hi, lo[::-1]])
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(self.px(xs), self.py(ys)))
        self.parts.append(f'<polygon fill="{color}" fill-opacity="{opacity}" stroke="none" points="{pts}"/>')

    def marker(self, x, y, color, r=3, filled=True):
        fill = color if filled else "none"
        for a, b in zip(self.px(x), self.py(y)):
            self.parts.append(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="{r}" fill="{fill}" stroke="{color}"/>')

    def vline(self, x, y0, y1, color, width=1.5):
        for a, b0, b1 in zip(self.px(x), self.py(y0), self.py(y1)):
            self.parts.append(f'<line x1="{a:.2f}" y1="{b0:.2f}" x2="{a:.2f}" y2="{b1:.2f}" '
                              f'stroke="{color}" stroke-width="{width}"/>')

    def legend(self, entries):
        y = MARGIN["top"] + 8
        for label, color in entries:
            x = W - MARGIN["right"] - 150
            self.parts.append(f'<rect x="{x}" y="{y - 8}" width="14" height="8" fill="{color}"/>')
            self.parts.append(f'<text x="{x + 20}" y="{y}" font-size="11">{escape(label)}</text>')
            y += 16

    def render(self):
        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
               f'viewBox="0 0 {W} {H}" font-family="sans-serif">',
               f'<rect width="{W}" height="{H}" fill="white"/>']
        x0, x1 = MARGIN["left"], W - MARGIN["right"]
        y0, y1 = MARGIN["top"], H - MARGIN["bottom"]
        out.append(f'<rect x="{x0}" y="{y0}" width="{x1 - x0}" height="{y1 - y0}" fill="none" stroke="#444"/>')
        for t in _nice_ticks(*self.xlim):
            p = float(self.px(t))
            out.append(f'<line x1="{p:.2f}" y1="{y1}" x2="{p:.2f}" y2="{y1 + 4}" stroke="#444"/>')
            out.append(f'<text x="{p:.2f}" y="{y1 + 16}" font-size="11" text-anchor="middle">{t:g}</text>')
        for t in _nice_ticks(*self.ylim):
            p = float(self.py(t))
            out.append(f'<line x1="{x0 - 4}" y1="{p:.2f}" x2="{x0}" y2="{p:.2f}" stroke="#444"/>')
            out.append(f'<text x="{x0 - 6}" y="{p + 4:.2f}" font-size="11" text-anchor="end">{t:.3g}</text>')
        out.append(f'<text x="{W / 2}" y="22" font-size="14" text-anchor="middle">{escape(self.title)}</text>')
        out.append(f'<text x="{W / 2}" y="{H - 10}" font-size="12" text-anchor="middle">{escape(self.xlabel)}</text>')
        out.append(f'<text x="16" y="{H / 2}" font-size="12" text-anchor="middle" '
                   f'transform="rotate(-90 16 {H / 2})">{escape(self.ylabel)}</text>')
        out.append(f'<clipPath id="plot"><rect x="{x0}" y="{y0}" width="{x1 - x0}" height="{y1 - y0}"/></clipPath>')
        out.append('<g clip-path="url(#plot)">')
        out.extend(self.parts)
        out.append("</g></svg>")
        return "\n".join(out) + "\n"


def _finite_range(*arrays):
    vals = np.concatenate([np.ravel(a) for a in arrays if a is not None])
    vals = vals[np.isfinite(vals)]
    return (float(vals.min()), float(vals.max())) if vals.size else (0.0, 1.0)


def line_plot(path, x, series, band=None, title="", xlabel="", ylabel=""):
    """``series``: list of (y, label); ``band``: (lower, upper, label) drawn underneath."""
    x = np.asarray(x, dtype=np.float64)
    ys = [np.asarray(y, dtype=np.float64) for y, _ in series]
    ax = _Axes((float(x.min()), float(x.max())),
               _finite_range(*ys, *(band[:2] if band else ())), title, xlabel, ylabel)
    legend = []
    if band is not None:
        ax.band(x, np.asarray(band[0]), np.asarray(band[1]), COLORS[0])
        legend.append((band[2], COLORS[0] + "60"))
    for k, (y, (_, label)) in enumerate(zip(ys, series)):
        color = COLORS[k % len(COLORS)]
        ax.polyline(x, y, color, dash="5,3" if k == 0 and len(series) > 1 else None)
        legend.append((label, color))
    ax.legend(legend)
    _write(path, ax.render())


def coefficient_plot(path, lower, upper, mean, truth=None, title="", percent=95):
    n = len(mean)
    idx = np.arange(1, n + 1)
    ax = _Axes((0.5, n + 0.5), _finite_range(lower, upper, mean, truth), title, "coefficient index", "value")
    ax.vline(idx, lower, upper, COLORS[0])
    ax.marker(idx, mean, COLORS[0])
    legend = [(f"{percent:g}% CI", COLORS[0]), ("mean", COLORS[0])]
    if truth is not None:
        ax.marker(idx, truth, COLORS[1], r=4, filled=False)
        legend.append(("exact", COLORS[1]))
    ax.legend(legend)
    _write(path, ax.render())


def tri_heatmap(path, vertices, triangles, values, title="", vmin=None, vmax=None):
    """Triangles filled with the mean of their nodal values."""
    vertices = np.asarray(vertices, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    tv = values[triangles].mean(axis=1)
    lo = float(np.min(values)) if vmin is None else vmin
    hi = float(np.max(values)) if vmax is None else vmax
    colors = colormap((tv - lo) / (hi - lo) if hi > lo else np.zeros_like(tv))
    size = H - MARGIN["top"] - MARGIN["bottom"]
    (xa, ya), (xb, yb) = vertices.min(axis=0), vertices.max(axis=0)
    s = size / max(xb - xa, yb - ya)
    ox, oy = MARGIN["left"], MARGIN["top"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}" font-family="sans-serif">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<text x="{W / 2}" y="22" font-size="14" text-anchor="middle">{escape(title)}</text>']
    for tri, c in zip(triangles, colors):
        p = vertices[tri]
        pts = " ".join(f"{ox + (a - xa) * s:.2f},{oy + (yb - b) * s:.2f}" for a, b in p)
        out.append(f'<polygon points="{pts}" fill="{c}" stroke="{c}" stroke-width="0.3"/>')
    # colorbar
    bx = ox + size + 30
    for k, c in enumerate(colormap(np.linspace(1, 0, 50))):
        out.append(f'<rect x="{bx}" y="{oy + k * size / 50:.2f}" width="16" height="{size / 50 + 0.5:.2f}" fill="{c}"/>')
    out.append(f'<text x="{bx + 22}" y="{oy + 10}" font-size="11">{hi:.3g}</text>')
    out.append(f'<text x="{bx + 22}" y="{oy + size}" font-size="11">{lo:.3g}</text>')
    out.append("</svg>")
    _write(path, "\n".join(out) + "\n")


def _write(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
