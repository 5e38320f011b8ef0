"""Deterministic SVG rendering of advantage-ratio heatmaps.

Hand-rolled on purpose: byte-identical output for identical input is a
contract, so no plotting library with embedded ids or timestamps is
used.  The canvas is a fixed 800x600 viewport; color encodes
log10(ratio) and the ratio = 1 boundary is drawn explicitly along cell
edges where the sign of log10(ratio) flips.
"""

from __future__ import annotations

import math

import numpy as np

WIDTH = 800
HEIGHT = 600
MARGIN_LEFT = 80
MARGIN_RIGHT = 30
MARGIN_TOP = 50
MARGIN_BOTTOM = 60

LOG_FLOOR = -3.0
LOG_CEIL = 4.0

# hindered side: dark gray to near-white; enhanced side: warm ramp
_NEG_LO = (77, 77, 77)
_NEG_HI = (236, 236, 236)
_POS_LO = (253, 219, 199)
_POS_HI = (103, 0, 31)


def _lerp(a, b, u: float) -> tuple[int, int, int]:
    return tuple(round(a[i] + (b[i] - a[i]) * u) for i in range(3))


def _color(log_ratio: float) -> str:
    if math.isinf(log_ratio):
        log_ratio = LOG_CEIL if log_ratio > 0 else LOG_FLOOR
    v = min(max(log_ratio, LOG_FLOOR), LOG_CEIL)
    if v < 0.0:
        r, g, b = _lerp(_NEG_LO, _NEG_HI, 1.0 - v / LOG_FLOOR)
    else:
        r, g, b = _lerp(_POS_LO, _POS_HI, v / LOG_CEIL)
    return f"#{r:02x}{g:02x}{b:02x}"


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    if v == 0.0:
        return "0"
    exp = math.log10(abs(v))
    if abs(exp - round(exp)) < 1e-9:
        return f"1e{round(exp)}"
    return f"{v:.3g}"


def render_heatmap_svg(table, title: str = "") -> str:
    """SVG text for a HeatmapTable produced by the scan."""
    xs = np.asarray(table.x_values, dtype=float)
    ys = np.asarray(table.y_values, dtype=float)
    grid = table.ratio_grid()
    ny, nx = grid.shape

    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    cell_w = plot_w / nx
    cell_h = plot_h / ny

    def cx(i: int) -> float:
        return MARGIN_LEFT + i * cell_w

    def cy(j: int) -> float:
        # y grows upward on the plot
        return MARGIN_TOP + plot_h - (j + 1) * cell_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
    ]
    if title:
        parts.append(
            f'<text x="{WIDTH / 2:.0f}" y="28" font-family="monospace" '
            f'font-size="16" text-anchor="middle">{title}</text>')

    with_log = np.where(grid > 0.0, grid, np.nan)
    logs = np.full_like(grid, LOG_FLOOR)
    mask = np.isfinite(with_log)
    logs[mask] = np.log10(with_log[mask])

    for j in range(ny):
        for i in range(nx):
            parts.append(
                f'<rect x="{_fmt(cx(i))}" y="{_fmt(cy(j))}" '
                f'width="{_fmt(cell_w + 0.5)}" height="{_fmt(cell_h + 0.5)}" '
                f'fill="{_color(float(logs[j, i]))}"/>')

    # ratio = 1 boundary: draw shared edges of adjacent cells whose
    # log-ratio signs differ
    segs = []
    for j in range(ny):
        for i in range(nx - 1):
            if (logs[j, i] >= 0.0) != (logs[j, i + 1] >= 0.0):
                x = cx(i + 1)
                segs.append((x, cy(j), x, cy(j) + cell_h))
    for j in range(ny - 1):
        for i in range(nx):
            if (logs[j, i] >= 0.0) != (logs[j + 1, i] >= 0.0):
                y = cy(j)
                segs.append((cx(i), y, cx(i) + cell_w, y))
    for x1, y1, x2, y2 in segs:
        parts.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" '
            f'y2="{_fmt(y2)}" stroke="#000000" stroke-width="1.2"/>')

    parts.append(
        f'<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" '
        f'height="{plot_h}" fill="none" stroke="#000000"/>')

    for i in _tick_indices(nx):
        x = cx(i) + cell_w / 2
        parts.append(
            f'<line x1="{_fmt(x)}" y1="{MARGIN_TOP + plot_h}" '
            f'x2="{_fmt(x)}" y2="{MARGIN_TOP + plot_h + 5}" '
            f'stroke="#000000"/>')
        parts.append(
            f'<text x="{_fmt(x)}" y="{MARGIN_TOP + plot_h + 20}" '
            f'font-family="monospace" font-size="11" text-anchor="middle">'
            f'{_tick_label(float(xs[i]))}</text>')
    for j in _tick_indices(ny):
        y = cy(j) + cell_h / 2
        parts.append(
            f'<line x1="{MARGIN_LEFT - 5}" y1="{_fmt(y)}" '
            f'x2="{MARGIN_LEFT}" y2="{_fmt(y)}" stroke="#000000"/>')
        parts.append(
            f'<text x="{MARGIN_LEFT - 10}" y="{_fmt(y + 4)}" '
            f'font-family="monospace" font-size="11" text-anchor="end">'
            f'{_tick_label(float(ys[j]))}</text>')

    parts.append(
        f'<text x="{MARGIN_LEFT + plot_w / 2:.0f}" y="{HEIGHT - 15}" '
        f'font-family="monospace" font-size="13" text-anchor="middle">'
        f'{table.x_name}</text>')
    parts.append(
        f'<text x="20" y="{MARGIN_TOP + plot_h / 2:.0f}" '
        f'font-family="monospace" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 20 {MARGIN_TOP + plot_h / 2:.0f})">'
        f'{table.y_name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _tick_indices(n: int, want: int = 6) -> list[int]:
    if n <= want:
        return list(range(n))
    step = max(1, (n - 1) // (want - 1))
    idx = list(range(0, n, step))
    if idx[-1] != n - 1:
        idx.append(n - 1)
    return idx
