"""Deterministic SVG scatter plots of category-space projections.

Output is plain text with fixed number formatting and no timestamps, so the
same input always produces byte-identical files.
"""

import numpy as np

from .exceptions import DataError

__all__ = ["emit_svg_scatter", "PALETTE"]

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)

_SIZE = 640.0
_MARGIN = 0.05


def _fmt(v):
    return f"{v:.2f}"


def emit_svg_scatter(coords, labels, axes, path, class_names=None):
    """Write a 2-d scatter of two projection components with axis rays.

    coords is (M, K); ``axes`` picks the two components to draw. Markers are
    colored by class id with a fixed palette; the two displayed category axes
    are drawn as labeled rays from the origin. The viewport covers the data
    extent (origin included so the rays are visible) plus a 5% margin.
    """
    coords = np.asarray(coords, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if coords.ndim != 2 or coords.shape[0] == 0:
        raise DataError("need a non-empty (M, K) coordinate matrix")
    if coords.shape[1] < 2:
        raise DataError("need at least two components to draw a scatter")
    ax, ay = axes
    if not (0 <= ax < coords.shape[1] and 0 <= ay < coords.shape[1]) or ax == ay:
        raise DataError(f"invalid axis pair {axes!r} for {coords.shape[1]} components")
    if labels.shape != (coords.shape[0],):
        raise DataError("need one label per coordinate row")

    xs = coords[:, ax]
    ys = coords[:, ay]
    x_lo, x_hi = min(xs.min(), 0.0), max(xs.max(), 0.0)
    y_lo, y_hi = min(ys.min(), 0.0), max(ys.max(), 0.0)
    if x_hi - x_lo <= 0.0:
        x_lo, x_hi = x_lo - 1.0, x_hi + 1.0
    if y_hi - y_lo <= 0.0:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    x_pad = _MARGIN * (x_hi - x_lo)
    y_pad = _MARGIN * (y_hi - y_lo)
    x_lo, x_hi = x_lo - x_pad, x_hi + x_pad
    y_lo, y_hi = y_lo - y_pad, y_hi + y_pad

    def px(x):
        return (x - x_lo) / (x_hi - x_lo) * _SIZE

    def py(y):
        return _SIZE - (y - y_lo) / (y_hi - y_lo) * _SIZE

    if class_names is None:
        class_names = tuple(f"class {k}" for k in range(coords.shape[1]))

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(_SIZE)}" '
        f'height="{_fmt(_SIZE)}" viewBox="0 0 {_fmt(_SIZE)} {_fmt(_SIZE)}">',
        f'<rect width="{_fmt(_SIZE)}" height="{_fmt(_SIZE)}" fill="#ffffff"/>',
    ]
    # Rays from the origin along the two displayed category axes.
    ox, oy = px(0.0), py(0.0)
    for comp, tip, name in (
        (ax, (px(max(xs.max(), 0.0)), oy), class_names[ax]),
        (ay, (ox, py(max(ys.max(), 0.0))), class_names[ay]),
    ):
        color = PALETTE[comp % len(PALETTE)]
        lines.append(
            f'<line x1="{_fmt(ox)}" y1="{_fmt(oy)}" x2="{_fmt(tip[0])}" '
            f'y2="{_fmt(tip[1])}" stroke="{color}" stroke-width="1.5"/>'
        )
        lines.append(
            f'<text x="{_fmt(tip[0] + 4)}" y="{_fmt(tip[1] - 4)}" '
            f'font-family="sans-serif" font-size="12" fill="{color}">{name}</text>'
        )
    for i in range(coords.shape[0]):
        color = PALETTE[labels[i] % len(PALETTE)]
        lines.append(
            f'<circle cx="{_fmt(px(xs[i]))}" cy="{_fmt(py(ys[i]))}" r="3" '
            f'fill="{color}" fill-opacity="0.75"/>'
        )
    lines.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path
