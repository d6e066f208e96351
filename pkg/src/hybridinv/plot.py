"""Deterministic SVG figures: speed/acceleration time series and 2D
ellipsoid projections.

The SVG is generated directly (fixed canvas, fixed fonts, stable element
order, fixed-precision coordinates) so identical inputs give byte-identical
files.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .geometry import EllipsoidCQ, project

WIDTH, HEIGHT = 640.0, 480.0
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64.0, 16.0, 16.0, 48.0


class PlotError(Exception):
    pass


def _fmt(x: float) -> str:
    return f"{x:.3f}"


@dataclass
class Axes:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    x_label: str = ""
    y_label: str = ""

    def sx(self, x: float) -> float:
        span = self.x_max - self.x_min or 1.0
        return MARGIN_L + (x - self.x_min) / span * (WIDTH - MARGIN_L - MARGIN_R)

    def sy(self, y: float) -> float:
        span = self.y_max - self.y_min or 1.0
        return HEIGHT - MARGIN_B - (y - self.y_min) / span * (HEIGHT - MARGIN_T - MARGIN_B)


def _ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10.0 ** np.floor(np.log10(raw))
    step = min(s for s in (mag, 2 * mag, 2.5 * mag, 5 * mag, 10 * mag) if s >= raw)
    start = np.ceil(lo / step) * step
    return [float(start + k * step) for k in range(int((hi - start) / step) + 1)]


def _svg_document(body: list[str]) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:g}" '
            f'height="{HEIGHT:g}" viewBox="0 0 {WIDTH:g} {HEIGHT:g}">')
    style = ('<style>text{font-family:monospace;font-size:12px;fill:#222}'
             '.axis{stroke:#222;fill:none}.grid{stroke:#ddd;fill:none}</style>')
    return "\n".join([head, style] + body + ["</svg>"]) + "\n"


def _axes_elements(ax: Axes) -> list[str]:
    out = []
    x0, x1 = ax.sx(ax.x_min), ax.sx(ax.x_max)
    y0, y1 = ax.sy(ax.y_min), ax.sy(ax.y_max)
    for tx in _ticks(ax.x_min, ax.x_max):
        px = ax.sx(tx)
        out.append(f'<line class="grid" x1="{_fmt(px)}" y1="{_fmt(y0)}" x2="{_fmt(px)}" y2="{_fmt(y1)}"/>')
        out.append(f'<text x="{_fmt(px)}" y="{_fmt(y0 + 18)}" text-anchor="middle">{tx:g}</text>')
    for ty in _ticks(ax.y_min, ax.y_max):
        py = ax.sy(ty)
        out.append(f'<line class="grid" x1="{_fmt(x0)}" y1="{_fmt(py)}" x2="{_fmt(x1)}" y2="{_fmt(py)}"/>')
        out.append(f'<text x="{_fmt(x0 - 6)}" y="{_fmt(py + 4)}" text-anchor="end">{ty:g}</text>')
    out.append(f'<rect class="axis" x="{_fmt(x0)}" y="{_fmt(y1)}" '
               f'width="{_fmt(x1 - x0)}" height="{_fmt(y0 - y1)}"/>')
    if ax.x_label:
        out.append(f'<text x="{_fmt((x0 + x1) / 2)}" y="{_fmt(HEIGHT - 10)}" '
                   f'text-anchor="middle">{ax.x_label}</text>')
    if ax.y_label:
        cx, cy = 16.0, (y0 + y1) / 2
        out.append(f'<text x="{_fmt(cx)}" y="{_fmt(cy)}" text-anchor="middle" '
                   f'transform="rotate(-90 {_fmt(cx)} {_fmt(cy)})">{ax.y_label}</text>')
    return out


def _polyline(ax: Axes, xs, ys, color: str, width: float = 1.5, dash: str = "") -> str:
    pts = " ".join(f"{_fmt(ax.sx(x))},{_fmt(ax.sy(y))}" for x, y in zip(xs, ys))
    d = f' stroke-dasharray="{dash}"' if dash else ""
    return f'<polyline fill="none" stroke="{color}" stroke-width="{width:g}"{d} points="{pts}"/>'


def read_trajectory_csv(path) -> dict[str, list]:
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    if not rows:
        raise PlotError(f"{path}: empty trajectory")
    return {k: [r[k] for r in rows] for k in rows[0]}


def _column(data: dict, name: str) -> list[float]:
    if name not in data:
        raise PlotError(f"unknown column {name!r}; have {sorted(data)}")
    return [float(v) for v in data[name] if v != ""]


def _limit_for_node(node: str, limits: dict[str, float], default: float) -> float:
    # Platoon naming: q_<limit><countdown>; the limit applies once announced.
    for key, value in limits.items():
        if node.startswith(f"q_{key}"):
            return value
    return default


def plot_speed(data: dict, limits: dict[str, float] | None = None,
               v_max: float = 35.0) -> str:
    """Truck speed over time with the active speed-limit overlay."""
    limits = limits if limits is not None else {"a": 15.6, "b": 24.5, "c": 29.5}
    ts = _column(data, "time_s")
    vs = _column(data, "v_0")
    lim = [_limit_for_node(node, limits, v_max) for node in data["node"]]
    ax = Axes(x_min=min(ts), x_max=max(ts),
              y_min=min(min(vs), min(lim)) - 2, y_max=max(max(vs), max(lim)) + 2,
              x_label="time [s]", y_label="v_0 [m/s]")
    body = _axes_elements(ax)
    body.append(_polyline(ax, ts, lim[: len(ts)], "#d62728", 1.5, "6 3"))
    body.append(_polyline(ax, ts, vs, "#1f77b4", 2.0))
    return _svg_document(body)


def plot_acceleration(data: dict) -> str:
    """Commanded input over time."""
    us = _column(data, "u")
    ts = _column(data, "time_s")[: len(us)]
    ax = Axes(x_min=min(ts), x_max=max(ts),
              y_min=min(us) - 0.5, y_max=max(us) + 0.5,
              x_label="time [s]", y_label="u [m/s^2]")
    body = _axes_elements(ax)
    body.append(_polyline(ax, ts, us, "#1f77b4", 2.0))
    return _svg_document(body)


def projection_ellipse(e: EllipsoidCQ, coords: tuple[int, int]) -> EllipsoidCQ:
    """2D shadow of an ellipsoid onto two coordinates."""
    i, j = coords
    if not (0 <= i < e.dim and 0 <= j < e.dim) or i == j:
        raise PlotError(f"projection coordinates {coords} out of range for dimension {e.dim}")
    return project(e, [i, j])


def plot_set_projection(sets: dict[str, EllipsoidCQ], node: str,
                        coords: tuple[int, int],
                        labels: tuple[str, str] | None = None,
                        points: int = 128) -> str:
    """Boundary of the 2D shadow of one node's ellipsoid."""
    if node not in sets:
        raise PlotError(f"no set for node {node!r}; have {sorted(sets)}")
    e2 = projection_ellipse(sets[node], coords)
    theta = np.linspace(0.0, 2.0 * np.pi, points + 1)
    circle = np.vstack([np.cos(theta), np.sin(theta)])
    L = np.linalg.cholesky(e2.Q)
    bnd = e2.c[:, None] + np.linalg.solve(L.T, circle)
    xs, ys = bnd[0], bnd[1]
    pad_x = 0.1 * (xs.max() - xs.min() or 1.0)
    pad_y = 0.1 * (ys.max() - ys.min() or 1.0)
    lx, ly = labels if labels else (f"x[{coords[0]}]", f"x[{coords[1]}]")
    ax = Axes(x_min=xs.min() - pad_x, x_max=xs.max() + pad_x,
              y_min=ys.min() - pad_y, y_max=ys.max() + pad_y,
              x_label=lx, y_label=ly)
    body = _axes_elements(ax)
    body.append(_polyline(ax, xs, ys, "#2ca02c", 2.0))
    return _svg_document(body)
