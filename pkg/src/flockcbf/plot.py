"""Standalone SVG rendering of trajectories, obstacles and start/end markers.

No plotting dependency: the scene is small enough that emitting SVG
primitives directly keeps the output reproducible byte for byte.
"""

from __future__ import annotations

import math

from .environment import Obstacle

_FOLLOWER_COLORS = ("#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22")
_LEADER_COLOR = "#d62728"

_CANVAS = 640.0


def render_svg(series: dict[int, list[tuple[float, float]]],
               obstacles: list[Obstacle],
               leader: int | None,
               source: tuple[float, float] | None = None) -> str:
    """SVG scene from per-agent position series.

    Agents with a single sample get markers only; leader path drawn last,
    red and thicker.
    """
    xs = [p[0] for pts in series.values() for p in pts]
    ys = [p[1] for pts in series.values() for p in pts]
    for obs in obstacles:
        xs += [obs.center[0] - obs.radius, obs.center[0] + obs.radius]
        ys += [obs.center[1] - obs.radius, obs.center[1] + obs.radius]
    if source is not None:
        xs.append(source[0])
        ys.append(source[1])
    if not xs:
        xs, ys = [0.0], [0.0]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    span = max(x_hi - x_lo, y_hi - y_lo, 1e-9)
    margin = 0.1 * span
    x_lo -= margin
    y_lo -= margin
    span += 2.0 * margin
    scale = _CANVAS / span

    def sx(x: float) -> float:
        return (x - x_lo) * scale

    def sy(y: float) -> float:
        # flip: SVG y grows downward
        return _CANVAS - (y - y_lo) * scale

    def num(v: float) -> str:
        return format(v, ".3f")

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_CANVAS:g} {_CANVAS:g}" '
        f'width="{_CANVAS:g}" height="{_CANVAS:g}">',
        f'<rect width="{_CANVAS:g}" height="{_CANVAS:g}" fill="#ffffff"/>',
    ]
    for obs in obstacles:
        parts.append(
            f'<circle class="obstacle" cx="{num(sx(obs.center[0]))}" '
            f'cy="{num(sy(obs.center[1]))}" r="{num(obs.radius * scale)}" '
            f'fill="#555555"/>')
    if source is not None:
        parts.append(
            f'<circle class="source" cx="{num(sx(source[0]))}" '
            f'cy="{num(sy(source[1]))}" r="4" fill="#ffcc00" stroke="#806000"/>')

    order = sorted(series)
    if leader in series:
        order = [i for i in order if i != leader] + [leader]
    color_cycle = 0
    for i in order:
        pts = series[i]
        if i == leader:
            color, width, cls = _LEADER_COLOR, 2.5, "trajectory leader"
        else:
            color = _FOLLOWER_COLORS[color_cycle % len(_FOLLOWER_COLORS)]
            color_cycle += 1
            width, cls = 1.5, "trajectory"
        if len(pts) > 1:
            coords = " ".join(f"{num(sx(x))},{num(sy(y))}" for x, y in pts)
            parts.append(f'<polyline class="{cls}" data-agent="{i}" '
                         f'points="{coords}" fill="none" stroke="{color}" '
                         f'stroke-width="{width}"/>')
        x0, y0 = pts[0]
        x1, y1 = pts[-1]
        parts.append(f'<circle class="start-marker" data-agent="{i}" '
                     f'cx="{num(sx(x0))}" cy="{num(sy(y0))}" r="5" fill="none" '
                     f'stroke="{color}" stroke-width="1.5"/>')
        c = 5.0
        parts.append(
            f'<path class="end-marker" data-agent="{i}" d="M {num(sx(x1) - c)} '
            f'{num(sy(y1))} H {num(sx(x1) + c)} M {num(sx(x1))} '
            f'{num(sy(y1) - c)} V {num(sy(y1) + c)}" stroke="{color}" '
            f'stroke-width="1.5" fill="none"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def series_from_rows(rows: list[dict]) -> dict[int, list[tuple[float, float]]]:
    series: dict[int, list[tuple[float, float]]] = {}
    for row in rows:
        if not (math.isfinite(row["x"]) and math.isfinite(row["y"])):
            raise ValueError("non-finite position in trajectory")
        series.setdefault(row["agent_id"], []).append((row["x"], row["y"]))
    return series
