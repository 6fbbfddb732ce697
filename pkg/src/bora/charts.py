"""Minimal SVG line charts for experiment summaries and GP slices.

Only needs the standard library: charts are built as an element tree and
serialized to text.  NaN values break a series into gaps, which is how
nonpositive values are handled on the log axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from xml.etree import ElementTree as ET

import numpy as np

PALETTE = {
    "bora1": "#1f77b4",
    "bora2": "#ff7f0e",
    "bora3": "#2ca02c",
    "sbf": "#d62728",
    "random": "#9467bd",
    "utopic": "#7f7f7f",
}
_FALLBACK_COLORS = ("#8c564b", "#e377c2", "#17becf", "#bcbd22")

WIDTH, HEIGHT = 720, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 72, 24, 48, 56


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray
    color: str
    dashed: bool = False
    band: tuple[np.ndarray, np.ndarray] | None = None


def color_for(label: str, index: int) -> str:
    return PALETTE.get(label, _FALLBACK_COLORS[index % len(_FALLBACK_COLORS)])


def _nice_step(span: float) -> float:
    raw = span / 5.0
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            return mult * mag
    return 10.0 * mag


def _linear_ticks(lo: float, hi: float) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    step = _nice_step(hi - lo)
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-12 * step:
        ticks.append(v)
        v += step
    return ticks


def _fmt(v: float) -> str:
    if v == int(v) and abs(v) < 1e7:
        return str(int(v))
    return f"{v:g}"


class _Frame:
    """Maps data coordinates into the plot rectangle."""

    def __init__(self, x_lo, x_hi, y_lo, y_hi, log_y):
        self.x_lo, self.x_hi = x_lo, max(x_hi, x_lo + 1e-12)
        self.y_lo, self.y_hi = y_lo, max(y_hi, y_lo + 1e-12)
        self.log_y = log_y

    def x(self, v):
        frac = (v - self.x_lo) / (self.x_hi - self.x_lo)
        return MARGIN_L + frac * (WIDTH - MARGIN_L - MARGIN_R)

    def y(self, v):
        frac = (v - self.y_lo) / (self.y_hi - self.y_lo)
        return HEIGHT - MARGIN_B - frac * (HEIGHT - MARGIN_T - MARGIN_B)


def _transform_y(y: np.ndarray, log_y: bool) -> np.ndarray:
    y = np.asarray(y, dtype=float).copy()
    if log_y:
        with np.errstate(invalid="ignore", divide="ignore"):
            y = np.where(y > 0.0, np.log10(np.maximum(y, 1e-300)), np.nan)
    return y

def _runs(ok: np.ndarray):
    """Index ranges [start, stop) of consecutive True entries."""
    start = None
    for i, flag in enumerate(ok):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            yield start, i
            start = None
    if start is not None:
        yield start, ok.size


def _pts(frame, xs, ys) -> str:
    return " ".join(f"{frame.x(a):.2f},{frame.y(b):.2f}" for a, b in zip(xs, ys))


def render_chart(
    series: list[Series],
    *,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    log_y: bool = False,
    markers: tuple[np.ndarray, np.ndarray] | None = None,
) -> str:
    """Render the series to SVG text."""
    ys, xs = [], []
    for s in series:
        ty = _transform_y(s.y, log_y)
        ys.append(ty)
        xs.append(np.asarray(s.x, dtype=float))
        if s.band is not None:
            ys.append(_transform_y(s.band[0], log_y))
            ys.append(_transform_y(s.band[1], log_y))
    if markers is not None:
        xs.append(np.asarray(markers[0], dtype=float))
        ys.append(_transform_y(np.asarray(markers[1], dtype=float), log_y))
    all_y = np.concatenate([v[np.isfinite(v)] for v in ys]) if ys else np.array([0.0])
    all_x = np.concatenate(xs) if xs else np.array([0.0])
    if all_y.size == 0:
        all_y = np.array([0.0, 1.0])
    y_lo, y_hi = float(all_y.min()), float(all_y.max())
    pad = 0.05 * (y_hi - y_lo or 1.0)
    frame = _Frame(float(all_x.min()), float(all_x.max()), y_lo - pad, y_hi + pad, log_y)

    svg = ET.Element(
        "svg",
        xmlns="http://www.w3.org/2000/svg",
        width=str(WIDTH),
        height=str(HEIGHT),
        viewBox=f"0 0 {WIDTH} {HEIGHT}",
    )
    ET.SubElement(svg, "rect", x="0", y="0", width=str(WIDTH), height=str(HEIGHT), fill="white")
    _axes(svg, frame, title, xlabel, ylabel)

    # Draw bands first so lines sit on top.
    for s in series:
        if s.band is None:
            continue
        sx = np.asarray(s.x, dtype=float)
        lo_t = _transform_y(s.band[0], log_y)
        hi_t = _transform_y(s.band[1], log_y)
        ok = np.isfinite(lo_t) & np.isfinite(hi_t)
        for i0, i1 in _runs(ok):
            pts = (
                _pts(frame, sx[i0:i1], hi_t[i0:i1])
                + " "
                + _pts(frame, sx[i0:i1][::-1], lo_t[i0:i1][::-1])
            )
            ET.SubElement(
                svg, "polygon", points=pts, fill=s.color, opacity="0.15", stroke="none"
            )
    for s in series:
        sx = np.asarray(s.x, dtype=float)
        ty = _transform_y(s.y, log_y)
        for i0, i1 in _runs(np.isfinite(ty)):
            attrs = {
                "points": _pts(frame, sx[i0:i1], ty[i0:i1]),
                "fill": "none",
                "stroke": s.color,
                "stroke-width": "1.8",
            }
            if s.dashed:
                attrs["stroke-dasharray"] = "6 4"
            ET.SubElement(svg, "polyline", attrs)
    if markers is not None:
        mx, my = markers
        my_t = _transform_y(np.asarray(my, float), log_y)
        for a, b in zip(np.asarray(mx, float), my_t):
            if np.isfinite(b):
                ET.SubElement(
                    svg,
                    "circle",
                    cx=f"{frame.x(a):.2f}",
                    cy=f"{frame.y(b):.2f}",
                    r="3",
                    fill="#333333",
                )
    _legend(svg, series)
    return ET.tostring(svg, encoding="unicode")


def _axes(svg, frame, title, xlabel, ylabel):
    x0, x1 = MARGIN_L, WIDTH - MARGIN_R
    y0, y1 = HEIGHT - MARGIN_B, MARGIN_T
    ET.SubElement(
        svg, "rect", x=str(x0), y=str(y1),
        width=str(x1 - x0), height=str(y0 - y1),
        fill="none", stroke="#333333",
    )
    for v in _linear_ticks(frame.x_lo, frame.x_hi):
        px = frame.x(v)
        ET.SubElement(svg, "line", x1=f"{px:.2f}", y1=str(y0), x2=f"{px:.2f}", y2=str(y0 + 5), stroke="#333333")
        _text(svg, px, y0 + 20, _fmt(v), anchor="middle")
    if frame.log_y:
        lo_k = math.ceil(frame.y_lo - 1e-9)
        hi_k = math.floor(frame.y_hi + 1e-9)
        ticks = [float(k) for k in range(lo_k, hi_k + 1)] or [frame.y_lo, frame.y_hi]
        labels = [f"{10.0 ** k:g}" for k in ticks]
    else:
        ticks = _linear_ticks(frame.y_lo, frame.y_hi)
        labels = [_fmt(v) for v in ticks]
    for v, lab in zip(ticks, labels):
        py = frame.y(v)
        ET.SubElement(svg, "line", x1=str(x0 - 5), y1=f"{py:.2f}", x2=str(x0), y2=f"{py:.2f}", stroke="#333333")
        _text(svg, x0 - 8, py + 4, lab, anchor="end")
        ET.SubElement(
            svg, "line", x1=str(x0), y1=f"{py:.2f}", x2=str(x1), y2=f"{py:.2f}",
            stroke="#dddddd",
        )
    if title:
        _text(svg, WIDTH / 2, MARGIN_T - 18, title, anchor="middle", size=15)
    if xlabel:
        _text(svg, (x0 + x1) / 2, HEIGHT - 14, xlabel, anchor="middle")
    if ylabel:
        el = _text(svg, 18, (y0 + y1) / 2, ylabel, anchor="middle")
        el.set("transform", f"rotate(-90 18 {(y0 + y1) / 2:.0f})")


def _legend(svg, series):
    x = WIDTH - MARGIN_R - 150
    y = MARGIN_T + 12
    for s in series:
        attrs = {
            "x1": str(x), "y1": str(y - 4), "x2": str(x + 26), "y2": str(y - 4),
            "stroke": s.color, "stroke-width": "2",
        }
        if s.dashed:
            attrs["stroke-dasharray"] = "6 4"
        ET.SubElement(svg, "line", attrs)
        _text(svg, x + 32, y, s.label)
        y += 16


def _text(svg, x, y, content, anchor="start", size=12):
    el = ET.SubElement(
        svg, "text", x=f"{x:.2f}", y=f"{y:.2f}",
        fill="#333333",
    )
    el.set("font-family", "sans-serif")
    el.set("font-size", str(size))
    el.set("text-anchor", anchor)
    el.text = content
    return el


def cumulative_chart(
    policy_labels: list[str],
    means: dict[str, np.ndarray],
    sds: dict[str, np.ndarray],
    utopic: np.ndarray | None = None,
    title: str = "Cumulative reward",
) -> str:
    """Log-scale cumulative reward chart with one band per policy."""
    series = []
    for i, label in enumerate(policy_labels):
        mean = np.asarray(means[label], dtype=float)
        sd = np.asarray(sds[label], dtype=float)
        t = np.arange(1, mean.size + 1, dtype=float)
        series.append(
            Series(
                label=label,
                x=t,
                y=mean,
                color=color_for(label, i),
                band=(mean - sd, mean + sd),
            )
        )
    if utopic is not None:
        u = np.asarray(utopic, dtype=float)
        series.append(
            Series(
                label="utopic",
                x=np.arange(1, u.size + 1, dtype=float),
                y=u,
                color=PALETTE["utopic"],
                dashed=True,
            )
        )
    return render_chart(
        series, title=title, xlabel="round", ylabel="cumulative reward", log_y=True
    )


def gp_slice_chart(
    grid: np.ndarray,
    mean: np.ndarray,
    sd: np.ndarray,
    points_x: np.ndarray,
    points_y: np.ndarray,
    title: str,
    xlabel: str = "allocation to channel 1",
) -> str:
    """Posterior mean with a one-standard-deviation band and observed points."""
    series = [
        Series(
            label="posterior mean",
            x=np.asarray(grid, dtype=float),
            y=np.asarray(mean, dtype=float),
            color=PALETTE["bora1"],
            band=(np.asarray(mean) - np.asarray(sd), np.asarray(mean) + np.asarray(sd)),
        )
    ]
    return render_chart(
        series,
        title=title,
        xlabel=xlabel,
        ylabel="reward",
        markers=(points_x, points_y),
    )
