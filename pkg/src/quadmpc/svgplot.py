"""Minimal hand-written SVG line charts for run logs.

Three figures are understood, all drawn from the CSV column dict returned by
:func:`quadmpc.output.read_log_csv`:

* ``grf_z``    — per-leg vertical ground reaction forces against time
* ``states``   — four stacked panels: position, velocity, Euler angles, rates
* ``top_view`` — the xy footprint of the body path, equal aspect

No plotting dependency: the charts are a few hundred ``<polyline>`` and
``<text>`` elements.  Intended for eyeballing runs, not publication.
"""

from __future__ import annotations

import math

import numpy as np

LEG_LABELS = ("FL", "FR", "RL", "RR")
SERIES_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")

FIGURE_NAMES = ("grf_z", "states", "top_view")


class UnknownFigureError(ValueError):
    """Figure name not in :data:`FIGURE_NAMES`."""

    def __init__(self, name: str):
        super().__init__(
            f"unknown figure {name!r}; valid names: {', '.join(FIGURE_NAMES)}"
        )


def _nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    if not math.isfinite(lo) or not math.isfinite(hi):
        return [0.0]
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-12 * step:
        ticks.append(round(v, 12))
        v += step
    return ticks or [lo]


def _fmt(v: float) -> str:
    return f"{v:.6g}"


class _Panel:
    """One axes rectangle: scales data, accumulates SVG elements."""

    def __init__(self, x: float, y: float, w: float, h: float,
                 xlim: tuple[float, float], ylim: tuple[float, float],
                 title: str = "", xlabel: str = "", ylabel: str = ""):
        self.x, self.y, self.w, self.h = x, y, w, h
        pad_x = 0.0 if xlim[1] > xlim[0] else 0.5
        pad_y = 0.05 * (ylim[1] - ylim[0]) if ylim[1] > ylim[0] else 0.5
        self.xlim = (xlim[0] - pad_x, xlim[1] + pad_x)
        self.ylim = (ylim[0] - pad_y, ylim[1] + pad_y)
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel
        self.elements: list[str] = []

    def sx(self, v: float) -> float:
        a, b = self.xlim
        return self.x + (v - a) / (b - a) * self.w

    def sy(self, v: float) -> float:
        a, b = self.ylim
        return self.y + self.h - (v - a) / (b - a) * self.h

    def frame(self) -> None:
        e = self.elements
        e.append(
            f'<rect x="{self.x}" y="{self.y}" width="{self.w}" height="{self.h}" '
            f'fill="white" stroke="#444" stroke-width="1"/>'
        )
        for tv in _nice_ticks(*self.xlim):
            px = self.sx(tv)
            e.append(f'<line x1="{px:.1f}" y1="{self.y + self.h}" x2="{px:.1f}" '
                     f'y2="{self.y + self.h + 4}" stroke="#444"/>')
            e.append(f'<text x="{px:.1f}" y="{self.y + self.h + 16}" '
                     f'font-size="10" text-anchor="middle">{_fmt(tv)}</text>')
        for tv in _nice_ticks(*self.ylim):
            py = self.sy(tv)
            e.append(f'<line x1="{self.x - 4}" y1="{py:.1f}" x2="{self.x}" '
                     f'y2="{py:.1f}" stroke="#444"/>')
            e.append(f'<text x="{self.x - 6}" y="{py + 3:.1f}" font-size="10" '
                     f'text-anchor="end">{_fmt(tv)}</text>')
        if self.title:
            e.append(f'<text x="{self.x + self.w / 2}" y="{self.y - 6}" '
                     f'font-size="12" text-anchor="middle">{self.title}</text>')
        if self.xlabel:
            e.append(f'<text x="{self.x + self.w / 2}" y="{self.y + self.h + 30}" '
                     f'font-size="11" text-anchor="middle">{self.xlabel}</text>')
        if self.ylabel:
            cx, cy = self.x - 40, self.y + self.h / 2
            e.append(f'<text x="{cx}" y="{cy}" font-size="11" text-anchor="middle" '
                     f'transform="rotate(-90 {cx} {cy})">{self.ylabel}</text>')

    def line(self, xs: np.ndarray, ys: np.ndarray, color: str,
             label: str | None = None, label_slot: int = 0) -> None:
        # thin long traces so files stay small; 1 kHz logs need no more
        # than ~2 points per output pixel
        step = max(1, len(xs) // int(2 * self.w))
        pts = " ".join(
            f"{self.sx(float(a)):.1f},{self.sy(float(b)):.1f}"
            for a, b in zip(xs[::step], ys[::step])
        )
        self.elements.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.2"/>'
        )
        if label is not None:
            lx = self.x + self.w - 70
            ly = self.y + 14 + 14 * label_slot
            self.elements.append(
                f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 18}" y2="{ly - 4}" '
                f'stroke="{color}" stroke-width="2"/>'
            )
            self.elements.append(
                f'<text x="{lx + 22}" y="{ly}" font-size="10">{label}</text>'
            )


def _svg_document(width: int, height: int, elements: list[str]) -> str:
    body = "\n".join(elements)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}" '
        f'font-family="sans-serif">\n<rect width="100%" height="100%" '
        f'fill="white"/>\n{body}\n</svg>\n'
    )


def _span(*arrays: np.ndarray) -> tuple[float, float]:
    lo = min(float(a.min()) for a in arrays if a.size)
    hi = max(float(a.max()) for a in arrays if a.size)
    return lo, hi


def _figure_grf_z(cols: dict[str, np.ndarray]) -> str:
    t = cols["t"]
    series = [cols[f"f{i}z"] for i in range(4)]
    panel = _Panel(60, 30, 620, 300, _span(t), _span(*series),
                   title="vertical ground reaction forces",
                   xlabel="t [s]", ylabel="f_z [N]")
    panel.frame()
    for i, (fz, name) in enumerate(zip(series, LEG_LABELS)):
        panel.line(t, fz, SERIES_COLORS[i], label=name, label_slot=i)
    return _svg_document(720, 380, panel.elements)


def _figure_states(cols: dict[str, np.ndarray]) -> str:
    t = cols["t"]
    groups = [
        ("position [m]", ("px", "py", "pz")),
        ("velocity [m/s]", ("vx", "vy", "vz")),
        ("orientation [rad]", ("roll", "pitch", "yaw")),
        ("angular rate [rad/s]", ("wx", "wy", "wz")),
    ]
    elements: list[str] = []
    panel_h, gap, top = 150, 45, 30
    for gi, (ylabel, names) in enumerate(groups):
        series = [cols[n] for n in names]
        y = top + gi * (panel_h + gap)
        panel = _Panel(60, y, 620, panel_h, _span(t), _span(*series),
                       xlabel="t [s]" if gi == len(groups) - 1 else "",
                       ylabel=ylabel)
        panel.frame()
        for i, (s, name) in enumerate(zip(series, names)):
            panel.line(t, s, SERIES_COLORS[i], label=name, label_slot=i)
        elements.extend(panel.elements)
    height = top + len(groups) * (panel_h + gap)
    return _svg_document(720, height, elements)


def _figure_top_view(cols: dict[str, np.ndarray]) -> str:
    px, py = cols["px"], cols["py"]
    xlim, ylim = _span(px), _span(py)
    # equal aspect: widen the smaller span around its midpoint
    span = max(xlim[1] - xlim[0], ylim[1] - ylim[0], 0.1)
    cx, cy = 0.5 * (xlim[0] + xlim[1]), 0.5 * (ylim[0] + ylim[1])
    lim_x = (cx - span / 2, cx + span / 2)
    lim_y = (cy - span / 2, cy + span / 2)
    panel = _Panel(70, 30, 480, 480, lim_x, lim_y,
                   title="body path, top view", xlabel="x [m]", ylabel="y [m]")
    panel.frame()
    panel.line(px, py, SERIES_COLORS[0])
    panel.elements.append(
        f'<circle cx="{panel.sx(float(px[0])):.1f}" cy="{panel.sy(float(py[0])):.1f}" '
        f'r="4" fill="#2ca02c"/>'
    )
    panel.elements.append(
        f'<circle cx="{panel.sx(float(px[-1])):.1f}" cy="{panel.sy(float(py[-1])):.1f}" '
        f'r="4" fill="#d62728"/>'
    )
    return _svg_document(620, 560, panel.elements)


_FIGURES = {
    "grf_z": _figure_grf_z,
    "states": _figure_states,
    "top_view": _figure_top_view,
}


def render_figure(cols: dict[str, np.ndarray], name: str) -> str:
    """SVG text for a named figure; raises :class:`UnknownFigureError`."""
    try:
        fig = _FIGURES[name]
    except KeyError:
        raise UnknownFigureError(name) from None
    return fig(cols)


def write_figure(cols: dict[str, np.ndarray], name: str, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render_figure(cols, name))
