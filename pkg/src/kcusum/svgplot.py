"""Static SVG plots generated straight from the CSV outputs.

Every figure re-reads the CSV it illustrates, so the plotted series can
never drift from the published numbers: there is one data path.  The
drawing is plain hand-assembled SVG (polylines, tick marks, a change
marker) -- no plotting dependency.
"""

from __future__ import annotations

import math
import os
from xml.sax.saxutils import escape

__all__ = ["trace_panels", "campaign_panel", "render_lines"]

_WIDTH, _HEIGHT = 800, 360
_LEFT, _RIGHT, _TOP, _BOTTOM = 70, 24, 22, 48


def _nice_ticks(lo: float, hi: float, target: int = 5) -> list:
    """Round tick positions covering [lo, hi] at a 1/2/5 decade step."""
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return []
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    value = first
    while value <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(value) < 1e-12 * step else value)
        value += step
    return ticks


def _label(value: float) -> str:
    text = f"{value:g}"
    return "0" if text == "-0" else text


class _Frame:
    """Affine data-to-pixel mapping over the fixed plot rectangle."""

    def __init__(self, x_lo, x_hi, y_lo, y_hi):
        if x_hi <= x_lo:
            x_hi = x_lo + 1.0
        if y_hi <= y_lo:
            pad = 1.0 if y_lo == 0 else abs(y_lo) * 0.1 + 1e-12
            y_lo, y_hi = y_lo - pad, y_lo + pad
        span_y = y_hi - y_lo
        y_lo -= 0.05 * span_y
        y_hi += 0.05 * span_y
        self.x_lo, self.x_hi, self.y_lo, self.y_hi = x_lo, x_hi, y_lo, y_hi

    def x(self, v: float) -> float:
        frac = (v - self.x_lo) / (self.x_hi - self.x_lo)
        return _LEFT + frac * (_WIDTH - _LEFT - _RIGHT)

    def y(self, v: float) -> float:
        frac = (v - self.y_lo) / (self.y_hi - self.y_lo)
        return _HEIGHT - _BOTTOM - frac * (_HEIGHT - _TOP - _BOTTOM)


def _segments(xs, ys):
    """Contiguous runs of finite points; breaks become visible gaps."""
    runs, current = [], []
    for x, y in zip(xs, ys):
        if y is None or not math.isfinite(y):
            if len(current) > 1:
                runs.append(current)
            current = []
        else:
            current.append((x, y))
    if len(current) > 1:
        runs.append(current)
    return runs


def render_lines(
    path: str,
    title: str,
    x_label: str,
    y_label: str,
    series: list,
    marker_x: float | None = None,
) -> None:
    """Write one SVG panel.

    ``series`` is a list of (name, color, xs, ys) tuples; non-finite or
    None y-values split the polyline.  ``marker_x`` draws a vertical
    change marker.
    """
    finite_y = [
        y for _, _, _, ys in series for y in ys if y is not None and math.isfinite(y)
    ]
    finite_x = [x for _, _, xs, _ in series for x in xs]
    if not finite_x:
        finite_x = [0.0, 1.0]
    if not finite_y:
        finite_y = [0.0, 1.0]
    frame = _Frame(min(finite_x), max(finite_x), min(finite_y), max(finite_y))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_WIDTH} {_HEIGHT}" '
        f'font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<text x="{_WIDTH / 2:.1f}" y="15" text-anchor="middle" font-size="14">'
        f"{escape(title)}</text>",
    ]
    # axes box
    x0, y0 = _LEFT, _HEIGHT - _BOTTOM
    x1, y1 = _WIDTH - _RIGHT, _TOP
    parts.append(
        f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" '
        f'fill="none" stroke="black" stroke-width="1"/>'
    )
    for tick in _nice_ticks(frame.x_lo, frame.x_hi):
        px = frame.x(tick)
        parts.append(
            f'<line x1="{px:.2f}" y1="{y0}" x2="{px:.2f}" y2="{y0 + 5}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{px:.2f}" y="{y0 + 18}" text-anchor="middle">{_label(tick)}</text>'
        )
    for tick in _nice_ticks(frame.y_lo, frame.y_hi):
        py = frame.y(tick)
        parts.append(
            f'<line x1="{x0 - 5}" y1="{py:.2f}" x2="{x0}" y2="{py:.2f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{x0 - 8}" y="{py + 4:.2f}" text-anchor="end">{_label(tick)}</text>'
        )
    parts.append(
        f'<text x="{(x0 + x1) / 2:.1f}" y="{_HEIGHT - 8}" text-anchor="middle">'
        f"{escape(x_label)}</text>"
    )
    parts.append(
        f'<text x="16" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {(y0 + y1) / 2:.1f})">{escape(y_label)}</text>'
    )
    if marker_x is not None and frame.x_lo <= marker_x <= frame.x_hi:
        px = frame.x(marker_x)
        parts.append(
            f'<line x1="{px:.2f}" y1="{y1}" x2="{px:.2f}" y2="{y0}" '
            f'stroke="red" stroke-width="1.5" stroke-dasharray="6 4"/>'
        )
    legend_y = _TOP + 14
    for name, color, xs, ys in series:
        for run in _segments(xs, ys):
            points = " ".join(f"{frame.x(x):.2f},{frame.y(y):.2f}" for x, y in run)
            parts.append(
                f'<polyline points="{points}" fill="none" stroke="{color}" '
                f'stroke-width="1.3"/>'
            )
        if len(series) > 1:
            parts.append(
                f'<line x1="{x1 - 150}" y1="{legend_y}" x2="{x1 - 120}" '
                f'y2="{legend_y}" stroke="{color}" stroke-width="2"/>'
            )
            parts.append(
                f'<text x="{x1 - 114}" y="{legend_y + 4}">{escape(name)}</text>'
            )
            legend_y += 16
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")


def _read_csv(path: str) -> tuple:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


def _cell(text: str) -> float | None:
    if text == "":
        return None
    return float(text)


def trace_panels(csv_path: str, out_dir: str, change_at: int | None = None) -> None:
    """Three panels from ``trace.csv``: state norm, score, CUSUM statistic."""
    header, rows = _read_csv(csv_path)
    expected = ["t", "state_norm", "s_t", "s_hat", "alarm"]
    if header != expected:
        raise ValueError(f"trace csv header mismatch: {header!r}")
    ts = [float(row[0]) for row in rows]
    norms = [_cell(row[1]) for row in rows]
    scores = [_cell(row[2]) for row in rows]
    stats = [_cell(row[3]) for row in rows]
    marker = float(change_at) if change_at is not None else None
    render_lines(
        os.path.join(out_dir, "state_norm.svg"),
        "observed state", "raw step t", "2-norm of the state",
        [("state norm", "#1f6fb2", ts, norms)], marker_x=marker,
    )
    render_lines(
        os.path.join(out_dir, "score.svg"),
        "corrected discrepancy per step", "raw step t", "score s_t",
        [("score", "#1f6fb2", ts, scores)], marker_x=marker,
    )
    render_lines(
        os.path.join(out_dir, "cusum.svg"),
        "detection statistic", "raw step t", "CUSUM statistic",
        [("statistic", "#1f6fb2", ts, stats)], marker_x=marker,
    )


def campaign_panel(csv_path: str, out_path: str) -> None:
    """Empirical means (with 2-SE whisker series) and theory bound vs b."""
    header, rows = _read_csv(csv_path)
    expected = ["b", "empirical_mean", "std_error", "n_runs", "theory_bound"]
    if header != expected:
        raise ValueError(f"campaign csv header mismatch: {header!r}")
    bs = [float(row[0]) for row in rows]
    means = [_cell(row[1]) for row in rows]
    sems = [_cell(row[2]) for row in rows]
    theory = [_cell(row[4]) for row in rows]
    upper = [
        None if m is None or s is None else m + 2 * s for m, s in zip(means, sems)
    ]
    lower = [
        None if m is None or s is None else m - 2 * s for m, s in zip(means, sems)
    ]
    series = [
        ("empirical mean", "#1f6fb2", bs, means),
        ("mean + 2 SE", "#9bbfdd", bs, upper),
        ("mean - 2 SE", "#9bbfdd", bs, lower),
    ]
    if any(v is not None for v in theory):
        series.append(("theory bound", "#c23b22", bs, theory))
    render_lines(
        out_path, "campaign summary", "threshold b", "steps", series,
    )
