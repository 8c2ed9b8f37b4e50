"""Static SVG plots of momentum series.

Hand-rolled rather than pulling in a plotting stack: the output must be
byte-identical across runs and machines, and these line plots need
nothing beyond polylines and tick labels.  All coordinates are formatted
with fixed precision so the SVG text is reproducible.
"""

from __future__ import annotations

from typing import Sequence

from .events import AreaConfig

WIDTH, HEIGHT = 960, 360
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 72, 72, 34, 44

CUM_LIMIT_COLOR = "#1f6fb2"
CUM_MARKET_COLOR = "#c23b22"
MID_COLOR = "#9a9a9a"


def _span(values: Sequence[float]) -> tuple[float, float]:
    lo, hi = min(values), max(values)
    if lo == hi:
        lo, hi = lo - 1.0, hi + 1.0
    return lo, hi


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


class _Canvas:
    def __init__(self) -> None:
        self.parts: list[str] = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
            f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        ]

    def text(self, x: float, y: float, s: str, *, anchor: str = "start",
             size: int = 12, color: str = "#333333") -> None:
        self.parts.append(
            f'<text x="{x:.2f}" y="{y:.2f}" font-family="monospace" '
            f'font-size="{size}" fill="{color}" '
            f'text-anchor="{anchor}">{s}</text>')

    def line(self, x1: float, y1: float, x2: float, y2: float,
             color: str = "#333333", width: float = 1.0) -> None:
        self.parts.append(
            f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
            f'stroke="{color}" stroke-width="{width:.2f}"/>')

    def polyline(self, pts: Sequence[tuple[float, float]], color: str,
                 width: float = 1.5) -> None:
        coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
        self.parts.append(
            f'<polyline fill="none" stroke="{color}" '
            f'stroke-width="{width:.2f}" points="{coords}"/>')

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def line_plot_svg(title: str, xs: Sequence[float],
                  left_series: Sequence[tuple[str, str, Sequence[float]]],
                  right_series: Sequence[tuple[str, str, Sequence[float]]] = (),
                  x_label: str = "", left_label: str = "",
                  right_label: str = "") -> str:
    """One panel, shared x axis, optional secondary y axis on the right.

    Each series is ``(legend, color, values)`` with values aligned to xs.
    """
    cv = _Canvas()
    x0, x1 = MARGIN_L, WIDTH - MARGIN_R
    y0, y1 = HEIGHT - MARGIN_B, MARGIN_T
    xlo, xhi = _span(xs)
    llo, lhi = _span([v for _, _, vs in left_series for v in vs])

    def px(x: float) -> float:
        return x0 + (x - xlo) / (xhi - xlo) * (x1 - x0)

    def py_left(v: float) -> float:
        return y0 + (v - llo) / (lhi - llo) * (y1 - y0)

    # frame and ticks
    cv.line(x0, y0, x1, y0)
    cv.line(x0, y0, x0, y1)
    for t in _ticks(xlo, xhi):
        cv.line(px(t), y0, px(t), y0 + 4)
        cv.text(px(t), y0 + 18, f"{t:.1f}", anchor="middle", size=11)
    for t in _ticks(llo, lhi):
        cv.line(x0 - 4, py_left(t), x0, py_left(t))
        cv.text(x0 - 8, py_left(t) + 4, f"{t:.4g}", anchor="end", size=11)
    cv.text((x0 + x1) / 2, HEIGHT - 8, x_label, anchor="middle", size=12)
    cv.text(14, y1 - 12, left_label, size=12)
    cv.text(WIDTH / 2, 18, title, anchor="middle", size=14)

    legend_x = x0 + 8
    for label, color, vs in left_series:
        cv.polyline(list(zip(map(px, xs), map(py_left, vs))), color)
        cv.text(legend_x, y1 + 4, f"— {label}", color=color, size=11)
        legend_x += 9 * (len(label) + 4)

    if right_series:
        cv.line(x1, y0, x1, y1)
        rlo, rhi = _span([v for _, _, vs in right_series for v in vs])

        def py_right(v: float) -> float:
            return y0 + (v - rlo) / (rhi - rlo) * (y1 - y0)

        for t in _ticks(rlo, rhi):
            cv.line(x1, py_right(t), x1 + 4, py_right(t))
            cv.text(x1 + 8, py_right(t) + 4, f"{t:.4g}", size=11)
        cv.text(WIDTH - 4, y1 - 12, right_label, anchor="end", size=12)
        for label, color, vs in right_series:
            cv.polyline(list(zip(map(px, xs), map(py_right, vs))), color,
                        width=1.0)
            cv.text(legend_x, y1 + 4, f"— {label}", color=color, size=11)
            legend_x += 9 * (len(label) + 4)

    return cv.render()


def momentum_svg(result, area, cfg: AreaConfig | None = None) -> str:
    """Cumulative limit/market momentum for one area, midprice overlaid."""
    cfg = cfg or result.cfg
    samples = result.samples(area)
    if not samples:
        return line_plot_svg(f"{area.value} area momentum (no data)",
                             [0.0, 1.0], [("empty", CUM_LIMIT_COLOR, [0.0, 0.0])])
    t0 = samples[0].bucket_end
    xs = [(s.bucket_end - t0) / 1_000_000 for s in samples]
    unit = float(cfg.tick_size * cfg.size_unit) * 1_000_000 / cfg.dt
    cum_l, cum_m, acc_l, acc_m = [], [], 0, 0
    for s in samples:
        acc_l += s.m_limit
        acc_m += s.m_market
        cum_l.append(acc_l * unit)
        cum_m.append(acc_m * unit)

    tick = float(cfg.tick_size)
    valid = {int(e): (int(b), int(a))
             for e, b, a, v in zip(result.bucket_ends, result.ref_bid,
                                   result.ref_ask, result.ref_valid) if v}
    mids = [(valid[s.bucket_end][0] + valid[s.bucket_end][1]) / 2 * tick
            for s in samples]

    return line_plot_svg(
        f"{area.value} area cumulative momentum",
        xs,
        [("cum limit", CUM_LIMIT_COLOR, cum_l),
         ("cum market", CUM_MARKET_COLOR, cum_m)],
        [("midprice", MID_COLOR, mids)],
        x_label="seconds from first bucket",
        left_label="cumulative momentum",
        right_label="midprice",
    )
