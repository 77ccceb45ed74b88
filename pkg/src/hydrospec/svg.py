"""Minimal static SVG 1.1 plots: axes, ticks, polylines, markers, shapes.

Coordinates are formatted with a fixed number of decimals so the output is
byte-identical for identical input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

PALETTE = ("#1f4e79", "#c0392b", "#27ae60", "#8e44ad", "#d35400", "#16a085", "#7f8c8d", "#2c3e50")


def _f(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


def nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if not (hi > lo):
        hi = lo + 1.0
    raw = (hi - lo) / max(n, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step - 1e-9) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return ticks


def _tick_label(v: float) -> str:
    if v == 0:
        return "0"
    a = abs(v)
    if a >= 1e4 or a < 1e-3:
        return f"{v:.0e}"
    return f"{v:.6g}"


@dataclass
class Figure:
    width: int = 640
    height: int = 440
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    logx: bool = False
    logy: bool = False
    equal_aspect: bool = False
    _items: list = field(default_factory=list)
    _extent: list = field(default_factory=lambda: [math.inf, -math.inf, math.inf, -math.inf])
    margin: tuple = (70, 20, 40, 55)  # left, right, top, bottom

    # data registration

    def _grow(self, xs, ys):
        for x, y in zip(xs, ys):
            if self.logx and x <= 0 or self.logy and y <= 0:
                continue
            if not (math.isfinite(x) and math.isfinite(y)):
                continue
            e = self._extent
            e[0], e[1] = min(e[0], x), max(e[1], x)
            e[2], e[3] = min(e[2], y), max(e[3], y)

    def line(self, xs, ys, color=None, label=None, width=1.5, dash=None):
        xs, ys = [float(v) for v in xs], [float(v) for v in ys]
        self._grow(xs, ys)
        self._items.append(("line", xs, ys, color or self._next_color(), label, width, dash))
        return self

    def scatter(self, xs, ys, color=None, label=None, radius=2.5):
        xs, ys = [float(v) for v in xs], [float(v) for v in ys]
        self._grow(xs, ys)
        self._items.append(("scatter", xs, ys, color or self._next_color(), label, radius))
        return self

    def rect(self, x0, y0, x1, y1, color="#999999", opacity=0.15, label=None):
        self._grow([x0, x1], [y0, y1])
        self._items.append(("rect", x0, y0, x1, y1, color, opacity, label))
        return self

    def circle(self, cx, cy, r, color="#999999", opacity=0.12, label=None):
        self._grow([cx - r, cx + r], [cy - r, cy + r])
        self._items.append(("circle", cx, cy, r, color, opacity, label))
        return self

    def hspan(self, x0, x1, y, color="#333333", width=4.0, label=None):
        return self.line([x0, x1], [y, y], color=color, label=label, width=width)

    def _next_color(self):
        return PALETTE[len(self._items) % len(PALETTE)]

    # transforms

    def _limits(self):
        x0, x1, y0, y1 = self._extent
        if not math.isfinite(x0):
            x0, x1, y0, y1 = 0.0, 1.0, 0.0, 1.0
        if self.logx:
            x0, x1 = math.log10(x0), math.log10(x1)
        if self.logy:
            y0, y1 = math.log10(y0), math.log10(y1)
        if x1 == x0:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 == y0:
            y0, y1 = y0 - 0.5, y1 + 0.5
        px, py = 0.04 * (x1 - x0), 0.06 * (y1 - y0)
        x0, x1, y0, y1 = x0 - px, x1 + px, y0 - py, y1 + py
        if self.equal_aspect:
            l, r, t, b = self.margin
            sx = (self.width - l - r) / (x1 - x0)
            sy = (self.height - t - b) / (y1 - y0)
            if sx < sy:
                c, half = 0.5 * (y0 + y1), 0.5 * (self.height - t - b) / sx
                y0, y1 = c - half, c + half
            else:
                c, half = 0.5 * (x0 + x1), 0.5 * (self.width - l - r) / sy
                x0, x1 = c - half, c + half
        return x0, x1, y0, y1

    def _mapper(self):
        x0, x1, y0, y1 = self._limits()
        l, r, t, b = self.margin
        W, H = self.width - l - r, self.height - t - b

        def X(v):
            v = math.log10(v) if self.logx else v
            return l + (v - x0) / (x1 - x0) * W

        def Y(v):
            v = math.log10(v) if self.logy else v
            return t + (1.0 - (v - y0) / (y1 - y0)) * H

        return X, Y, (x0, x1, y0, y1), (l, t, W, H)

    # rendering

    def to_svg(self) -> str:
        X, Y, (x0, x1, y0, y1), (l, t, W, H) = self._mapper()
        out = [
            '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} {self.height}" font-family="sans-serif" font-size="11">',
            f'<rect x="0" y="0" width="{self.width}" height="{self.height}" fill="white"/>',
            '<defs><clipPath id="plot">'
            f'<rect x="{_f(l)}" y="{_f(t)}" width="{_f(W)}" height="{_f(H)}"/></clipPath></defs>',
        ]
        out += self._axes(X, Y, (x0, x1, y0, y1), (l, t, W, H))
        out.append('<g clip-path="url(#plot)">')
        for it in self._items:
            out += self._render(it, X, Y)
        out.append("</g>")
        out += self._legend(l, t, W)
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def _axes(self, X, Y, lims, box):
        x0, x1, y0, y1 = lims
        l, t, W, H = box
        out = [f'<rect x="{_f(l)}" y="{_f(t)}" width="{_f(W)}" height="{_f(H)}" fill="none" stroke="black"/>']
        for axis, (a, b), log in (("x", (x0, x1), self.logx), ("y", (y0, y1), self.logy)):
            if log:
                ticks = [10.0 ** k for k in range(math.ceil(a), math.floor(b) + 1)]
            else:
                ticks = nice_ticks(a, b)
            for v in ticks:
                if axis == "x":
                    px = X(v)
                    out.append(f'<line x1="{_f(px)}" y1="{_f(t + H)}" x2="{_f(px)}" y2="{_f(t + H + 5)}" stroke="black"/>')
                    out.append(f'<text x="{_f(px)}" y="{_f(t + H + 17)}" text-anchor="middle">{escape(_tick_label(v))}</text>')
                else:
                    py = Y(v)
                    out.append(f'<line x1="{_f(l - 5)}" y1="{_f(py)}" x2="{_f(l)}" y2="{_f(py)}" stroke="black"/>')
                    out.append(f'<text x="{_f(l - 8)}" y="{_f(py + 4)}" text-anchor="end">{escape(_tick_label(v))}</text>')
        if self.title:
            out.append(f'<text x="{_f(l + W / 2)}" y="{_f(t - 10)}" text-anchor="middle" font-size="13">{escape(self.title)}</text>')
        if self.xlabel:
            out.append(f'<text x="{_f(l + W / 2)}" y="{_f(t + H + 38)}" text-anchor="middle">{escape(self.xlabel)}</text>')
        if self.ylabel:
            cx, cy = l - 52, t + H / 2
            out.append(f'<text x="{_f(cx)}" y="{_f(cy)}" text-anchor="middle" '
                       f'transform="rotate(-90 {_f(cx)} {_f(cy)})">{escape(self.ylabel)}</text>')
        return out

    def _render(self, it, X, Y):
        kind = it[0]
        if kind == "line":
            _, xs, ys, color, _, width, dash = it
            pts, segs = [], []
            for x, y in zip(xs, ys):
                ok = math.isfinite(x) and math.isfinite(y) and not (self.logx and x <= 0) and not (self.logy and y <= 0)
                if ok:
                    pts.append(f"{_f(X(x))},{_f(Y(y))}")
                elif pts:
                    segs.append(pts)
                    pts = []
            if pts:
                segs.append(pts)
            extra = f' stroke-dasharray="{dash}"' if dash else ""
            return [f'<polyline points="{" ".join(p)}" fill="none" stroke="{color}" stroke-width="{width}"{extra}/>'
                    for p in segs if len(p) > 1]
        if kind == "scatter":
            _, xs, ys, color, _, r = it
            return [f'<circle cx="{_f(X(x))}" cy="{_f(Y(y))}" r="{r}" fill="{color}"/>'
                    for x, y in zip(xs, ys) if math.isfinite(x) and math.isfinite(y)]
        if kind == "rect":
            _, a, b, c, d, color, op, _ = it
            xa, xb = sorted((X(a), X(c)))
            ya, yb = sorted((Y(b), Y(d)))
            return [f'<rect x="{_f(xa)}" y="{_f(ya)}" width="{_f(xb - xa)}" height="{_f(yb - ya)}" '
                    f'fill="{color}" fill-opacity="{op}" stroke="{color}"/>']
        if kind == "circle":
            _, cx, cy, r, color, op, _ = it
            rx = abs(X(cx + r) - X(cx))
            ry = abs(Y(cy + r) - Y(cy))
            return [f'<ellipse cx="{_f(X(cx))}" cy="{_f(Y(cy))}" rx="{_f(rx)}" ry="{_f(ry)}" '
                    f'fill="{color}" fill-opacity="{op}" stroke="{color}"/>']
        raise ValueError(kind)

    def _legend(self, l, t, W):
        entries = []
        for it in self._items:
            label = it[4] if it[0] in ("line", "scatter") else it[-1]
            color = it[3] if it[0] in ("line", "scatter") else it[-3]
            if label and label not in [e[0] for e in entries]:
                entries.append((label, color))
        out = []
        for i, (label, color) in enumerate(entries):
            y = t + 14 + 15 * i
            x = l + W - 150
            out.append(f'<rect x="{_f(x)}" y="{_f(y - 8)}" width="10" height="10" fill="{color}"/>')
            out.append(f'<text x="{_f(x + 15)}" y="{_f(y + 1)}">{escape(label)}</text>')
        return out

    def save(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write(self.to_svg())
