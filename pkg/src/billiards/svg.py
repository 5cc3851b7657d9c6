"""Minimal dependency-free SVG writing for plots the CLI emits."""

import numpy as np


class SvgCanvas:
    def __init__(self, width=640, height=640, xlim=(0, 1), ylim=(0, 1), margin=40):
        self.width = width
        self.height = height
        self.xlim = xlim
        self.ylim = ylim
        self.margin = margin
        self.parts = []

    def _map(self, x, y):
        mx, my = self.margin, self.margin
        sx = (self.width - 2 * mx) / (self.xlim[1] - self.xlim[0])
        sy = (self.height - 2 * my) / (self.ylim[1] - self.ylim[0])
        px = mx + (np.asarray(x) - self.xlim[0]) * sx
        py = self.height - my - (np.asarray(y) - self.ylim[0]) * sy
        return px, py

    def polyline(self, xs, ys, stroke="black", width=1.0, closed=False):
        px, py = self._map(np.asarray(xs), np.asarray(ys))
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        tag = "polygon" if closed else "polyline"
        self.parts.append(
            f'<{tag} points="{pts}" fill="none" stroke="{stroke}" stroke-width="{width}"/>')

    def dots(self, xs, ys, r=1.5, fill="crimson"):
        px, py = self._map(np.asarray(xs), np.asarray(ys))
        for a, b in zip(np.atleast_1d(px), np.atleast_1d(py)):
            self.parts.append(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="{r}" fill="{fill}"/>')

    def cell(self, x0, y0, x1, y1, fill):
        p0 = self._map(x0, y1)
        p1 = self._map(x1, y0)
        self.parts.append(
            f'<rect x="{p0[0]:.2f}" y="{p0[1]:.2f}" width="{p1[0]-p0[0]:.2f}" '
            f'height="{p1[1]-p0[1]:.2f}" fill="{fill}" stroke="none"/>')

    def text(self, x, y, s, size=12):
        px, py = self._map(x, y)
        self.parts.append(f'<text x="{px:.2f}" y="{py:.2f}" font-size="{size}">{s}</text>')

    def render(self):
        body = "\n".join(self.parts)
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
                f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">\n'
                f'<rect width="100%" height="100%" fill="white"/>\n{body}\n</svg>\n')

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.render())


def heat_color(v):
    """Map v in [0, 1] to a blue->white->red hex color."""
    v = float(min(1.0, max(0.0, v)))
    if v < 0.5:
        t = v / 0.5
        r, g, b = int(40 + 215 * t), int(80 + 175 * t), 255
    else:
        t = (v - 0.5) / 0.5
        r, g, b = 255, int(255 - 205 * t), int(255 - 215 * t)
    return f"#{r:02x}{g:02x}{b:02x}"
