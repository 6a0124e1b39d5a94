"""Tiny deterministic SVG writer used by the one-pager plots.

Fixed fonts and sizes, fixed-precision coordinates, no timestamps: the same
figure renders to byte-identical output.
"""

from __future__ import annotations

FONT = "monospace"


def _fmt(v: float) -> str:
    return f"{v:.2f}"


class Canvas:
    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.parts: list[str] = []

    def rect(self, x, y, w, h, fill="#4c78a8", stroke="none", opacity=1.0):
        self.parts.append(
            f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(w)}" height="{_fmt(h)}" '
            f'fill="{fill}" stroke="{stroke}" opacity="{_fmt(opacity)}"/>'
        )

    def line(self, x1, y1, x2, y2, stroke="#333333", width=1.0, dash=""):
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
            f'stroke="{stroke}" stroke-width="{_fmt(width)}"{dash_attr}/>'
        )

    def polyline(self, points, stroke="#4c78a8", width=1.5):
        pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in points)
        self.parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{stroke}" '
            f'stroke-width="{_fmt(width)}"/>'
        )

    def circle(self, x, y, r, fill="#4c78a8"):
        self.parts.append(
            f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(r)}" fill="{fill}"/>'
        )

    def text(self, x, y, content, size=11, anchor="start", fill="#111111", bold=False):
        weight = ' font-weight="bold"' if bold else ""
        content = (
            str(content).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
        )
        self.parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-family="{FONT}" '
            f'font-size="{size}" text-anchor="{anchor}" fill="{fill}"{weight}>'
            f"{content}</text>"
        )

    def group(self, other: "Canvas", dx: float, dy: float):
        body = "\n".join(other.parts)
        self.parts.append(
            f'<g transform="translate({_fmt(dx)},{_fmt(dy)})">\n{body}\n</g>'
        )

    def render(self) -> str:
        body = "\n".join(self.parts)
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">\n'
            f'<rect x="0" y="0" width="{self.width}" height="{self.height}" fill="#ffffff"/>\n'
            f"{body}\n</svg>\n"
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.render())
