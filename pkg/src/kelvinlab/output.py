"""Plain-text outputs: SVG drawings of contours and CSV tables."""

from __future__ import annotations

import csv
from typing import Iterable, Sequence

import numpy as np

from .geometry import NodeContour, PatchLike, loops

_COLORS = ("#1f4e79", "#b03a2e", "#1e8449", "#7d3c98", "#b9770e")


def contours_svg(patches: Sequence[PatchLike], size: int = 600, margin: float = 0.05,
                 title: str = "", fill: bool = True) -> str:
    """An SVG document drawing each patch in its own colour, on a shared square frame."""
    rings = [[c.nodes for c, _ in loops(p)] for p in patches]
    allpts = np.vstack([r for group in rings for r in group])
    lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    span = float(max(hi - lo)) * (1 + 2 * margin) or 1.0
    centre = 0.5 * (lo + hi)
    scale = size / span

    def tx(p):
        x = (p[:, 0] - centre[0]) * scale + size / 2
        y = size / 2 - (p[:, 1] - centre[1]) * scale
        return x, y

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}">', f'<rect width="{size}" height="{size}" fill="white"/>']
    if title:
        parts.append(f'<text x="10" y="20" font-family="sans-serif" font-size="14">{title}</text>')
    for k, group in enumerate(rings):
        col = _COLORS[k % len(_COLORS)]
        d = []
        for ring in group:
            x, y = tx(ring)
            pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(x, y))
            d.append(f"M {pts} Z")
        fill_attr = f'fill="{col}" fill-opacity="0.25" fill-rule="evenodd"' if fill else 'fill="none"'
        parts.append(f'<path d="{" ".join(d)}" {fill_attr} stroke="{col}" stroke-width="1"/>')
    parts.append("</svg>")
    return "\n".join(parts)


def write_svg(path, patches: Sequence[PatchLike], **kw) -> None:
    with open(path, "w") as fh:
        fh.write(contours_svg(patches, **kw))


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(header))
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def write_contour_json(path, c: NodeContour) -> None:
    import json

    with open(path, "w") as fh:
        json.dump(c.to_json(), fh)
