"""TSV embedding files and SVG drawings of 2D layouts."""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .graph import Graph

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


def _ids(n: int, labels) -> np.ndarray:
    if labels is None:
        return np.arange(n, dtype=np.int64)
    ids = np.asarray(labels, dtype=np.int64)
    if ids.shape != (n,):
        raise ValueError(f"need {n} vertex ids, got {ids.shape}")
    return ids


def write_embedding(emb, path: str | Path, labels=None) -> None:
    """One row per vertex, ascending by original id: ``id<TAB>x0<TAB>x1...``.

    ``labels[k]`` is the original id of row ``k`` of ``emb`` (identity if omitted).
    """
    emb = np.asarray(emb, dtype=np.float64)
    n, d = emb.shape
    ids = _ids(n, labels)
    lines = ["#id\t" + "\t".join(f"d{k}" for k in range(d))]
    for row in np.argsort(ids, kind="stable"):
        lines.append(f"{ids[row]}\t" + "\t".join(f"{x:.6g}" for x in emb[row]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_embedding(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(ids, coords)`` from a file written by :func:`write_embedding`."""
    ids, rows = [], []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split()
        try:
            ids.append(int(fields[0]))
            rows.append([float(x) for x in fields[1:]])
        except (ValueError, IndexError) as exc:
            raise ValueError(f"line {lineno}: malformed embedding row") from exc
    if len({len(r) for r in rows}) > 1:
        raise ValueError("embedding rows have differing dimensions")
    return np.array(ids, dtype=np.int64), np.array(rows, dtype=np.float64)


def read_vertex_classes(path: str | Path) -> dict[int, str]:
    """``id class`` per line; ``#`` lines are comments."""
    classes = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) < 2:
            raise ValueError(f"line {lineno}: expected 'id class'")
        classes[int(fields[0])] = fields[1]
    return classes


def emit_svg(g: Graph, emb2d, path: str | Path, classes: dict[int, str] | None = None, show_ids: bool = False) -> None:
    """Draw edges as lines and vertices as dots; optional per-vertex colour classes keyed by original id."""
    xy = np.asarray(emb2d, dtype=np.float64)
    if xy.ndim != 2 or xy.shape != (g.n, 2):
        raise ValueError("SVG output needs a 2-dimensional embedding")
    ids = _ids(g.n, g.labels)
    lo = xy.min(axis=0)
    span = xy.max(axis=0) - lo
    size = float(max(span.max(), 1e-9))
    margin = 0.05 * size
    x0, y0 = lo - margin
    w, h = span + 2 * margin
    w, h = max(w, 2 * margin), max(h, 2 * margin)
    radius = 0.006 * size
    stroke = 0.002 * size
    opacity = min(1.0, max(0.01, 1.0 / math.sqrt(max(g.m, 1))))

    colour_of = {}
    if classes:
        for k, name in enumerate(sorted(set(classes.values()))):
            colour_of[name] = PALETTE[k % len(PALETTE)]

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{x0:.6g} {y0:.6g} {w:.6g} {h:.6g}">',
        f'<g stroke="#444" stroke-width="{stroke:.4g}" stroke-opacity="{opacity:.4g}">',
    ]
    for a, b in zip(g.src, g.dst):
        out.append(f'<line x1="{xy[a, 0]:.6g}" y1="{xy[a, 1]:.6g}" x2="{xy[b, 0]:.6g}" y2="{xy[b, 1]:.6g}"/>')
    out.append("</g>")
    out.append('<g stroke="none">')
    for v in range(g.n):
        fill = "#222"
        if classes and int(ids[v]) in classes:
            fill = colour_of[classes[int(ids[v])]]
        out.append(f'<circle cx="{xy[v, 0]:.6g}" cy="{xy[v, 1]:.6g}" r="{radius:.4g}" fill="{fill}"/>')
    out.append("</g>")
    if show_ids:
        out.append(f'<g font-size="{3 * radius:.4g}" fill="#000">')
        for v in range(g.n):
            out.append(f'<text x="{xy[v, 0] + radius:.6g}" y="{xy[v, 1] - radius:.6g}">{escape(str(ids[v]))}</text>')
        out.append("</g>")
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")
