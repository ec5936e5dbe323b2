"""Rendering of solved partitions: SVG cell boundaries and report figures."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .geometry import PowerDiagram

SVG_SIZE = 600


def cells_svg(diagram: PowerDiagram) -> str:
    """SVG document outlining the domain and one closed path per nonempty cell."""
    dom = diagram.domain.vertices
    lo = dom.min(0)
    span = (dom.max(0) - lo).max()
    scale = SVG_SIZE / span

    def pt(p):
        # SVG y axis points down
        x = (p[0] - lo[0]) * scale
        y = SVG_SIZE - (p[1] - lo[1]) * scale
        return f"{x:.3f},{y:.3f}"

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {SVG_SIZE} {SVG_SIZE}">',
        '<path d="M ' + " L ".join(pt(p) for p in dom)
        + ' Z" fill="none" stroke="#333" stroke-width="1.5"/>',
    ]
    for i, cell in enumerate(diagram.cells):
        if cell.is_empty:
            continue
        d = "M " + " L ".join(pt(p) for p in cell.vertices) + " Z"
        lines.append(f'<path class="cell" data-site="{i}" d="{d}" '
                     'fill="none" stroke="#1f77b4" stroke-width="0.8"/>')
    sx = [pt(s) for s in diagram.sites]
    for i, s in enumerate(sx):
        cx, cy = s.split(",")
        lines.append(f'<circle cx="{cx}" cy="{cy}" r="2" fill="#d62728"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def write_svg(path, diagram: PowerDiagram):
    with open(path, "w") as f:
        f.write(cells_svg(diagram))


def write_convergence_figure(path, trace, initial_residual: float):
    res = [initial_residual] + [rec.residual_norm for rec in trace]
    fig, ax = plt.subplots(figsize=(5, 4))
    if any(v > 0 for v in res):
        ax.semilogy(range(len(res)), res, "o-", ms=3)
    else:
        ax.plot(range(len(res)), res, "o-", ms=3)
    ax.set_xlabel("iteration")
    ax.set_ylabel("residual norm")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_cells_figure(path, diagram: PowerDiagram, masses=None):
    fig, ax = plt.subplots(figsize=(5, 5))
    dom = diagram.domain.vertices
    ax.add_patch(plt.Polygon(dom, closed=True, fill=False, ec="k", lw=1.2))
    vals = None if masses is None else np.asarray(masses, float)
    cmap = plt.get_cmap("viridis")
    vmax = None if vals is None else max(float(vals.max()), 1e-300)
    for i, cell in enumerate(diagram.cells):
        if cell.is_empty:
            continue
        fc = "none" if vals is None else cmap(vals[i] / vmax)
        ax.add_patch(plt.Polygon(cell.vertices, closed=True,
                                 fc=fc, ec="#1f77b4", lw=0.5, alpha=0.8))
    ax.plot(diagram.sites[:, 0], diagram.sites[:, 1], "r.", ms=3)
    ax.set_aspect("equal")
    pad = 0.05 * (dom.max(0) - dom.min(0)).max()
    ax.set_xlim(dom[:, 0].min() - pad, dom[:, 0].max() + pad)
    ax.set_ylim(dom[:, 1].min() - pad, dom[:, 1].max() + pad)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
