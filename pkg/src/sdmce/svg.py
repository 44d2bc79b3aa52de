"""Plain SVG drawing of a disk embedding."""

from dataclasses import dataclass

import numpy as np

from .disk_energy import face_signed_areas
from .unfolding import classify_folding


@dataclass
class SvgOptions:
    size: int = 600
    margin: int = 10
    stroke: str = "#333333"
    stroke_width: float = 0.5
    circle_color: str = "#1f77b4"
    fold_color: str = "#d62728"


def _fmt(x):
    return f"{x:.4f}"


def render_svg(mesh, f, options=None):
    """Unit circle, all triangle edges, and folded faces filled.

    Folded means every face listed by :func:`~sdmce.unfolding.classify_folding`
    plus any other face with negative image area.  Output depends only on the
    inputs.
    """
    opt = options or SvgOptions()
    f = np.asarray(getattr(f, "f", f), dtype=float)
    half = opt.size / 2.0
    scale = half - opt.margin

    def xy(p):
        # y axis points down in SVG
        return _fmt(half + scale * p[0]), _fmt(half - scale * p[1])

    report = classify_folding(mesh, f)
    folded = set(report.folded_interior_triangles)
    folded.update(report.folded_boundary_triangles_kind1)
    folded.update(report.folded_boundary_triangles_kind2)
    folded.update(report.folded_boundary_triangles_kind3)
    folded.update(np.flatnonzero(face_signed_areas(f, mesh.faces) < 0.0).tolist())

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{opt.size}" height="{opt.size}" '
        f'viewBox="0 0 {opt.size} {opt.size}">',
        f'<circle cx="{_fmt(half)}" cy="{_fmt(half)}" r="{_fmt(scale)}" fill="none" '
        f'stroke="{opt.circle_color}" stroke-width="1"/>',
        f'<g fill="none" stroke="{opt.stroke}" stroke-width="{opt.stroke_width}">',
    ]
    for k, face in enumerate(mesh.faces):
        pts = " ".join(",".join(xy(f[v])) for v in face)
        if k in folded:
            lines.append(f'<polygon class="folded" data-face="{k}" points="{pts}" '
                         f'fill="{opt.fold_color}" fill-opacity="0.6"/>')
        else:
            lines.append(f'<polygon data-face="{k}" points="{pts}"/>')
    lines += ["</g>", "</svg>", ""]
    return "\n".join(lines)
