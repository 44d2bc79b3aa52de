"""Synthetic disk-topology meshes with known conformal structure.

All generators return a :class:`~sdmce.mesh_io.TriMesh` with counter-clockwise
faces (seen from +z, or from outside for the hemisphere), so the boundary
loop runs counter-clockwise and maps onto the unit circle without reversal.
"""

import numpy as np

from .mesh_io import TriMesh, make_mesh


def fan_disk(n, z=0.0):
    """Center vertex plus ``n`` rim vertices at the n-th roots of unity.

    Vertex 0 is the center; rim vertex ``k`` sits at angle ``2*pi*k/n``.
    """
    if n < 3:
        raise ValueError("a fan needs at least 3 rim vertices")
    t = 2.0 * np.pi * np.arange(n) / n
    vertices = np.zeros((n + 1, 3))
    vertices[1:, 0] = np.cos(t)
    vertices[1:, 1] = np.sin(t)
    vertices[:, 2] = z
    rim = np.arange(1, n + 1)
    faces = np.column_stack([np.zeros(n, dtype=int), rim, np.roll(rim, -1)])
    return make_mesh(vertices, faces)


def _zip_rings(inner, inner_angles, outer, outer_angles):
    # Merge two concentric rings by angle into a triangle strip.
    faces = []
    m, n = len(inner), len(outer)
    if m == 1:
        for j in range(n):
            faces.append((inner[0], outer[j], outer[(j + 1) % n]))
        return faces
    two_pi = 2.0 * np.pi

    def angle(angles, k, size):
        return angles[k % size] + (two_pi if k >= size else 0.0)

    i = j = 0
    while i < m or j < n:
        next_inner = angle(inner_angles, i + 1, m)
        next_outer = angle(outer_angles, j + 1, n)
        if j < n and (i >= m or next_outer <= next_inner):
            faces.append((inner[i % m], outer[j % n], outer[(j + 1) % n]))
            j += 1
        else:
            faces.append((inner[i % m], outer[j % n], inner[(i + 1) % m]))
            i += 1
    return faces


def ring_disk_param(rings):
    """Polar layout of a disk with ``rings`` concentric rings of 6k vertices.

    Returns ``(radius, angle, faces)``; vertex count is ``1 + 3*rings*(rings+1)``
    and the last ``6*rings`` vertices form the rim.
    """
    if rings < 1:
        raise ValueError("need at least one ring")
    radius = [0.0]
    angle = [0.0]
    ring_index = [[0]]
    for k in range(1, rings + 1):
        n = 6 * k
        start = len(radius)
        radius.extend([k / rings] * n)
        angle.extend(2.0 * np.pi * np.arange(n) / n)
        ring_index.append(list(range(start, start + n)))
    angle = np.asarray(angle)
    faces = []
    for k in range(rings):
        inner, outer = ring_index[k], ring_index[k + 1]
        faces.extend(_zip_rings(inner, angle[inner], outer, angle[outer]))
    return np.asarray(radius), angle, np.asarray(faces, dtype=np.int64)


def flat_disk(rings):
    """Planar unit disk triangulated by concentric rings."""
    r, t, faces = ring_disk_param(rings)
    vertices = np.column_stack([r * np.cos(t), r * np.sin(t), np.zeros_like(r)])
    return make_mesh(vertices, faces)


def hemisphere(rings):
    """Upper unit hemisphere, pole at +z, boundary on the equator.

    Rings are equally spaced in polar angle.  ``rings=12, 25, 51`` give about
    500, 2000 and 8000 vertices.
    """
    r, t, faces = ring_disk_param(rings)
    polar = r * (np.pi / 2.0)
    vertices = np.column_stack(
        [np.sin(polar) * np.cos(t), np.sin(polar) * np.sin(t), np.cos(polar)]
    )
    return make_mesh(vertices, faces)


def stereographic(vertices):
    """Conformal map of the upper hemisphere onto the unit disk (projection from the south pole)."""
    v = np.asarray(vertices, dtype=float)
    return v[:, :2] / (1.0 + v[:, 2:3])


def strip(n_cols, width=1.0, height=1.0):
    """Rectangle ``[0, width] x [0, height]`` with ``n_cols`` columns of two triangles."""
    xs = np.linspace(0.0, width, n_cols + 1)
    bottom = np.column_stack([xs, np.zeros_like(xs), np.zeros_like(xs)])
    top = np.column_stack([xs, np.full_like(xs, height), np.zeros_like(xs)])
    vertices = np.vstack([bottom, top])
    faces = []
    for c in range(n_cols):
        b0, b1 = c, c + 1
        t0, t1 = n_cols + 1 + c, n_cols + 2 + c
        faces.append((b0, b1, t1))
        faces.append((b0, t1, t0))
    return make_mesh(vertices, np.asarray(faces))
