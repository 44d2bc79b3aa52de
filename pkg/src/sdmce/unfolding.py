"""Detection and repair of folded elements in a disk embedding.

A boundary pair ``(loop[i-1], loop[i])`` is folded when its sector term is
negative.  Faces with no boundary edge are folded when their image has
negative signed area.  A face on a boundary edge is classified by two tests:
whether its third vertex lies on the far side of the edge's chord (away from
the origin) and whether the edge itself is folded.

    ======  ==============  ===============  =====================
    kind    third vertex    boundary edge    image signed area
    ======  ==============  ===============  =====================
    1       outside chord   not folded       negative
    2       inside chord    folded           negative
    3       outside chord   folded           positive
    ======  ==============  ===============  =====================

Boundary folding is removed by re-solving with hinge penalties; triangle
folding by moving interior vertices to convex combinations of their
neighbors, with weights fitted on the original surface.
"""

from dataclasses import asdict, dataclass, field
import json
import logging

import numpy as np
from scipy.spatial import cKDTree

from .disk_energy import DiskEmbedding, face_signed_areas, sector_terms
from .errors import RepairStall, SingularUpdateError

logger = logging.getLogger(__name__)


@dataclass
class FoldingReport:
    folded_boundary_vertices: list = field(default_factory=list)
    folded_interior_triangles: list = field(default_factory=list)
    folded_boundary_triangles_kind1: list = field(default_factory=list)
    folded_boundary_triangles_kind2: list = field(default_factory=list)
    folded_boundary_triangles_kind3: list = field(default_factory=list)

    @property
    def n_boundary_vertices(self):
        return len(self.folded_boundary_vertices)

    @property
    def n_boundary_triangles(self):
        return (len(self.folded_boundary_triangles_kind1)
                + len(self.folded_boundary_triangles_kind2)
                + len(self.folded_boundary_triangles_kind3))

    @property
    def n_triangles(self):
        return self.n_boundary_triangles + len(self.folded_interior_triangles)

    @property
    def is_clean(self):
        return self.n_boundary_vertices == 0 and self.n_triangles == 0

    def totals(self):
        return {
            "boundary_vertices": self.n_boundary_vertices,
            "interior_triangles": len(self.folded_interior_triangles),
            "boundary_triangles_kind1": len(self.folded_boundary_triangles_kind1),
            "boundary_triangles_kind2": len(self.folded_boundary_triangles_kind2),
            "boundary_triangles_kind3": len(self.folded_boundary_triangles_kind3),
            "triangles": self.n_triangles,
        }

    def to_dict(self):
        out = asdict(self)
        out["totals"] = self.totals()
        return out

    def to_json(self, indent=None):
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, data):
        data = {k: v for k, v in data.items() if k != "totals"}
        return cls(**data)


def _cross(o, a, b):
    return (a[..., 0] - o[..., 0]) * (b[..., 1] - o[..., 1]) - (
        a[..., 1] - o[..., 1]) * (b[..., 0] - o[..., 0])


def boundary_triangle_kinds(mesh, f):
    """``{face: kind}`` for every folded face that has a boundary edge."""
    f = np.asarray(getattr(f, "f", f), dtype=float)
    loop = mesh.boundary_loop
    sigma = sector_terms(f[loop])
    faces = mesh.faces
    kinds = {}
    for i, face in enumerate(mesh.boundary_faces):
        face = int(face)
        if face in kinds:
            continue
        a, b = int(loop[i - 1]), int(loop[i])
        c = int(next(v for v in faces[face] if v != a and v != b))
        folded_edge = sigma[i] < 0.0
        side_c = _cross(f[a], f[b], f[c])
        side_o = _cross(f[a], f[b], np.zeros(2))
        if side_o == 0.0:
            # chord through the origin: the disk side is the left of a->b
            # unless the edge is folded
            side_o = -1.0 if folded_edge else 1.0
        outside = side_c * side_o < 0.0
        if outside and not folded_edge:
            kinds[face] = 1
        elif folded_edge and not outside:
            kinds[face] = 2
        elif outside and folded_edge:
            kinds[face] = 3
    return kinds


def classify_folding(mesh, f):
    """Sort every folded element of the embedding ``f`` into a :class:`FoldingReport`."""
    f = np.asarray(getattr(f, "f", f), dtype=float)
    loop = mesh.boundary_loop
    sigma = sector_terms(f[loop])
    folded_pairs = np.flatnonzero(sigma < 0.0)

    kinds = boundary_triangle_kinds(mesh, f)
    on_boundary_edge = np.zeros(mesh.n_faces, dtype=bool)
    on_boundary_edge[mesh.boundary_faces] = True
    area = face_signed_areas(f, mesh.faces)
    interior_folded = np.flatnonzero(~on_boundary_edge & (area < 0.0))

    by_kind = {1: [], 2: [], 3: []}
    for face in sorted(kinds):
        by_kind[kinds[face]].append(face)
    return FoldingReport(
        folded_boundary_vertices=[int(loop[i]) for i in folded_pairs],
        folded_interior_triangles=[int(x) for x in interior_folded],
        folded_boundary_triangles_kind1=by_kind[1],
        folded_boundary_triangles_kind2=by_kind[2],
        folded_boundary_triangles_kind3=by_kind[3],
    )


@dataclass
class ConvexWeights:
    w: np.ndarray
    residual: float


def _affine_minimizer(P):
    # lambda minimizing |P^T lambda| subject to sum(lambda) = 1
    k = len(P)
    K = np.zeros((k + 1, k + 1))
    K[:k, :k] = P @ P.T
    K[:k, k] = 1.0
    K[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    return sol[:k]


def _min_norm_point(Q, tol=1e-12, max_iter=500):
    """Wolfe's algorithm: the point of smallest norm in the convex hull of the rows of ``Q``.

    Returns simplex weights over the rows.
    """
    k = len(Q)
    sq = np.einsum("ij,ij->i", Q, Q)
    scale = max(float(sq.max()), 1e-300)
    j = int(np.argmin(sq))
    S = [j]
    w = np.array([1.0])
    x = Q[j].copy()
    for _ in range(max_iter):
        dots = Q @ x
        j = int(np.argmin(dots))
        if float(x @ x) - dots[j] <= tol * scale or j in S:
            break
        S.append(j)
        w = np.append(w, 0.0)
        while True:
            lam = _affine_minimizer(Q[S])
            if np.all(lam > tol):
                w = lam
                break
            # step from w toward lam until the first weight hits zero
            shrink = lam < w
            neg = lam <= tol
            cand = w[neg & shrink] / (w[neg & shrink] - lam[neg & shrink])
            theta = float(cand.min()) if len(cand) else 1.0
            w = theta * lam + (1.0 - theta) * w
            keep = w > tol
            if keep.all():
                keep[np.argmin(w)] = False
            S = [s for s, kp in zip(S, keep) if kp]
            w = w[keep]
            w = w / w.sum()
        x = w @ Q[S]
    out = np.zeros(k)
    out[S] = np.clip(w, 0.0, None)
    return out / out.sum()


def convex_weights(v, neighbors):
    """Simplex weights ``w`` minimizing ``|v - sum_l w_l n_l|``.

    Parameters
    ----------
    v : (d,) array
    neighbors : (k, d) array, k >= 1

    Returns
    -------
    ConvexWeights
    """
    v = np.asarray(v, dtype=float)
    P = np.atleast_2d(np.asarray(neighbors, dtype=float))
    if len(P) == 0:
        raise ValueError("need at least one neighbor")
    w = _min_norm_point(P - v)
    return ConvexWeights(w, float(np.linalg.norm(v - w @ P)))


class _WeightCache(dict):
    """Lazily fitted convex weights of each vertex over its one-ring."""

    def __init__(self, mesh):
        super().__init__()
        self.mesh = mesh

    def __missing__(self, vertex):
        nbrs = np.asarray(self.mesh.neighbors[vertex], dtype=np.int64)
        cw = convex_weights(self.mesh.vertices[vertex], self.mesh.vertices[nbrs])
        self[vertex] = (nbrs, cw)
        return self[vertex]


def weight_cache(mesh):
    return _WeightCache(mesh)


def _single_update(f, vertex, cache):
    nbrs, cw = cache[vertex]
    f[vertex] = cw.w @ f[nbrs]


def repair_boundary_triangle(mesh, f, face, weights_cache=None):
    """Move the interior vertex of a boundary face to the convex combination
    of its mapped one-ring (boundary neighbors included).

    Returns a new array; faces whose third vertex is itself on the boundary
    are returned unchanged.
    """
    cache = weights_cache if weights_cache is not None else weight_cache(mesh)
    f = np.array(getattr(f, "f", f), dtype=float)
    movable = [int(v) for v in mesh.faces[face] if not mesh.is_boundary[v]]
    for vertex in movable:
        _single_update(f, vertex, cache)
    return f


def _solve_small(M, rhs):
    # closed-form adjugate solve for m <= 3
    m = len(M)
    if m == 1:
        det = M[0, 0]
        adj = np.ones((1, 1))
    elif m == 2:
        det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
        adj = np.array([[M[1, 1], -M[0, 1]], [-M[1, 0], M[0, 0]]])
    else:
        adj = np.empty((3, 3))
        for r in range(3):
            for c in range(3):
                rows = [x for x in range(3) if x != c]
                cols = [x for x in range(3) if x != r]
                sub = M[np.ix_(rows, cols)]
                adj[r, c] = (-1) ** (r + c) * (sub[0, 0] * sub[1, 1] - sub[0, 1] * sub[1, 0])
        det = float(M[0] @ adj[:, 0])
    if abs(det) < 1e-12:
        raise SingularUpdateError(f"coupled update matrix is singular (det={det:.3e})")
    return adj @ rhs / det


def coupled_update(M, rhs):
    """Solve ``M x = rhs`` for the simultaneous update of up to three vertices.

    Raises :class:`SingularUpdateError` when ``|det M| < 1e-12``.
    """
    return _solve_small(np.asarray(M, dtype=float), np.asarray(rhs, dtype=float))


def interior_update_system(mesh, f, face, weights_cache=None):
    """``(movable, M, rhs)`` of the simultaneous update of a face's vertices.

    Each movable vertex ``p`` satisfies ``f_p = sum_q w_pq f_q`` over its
    one-ring; weights toward the other movable vertices of the face go into
    ``M``, everything else (boundary vertices of the face included) into
    ``rhs``.
    """
    cache = weights_cache if weights_cache is not None else weight_cache(mesh)
    f = np.asarray(getattr(f, "f", f), dtype=float)
    movable = [int(v) for v in mesh.faces[face] if not mesh.is_boundary[v]]
    slot = {v: r for r, v in enumerate(movable)}
    M = np.eye(len(movable))
    rhs = np.zeros((len(movable), f.shape[1]))
    for r, p in enumerate(movable):
        nbrs, cw = cache[p]
        for q, w in zip(nbrs, cw.w):
            if int(q) in slot:
                M[r, slot[int(q)]] -= w
            else:
                rhs[r] += w * f[q]
    return movable, M, rhs


def repair_interior_triangle(mesh, f, face, weights_cache=None):
    """Move a folded interior face's vertices together to the fixed point of
    their convex-combination equations.

    Falls back to one-at-a-time updates when the coupled system is singular.
    Returns a new array.
    """
    cache = weights_cache if weights_cache is not None else weight_cache(mesh)
    f = np.array(getattr(f, "f", f), dtype=float)
    movable, M, rhs = interior_update_system(mesh, f, face, cache)
    if not movable:
        return f
    try:
        f[movable] = coupled_update(M, rhs)
    except SingularUpdateError:
        logger.debug("face %d: singular coupled update, moving vertices one at a time", face)
        for vertex in movable:
            _single_update(f, vertex, cache)
    return f


def default_delta(mesh, rule="interior"):
    """Penalty increment: ``|boundary| / |interior vertices|`` or ``|boundary| / |faces|``."""
    n_b = len(mesh.boundary_loop)
    if rule == "interior":
        return n_b / max(len(mesh.interior), 1)
    if rule == "faces":
        return n_b / mesh.n_faces
    raise ValueError("rule must be 'interior' or 'faces'")


def repair_boundary_vertices(state, f_b, solver, delta, max_rounds=100):
    """Raise the hinge weight of every folded boundary pair and re-solve until none remain.

    Parameters
    ----------
    state : PenaltyState
        Supplies the starting ``alpha`` (zeros when unset).
    f_b : (n, 2) array
        Current boundary.
    solver : callable
        ``solver(alpha, f_b_start) -> DiskEmbedding``.
    delta : float
        Weight increment per round.

    Returns
    -------
    (DiskEmbedding or None, alpha)
        ``None`` when nothing was folded (no solve performed).
    """
    f_b = np.asarray(f_b, dtype=float)
    alpha = np.zeros(len(f_b)) if state.alpha is None else np.array(state.alpha, dtype=float)
    emb = None
    for _ in range(max_rounds):
        folded = sector_terms(f_b) < 0.0
        if not folded.any():
            return emb, alpha
        alpha[folded] += delta
        emb = solver(alpha, f_b)
        f_b = emb.f_boundary
    if (sector_terms(f_b) < 0.0).any():
        raise RepairStall(
            f"boundary folding remains after {max_rounds} rounds",
            embedding=emb,
        )
    return emb, alpha


def _triangle_loop(mesh, f, select, repair, cache, max_passes, label):
    passes = 0
    while True:
        faces = select(classify_folding(mesh, f))
        if not faces:
            return f, passes
        if passes == max_passes:
            raise RepairStall(
                f"{len(faces)} folded {label} triangles remain after {max_passes} passes",
                report=classify_folding(mesh, f),
                embedding=f,
            )
        for face in faces:
            f = repair(mesh, f, face, cache)
        passes += 1


def repair_all(mesh, f, state, solver, delta=None, max_passes=20, max_rounds=100,
               history=None):
    """Remove all folding: boundary pairs, then boundary faces, then interior faces.

    Parameters
    ----------
    mesh : TriMesh
    f : DiskEmbedding or (V, 2) array
        A converged solution.
    state : PenaltyState
    solver : callable
        ``solver(alpha, f_b_start) -> DiskEmbedding``, the penalized re-solve.
    delta : float, optional
        Hinge increment; defaults to :func:`default_delta`.
    history : list, optional
        Receives the :class:`FoldingReport` before repair and after each stage,
        even when a stage stalls.

    Returns
    -------
    (DiskEmbedding, list of FoldingReport)
    """
    boundary = mesh.boundary_loop
    f = np.array(getattr(f, "f", f), dtype=float)
    history = [] if history is None else history
    report = classify_folding(mesh, f)
    history.append(report)
    if report.is_clean:
        return DiskEmbedding(f, boundary), history

    delta = default_delta(mesh) if delta is None else delta
    emb, _ = repair_boundary_vertices(state, f[boundary], solver, delta, max_rounds)
    if emb is not None:
        f = np.array(emb.f, dtype=float)
    history.append(classify_folding(mesh, f))

    cache = weight_cache(mesh)
    f, _ = _triangle_loop(
        mesh, f,
        lambda r: (r.folded_boundary_triangles_kind1 + r.folded_boundary_triangles_kind2
                   + r.folded_boundary_triangles_kind3),
        repair_boundary_triangle, cache, max_passes, "boundary",
    )
    history.append(classify_folding(mesh, f))

    f, _ = _triangle_loop(
        mesh, f, lambda r: r.folded_interior_triangles,
        repair_interior_triangle, cache, max_passes, "interior",
    )
    report = classify_folding(mesh, f)
    history.append(report)
    if not report.is_clean:
        raise RepairStall("interior repairs refolded boundary triangles",
                          report=report, embedding=f)
    return DiskEmbedding(f, boundary), history


def foreign_vertex_hits(mesh, f, eps=1e-14):
    """``(face, vertex)`` pairs where a vertex image lies strictly inside a
    face image it does not belong to.

    Orientation tests run on coordinates scaled to unit extent and count a
    point as inside only when all three signed tests exceed ``eps``.
    """
    f = np.asarray(getattr(f, "f", f), dtype=float)
    scale = max(float(np.max(np.abs(f))), 1e-300)
    p = f / scale
    faces = mesh.faces
    tri = p[faces]
    center = tri.mean(axis=1)
    radius = np.linalg.norm(tri - center[:, None], axis=2).max(axis=1) * (1.0 + 1e-9)
    tree = cKDTree(p)
    candidates = tree.query_ball_point(center, radius)
    hits = []
    for face, cand in enumerate(candidates):
        cand = [q for q in cand if q not in faces[face]]
        if not cand:
            continue
        a, b, c = tri[face]
        sign = 1.0 if _cross(a, b, c) >= 0.0 else -1.0
        q = p[cand]
        o1 = sign * _cross(a, b, q)
        o2 = sign * _cross(b, c, q)
        o3 = sign * _cross(c, a, q)
        inside = (o1 > eps) & (o2 > eps) & (o3 > eps)
        hits.extend((face, int(v)) for v, ok in zip(cand, inside) if ok)
    return hits
