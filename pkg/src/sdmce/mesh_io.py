"""Reading, validating and writing disk-topology triangle meshes.

Indices are 0-based internally; OBJ and OFF files are converted on read and
write.  Faces must be counter-clockwise with respect to the outward side, so
the boundary loop extracted from them is also counter-clockwise.
"""

from dataclasses import dataclass, field
from functools import cached_property
import io
import logging
import os

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import IoError, ParseError, TopologyError

logger = logging.getLogger(__name__)

FORMATS = ("obj", "off")


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Immutable triangle surface with exactly one boundary loop.

    Attributes
    ----------
    vertices : (V, 3) float array
    faces : (F, 3) int array, counter-clockwise
    boundary_loop : (n,) int array, boundary vertices in loop order
    """

    vertices: np.ndarray
    faces: np.ndarray
    boundary_loop: np.ndarray

    def __post_init__(self):
        for name in ("vertices", "faces", "boundary_loop"):
            arr = getattr(self, name)
            arr.setflags(write=False)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    @cached_property
    def interior(self):
        """Indices of non-boundary vertices, ascending."""
        mask = np.ones(self.n_vertices, dtype=bool)
        mask[self.boundary_loop] = False
        out = np.flatnonzero(mask)
        out.setflags(write=False)
        return out

    @cached_property
    def is_boundary(self):
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.boundary_loop] = True
        mask.setflags(write=False)
        return mask

    @cached_property
    def edges(self):
        """Unique undirected edges as sorted ``(i, j)`` rows."""
        return _undirected_edges(self.faces)[0]

    @cached_property
    def neighbors(self):
        """One-ring neighbor lists (sorted) for every vertex."""
        adj = [set() for _ in range(self.n_vertices)]
        for i, j in self.edges:
            adj[i].add(int(j))
            adj[j].add(int(i))
        return tuple(tuple(sorted(s)) for s in adj)

    @cached_property
    def boundary_faces(self):
        """Map ``loop position i -> face index`` for the face on boundary edge
        ``(loop[i-1], loop[i])``."""
        directed = {}
        for fi, (a, b, c) in enumerate(self.faces):
            directed[(a, b)] = fi
            directed[(b, c)] = fi
            directed[(c, a)] = fi
        loop = self.boundary_loop
        return np.array(
            [directed[(int(loop[i - 1]), int(loop[i]))] for i in range(len(loop))],
            dtype=np.int64,
        )

    def bounding_diagonal(self):
        return float(np.linalg.norm(np.ptp(self.vertices, axis=0)))


@dataclass
class MeshDiagnostics:
    vertex_count: int
    edge_count: int
    face_count: int
    boundary_loop_count: int
    euler_characteristic: int
    is_disk: bool
    defect_list: list = field(default_factory=list)

    def to_dict(self):
        return {
            "vertex_count": self.vertex_count,
            "edge_count": self.edge_count,
            "face_count": self.face_count,
            "boundary_loop_count": self.boundary_loop_count,
            "euler_characteristic": self.euler_characteristic,
            "is_disk": self.is_disk,
            "defect_list": [list(d) for d in self.defect_list],
        }


def _undirected_edges(faces):
    directed = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    undirected = np.sort(directed, axis=1)
    edges, counts = np.unique(undirected, axis=0, return_counts=True)
    return edges, counts, directed


def _boundary_successors(faces):
    # Directed edges whose reverse is absent.  Returns dict a -> [b, ...].
    directed = {}
    for a, b, c in faces:
        for u, v in ((a, b), (b, c), (c, a)):
            directed[(int(u), int(v))] = directed.get((int(u), int(v)), 0) + 1
    succ = {}
    for (u, v) in directed:
        if (v, u) not in directed:
            succ.setdefault(u, []).append(v)
    return succ


def _trace_cycles(succ):
    """Walk boundary successor lists; returns (cycles, bad_vertices)."""
    bad = sorted(u for u, vs in succ.items() if len(vs) != 1)
    nxt = {u: vs[0] for u, vs in succ.items() if len(vs) == 1}
    seen = set()
    cycles = []
    for start in sorted(nxt):
        if start in seen:
            continue
        cycle = [start]
        seen.add(start)
        cur = nxt[start]
        closed = True
        while cur != start:
            if cur not in nxt or cur in seen:
                closed = False
                break
            cycle.append(cur)
            seen.add(cur)
            cur = nxt[cur]
        if closed:
            cycles.append(cycle)
        else:
            bad.append(cur)
    return cycles, bad


def extract_boundary(faces):
    """Ordered boundary loop of an oriented manifold disk.

    The loop follows the direction induced by the face orientation and starts
    at its smallest vertex index, so the result does not depend on face order.

    Raises
    ------
    TopologyError
        If there is no boundary edge or the boundary edges do not form exactly
        one simple cycle.
    """
    faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    succ = _boundary_successors(faces)
    if not succ:
        raise TopologyError("no boundary loop: surface is closed", kind="no_boundary_loop")
    cycles, bad = _trace_cycles(succ)
    if bad:
        raise TopologyError(
            f"boundary is not a simple cycle at vertex {bad[0]}",
            kind="non_manifold_boundary_vertex",
            element=bad[0],
        )
    if len(cycles) != 1:
        raise TopologyError(
            f"expected one boundary loop, found {len(cycles)}",
            kind="multiple_boundary_loops",
            element=len(cycles),
        )
    return cycles[0]


def diagnose(vertices, faces):
    """Topology checks on raw arrays; never raises for topological defects."""
    vertices = np.asarray(vertices, dtype=float).reshape(-1, 3)
    faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    nv, nf = len(vertices), len(faces)
    defects = []

    if nf == 0:
        defects.append(("no_faces", None))
        return MeshDiagnostics(nv, 0, 0, 0, nv, False, defects)

    out_of_range = np.flatnonzero(((faces < 0) | (faces >= nv)).any(axis=1))
    for fi in out_of_range:
        defects.append(("index_out_of_range", int(fi)))
    repeated = np.flatnonzero(
        (faces[:, 0] == faces[:, 1]) | (faces[:, 1] == faces[:, 2]) | (faces[:, 2] == faces[:, 0])
    )
    for fi in repeated:
        defects.append(("repeated_face_index", int(fi)))
    if len(out_of_range):
        return MeshDiagnostics(nv, 0, nf, 0, 0, False, defects)

    edges, counts, directed = _undirected_edges(faces)
    for e in edges[counts > 2]:
        defects.append(("non_manifold_edge", (int(e[0]), int(e[1]))))
    dir_edges, dir_counts = np.unique(directed, axis=0, return_counts=True)
    for e in dir_edges[dir_counts > 1]:
        if tuple(np.sort(e)) not in {tuple(x) for x in edges[counts > 2]}:
            defects.append(("inconsistent_winding", (int(e[0]), int(e[1]))))

    used = np.zeros(nv, dtype=bool)
    used[faces.ravel()] = True
    for v in np.flatnonzero(~used):
        defects.append(("isolated_vertex", int(v)))

    adj = coo_matrix(
        (np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(nv, nv)
    )
    n_comp, labels = connected_components(adj, directed=False)
    n_comp_used = len(np.unique(labels[used]))
    if n_comp_used > 1:
        defects.append(("multiple_components", n_comp_used))

    succ = _boundary_successors(faces)
    cycles, bad = _trace_cycles(succ) if succ else ([], [])
    for v in sorted(set(bad)):
        defects.append(("non_manifold_boundary_vertex", int(v)))
    if not succ:
        defects.append(("no_boundary_loop", None))
    elif len(cycles) > 1:
        defects.append(("multiple_boundary_loops", len(cycles)))

    chi = int(used.sum()) - len(edges) + nf
    if chi != 1:
        defects.append(("euler_characteristic", chi))

    is_disk = len(cycles) == 1 and chi == 1 and not defects
    return MeshDiagnostics(nv, len(edges), nf, len(cycles), chi, is_disk, defects)


_DEFECT_MESSAGES = {
    "no_faces": "mesh has no faces",
    "index_out_of_range": "face {} references a vertex out of range",
    "repeated_face_index": "face {} repeats a vertex index",
    "non_manifold_edge": "non-manifold edge {}",
    "inconsistent_winding": "inconsistent winding on edge {}",
    "isolated_vertex": "isolated vertex {}",
    "multiple_components": "mesh has {} connected components",
    "non_manifold_boundary_vertex": "boundary is not a simple cycle at vertex {}",
    "no_boundary_loop": "no boundary loop: surface is closed",
    "multiple_boundary_loops": "expected one boundary loop, found {}",
    "euler_characteristic": "Euler characteristic is {}, a disk needs 1",
}


def make_mesh(vertices, faces):
    """Validate arrays and build a :class:`TriMesh`.

    Raises :class:`TopologyError` naming the first defect found.
    """
    vertices = np.array(vertices, dtype=float).reshape(-1, 3)
    faces = np.array(faces, dtype=np.int64).reshape(-1, 3)
    diag = diagnose(vertices, faces)
    if not diag.is_disk:
        kind, element = diag.defect_list[0]
        msg = _DEFECT_MESSAGES[kind].format(element)
        raise TopologyError(msg, kind=kind, element=element)
    loop = np.asarray(extract_boundary(faces), dtype=np.int64)
    _warn_coincident(vertices)
    return TriMesh(vertices, faces, loop)


def _warn_coincident(vertices):
    if len(vertices) < 2:
        return
    diag = float(np.linalg.norm(np.ptp(vertices, axis=0)))
    if diag == 0.0:
        logger.warning("all vertices coincide")
        return
    pairs = cKDTree(vertices).query_pairs(1e-12 * diag)
    if pairs:
        i, j = min(pairs)
        logger.warning("%d coincident vertex pairs, e.g. %d and %d", len(pairs), i, j)


# ---------------------------------------------------------------- readers


def _read_text(source):
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
    else:
        data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data


def _infer_format(source, format):
    if format is not None:
        fmt = format.lower()
    elif isinstance(source, (str, os.PathLike)):
        fmt = os.path.splitext(os.fspath(source))[1].lstrip(".").lower()
    else:
        raise ValueError("format must be given for stream sources")
    if fmt not in FORMATS:
        raise ValueError(f"unsupported mesh format {fmt!r}")
    return fmt


def _parse_index(token, count, lineno):
    head = token.split("/")[0]
    try:
        idx = int(head)
    except ValueError:
        raise ParseError(f"bad face index {token!r}", lineno) from None
    if idx == 0:
        raise ParseError("OBJ indices are 1-based; got 0", lineno)
    return idx - 1 if idx > 0 else count + idx


def _parse_obj(text):
    vertices, faces, uvs, face_uv = [], [], [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key = parts[0]
        if key == "v":
            if len(parts) < 4:
                raise ParseError("vertex needs 3 coordinates", lineno)
            try:
                vertices.append([float(x) for x in parts[1:4]])
            except ValueError:
                raise ParseError(f"bad vertex coordinate in {raw.strip()!r}", lineno) from None
        elif key == "vt":
            if len(parts) < 3:
                raise ParseError("texture coordinate needs 2 values", lineno)
            try:
                uvs.append([float(x) for x in parts[1:3]])
            except ValueError:
                raise ParseError(f"bad texture coordinate in {raw.strip()!r}", lineno) from None
        elif key == "f":
            tokens = parts[1:]
            if len(tokens) != 3:
                raise ParseError(
                    f"face has {len(tokens)} vertices; only triangles are accepted", lineno
                )
            faces.append([_parse_index(t, len(vertices), lineno) for t in tokens])
            tex = []
            for t in tokens:
                sub = t.split("/")
                if len(sub) > 1 and sub[1]:
                    tex.append(_parse_index(sub[1], len(uvs), lineno))
            face_uv.append(tex if len(tex) == 3 else None)
    return vertices, faces, uvs, face_uv


def _parse_off(text):
    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append((lineno, line.split()))
    if not lines or not lines[0][1][0].endswith("OFF"):
        raise ParseError("missing OFF header", lines[0][0] if lines else 1)
    header_no, header = lines[0]
    rest = lines[1:]
    counts = header[1:]
    if not counts:
        if not rest:
            raise ParseError("missing counts line", header_no)
        header_no, counts = rest[0]
        rest = rest[1:]
    try:
        nv, nf = int(counts[0]), int(counts[1])
    except (ValueError, IndexError):
        raise ParseError("bad counts line", header_no) from None
    if len(rest) < nv + nf:
        raise ParseError(f"expected {nv} vertices and {nf} faces", rest[-1][0] if rest else header_no)
    vertices, faces = [], []
    for lineno, parts in rest[:nv]:
        try:
            vertices.append([float(x) for x in parts[:3]])
        except ValueError:
            raise ParseError("bad vertex line", lineno) from None
        if len(parts) < 3:
            raise ParseError("vertex needs 3 coordinates", lineno)
    for lineno, parts in rest[nv:nv + nf]:
        try:
            k = int(parts[0])
            idx = [int(x) for x in parts[1:1 + k]]
        except ValueError:
            raise ParseError("bad face line", lineno) from None
        if k != 3:
            raise ParseError(f"face has {k} vertices; only triangles are accepted", lineno)
        if len(idx) != 3:
            raise ParseError("face line is truncated", lineno)
        faces.append(idx)
    return vertices, faces


def load_mesh(source, format=None):
    """Read an OBJ or OFF mesh and validate it as a disk.

    Parameters
    ----------
    source : path or binary stream
    format : {"obj", "off"}, optional
        Inferred from the file suffix when ``source`` is a path.
    """
    return make_mesh(*read_raw(source, format))


def read_raw(source, format=None):
    """Parse an OBJ or OFF file into ``(vertices, faces)`` arrays without any
    topology checks (see :func:`diagnose`)."""
    fmt = _infer_format(source, format)
    text = _read_text(source)
    if fmt == "obj":
        vertices, faces, _, _ = _parse_obj(text)
    else:
        vertices, faces = _parse_off(text)
    if not vertices:
        raise ParseError("no vertices")
    return np.asarray(vertices, float), np.asarray(faces, np.int64).reshape(-1, 3)


def load_uv_obj(source):
    """Read an OBJ carrying ``vt`` records; returns ``(mesh, uv)``.

    Each vertex must receive a single texture coordinate (no seams).
    """
    text = _read_text(source)
    vertices, faces, uvs, face_uv = _parse_obj(text)
    mesh = make_mesh(np.asarray(vertices, float), np.asarray(faces, np.int64).reshape(-1, 3))
    if not uvs:
        raise ParseError("no vt records")
    uv = np.full((mesh.n_vertices, 2), np.nan)
    uvs = np.asarray(uvs)
    for face, tex in zip(mesh.faces, face_uv):
        if tex is None:
            raise ParseError("face without texture indices")
        for v, t in zip(face, tex):
            if not np.isnan(uv[v, 0]) and not np.array_equal(uv[v], uvs[t]):
                raise ParseError(f"vertex {v} has more than one texture coordinate")
            uv[v] = uvs[t]
    if np.isnan(uv).any():
        missing = int(np.flatnonzero(np.isnan(uv[:, 0]))[0])
        raise ParseError(f"vertex {missing} has no texture coordinate")
    return mesh, uv


def load_uv_csv(source, n_vertices):
    """Read ``index,u,v`` rows written by :func:`write_parameterized`."""
    text = _read_text(source)
    rows = text.strip().splitlines()
    if not rows or rows[0].strip() != "index,u,v":
        raise ParseError('expected header "index,u,v"', 1)
    uv = np.full((n_vertices, 2), np.nan)
    for lineno, row in enumerate(rows[1:], start=2):
        parts = row.split(",")
        try:
            i, u, v = int(parts[0]), float(parts[1]), float(parts[2])
        except (ValueError, IndexError):
            raise ParseError(f"bad row {row!r}", lineno) from None
        if not 0 <= i < n_vertices:
            raise ParseError(f"index {i} out of range", lineno)
        uv[i] = (u, v)
    if np.isnan(uv).any():
        missing = int(np.flatnonzero(np.isnan(uv[:, 0]))[0])
        raise ParseError(f"vertex {missing} has no coordinate")
    return uv


# ---------------------------------------------------------------- writers


def _g(x):
    return format(float(x), ".17g")


def format_obj(mesh, uv):
    out = io.StringIO()
    for x, y, z in mesh.vertices:
        out.write(f"v {_g(x)} {_g(y)} {_g(z)}\n")
    for u, v in uv:
        out.write(f"vt {_g(u)} {_g(v)}\n")
    for a, b, c in mesh.faces + 1:
        out.write(f"f {a}/{a} {b}/{b} {c}/{c}\n")
    return out.getvalue()


def format_off(mesh):
    out = io.StringIO()
    out.write(f"OFF\n{mesh.n_vertices} {mesh.n_faces} {len(mesh.edges)}\n")
    for x, y, z in mesh.vertices:
        out.write(f"{_g(x)} {_g(y)} {_g(z)}\n")
    for a, b, c in mesh.faces:
        out.write(f"3 {a} {b} {c}\n")
    return out.getvalue()


def format_csv(uv):
    out = io.StringIO()
    out.write("index,u,v\n")
    for i, (u, v) in enumerate(uv):
        out.write(f"{i},{_g(u)},{_g(v)}\n")
    return out.getvalue()


def write_parameterized(mesh, f, sink, format="obj"):
    """Write a mesh with its planar embedding.

    ``format="obj"`` adds ``vt`` records and ``f i/i j/j k/k`` faces;
    ``format="csv"`` writes ``index,u,v`` rows.  Floats use 17 significant
    digits.  Any failure to write is re-raised as :class:`IoError`.
    """
    uv = np.asarray(getattr(f, "f", f), dtype=float)
    if uv.shape != (mesh.n_vertices, 2):
        raise ValueError(f"embedding has shape {uv.shape}, expected ({mesh.n_vertices}, 2)")
    fmt = format.lower()
    if fmt == "obj":
        text = format_obj(mesh, uv)
    elif fmt == "csv":
        text = format_csv(uv)
    else:
        raise ValueError(f"unsupported output format {format!r}")
    data = text.encode("utf-8")
    try:
        if isinstance(sink, (str, os.PathLike)):
            with open(sink, "wb") as fh:
                fh.write(data)
        else:
            sink.write(data)
    except (OSError, ValueError) as exc:
        raise IoError(f"failed to write output: {exc}") from exc
