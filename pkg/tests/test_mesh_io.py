import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sdmce.errors import IoError, ParseError, TopologyError
from sdmce.fixtures import fan_disk, flat_disk, hemisphere, strip
from sdmce.mesh_io import (
    diagnose, extract_boundary, load_mesh, load_uv_csv, load_uv_obj, make_mesh,
    write_parameterized,
)

TRIANGLE_OBJ = b"v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n"
TETRA_OBJ = b"v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 3 2\nf 1 2 4\nf 2 3 4\nf 1 4 3\n"


def _obj(mesh):
    out = io.StringIO()
    for v in mesh.vertices:
        out.write("v %r %r %r\n" % tuple(map(float, v)))
    for a, b, c in mesh.faces + 1:
        out.write(f"f {a} {b} {c}\n")
    return out.getvalue().encode()


def test_single_triangle_is_its_own_boundary():
    mesh = load_mesh(io.BytesIO(TRIANGLE_OBJ), format="obj")
    assert mesh.boundary_loop.tolist() == [0, 1, 2]
    assert mesh.interior.size == 0


def test_closed_tetrahedron_rejected():
    with pytest.raises(TopologyError, match="no boundary loop") as exc:
        load_mesh(io.BytesIO(TETRA_OBJ), format="obj")
    assert exc.value.kind == "no_boundary_loop"


def test_six_fan_boundary_and_euler():
    mesh = fan_disk(6)
    assert mesh.boundary_loop.tolist() == [1, 2, 3, 4, 5, 6]
    diag = diagnose(mesh.vertices, mesh.faces)
    assert (diag.vertex_count, diag.edge_count, diag.face_count) == (7, 12, 6)
    assert diag.euler_characteristic == 1 and diag.is_disk


def test_quad_boundary():
    assert extract_boundary([(0, 1, 2), (0, 2, 3)]) == [0, 1, 2, 3]


def test_boundary_independent_of_face_order(rng):
    mesh = flat_disk(3)
    shuffled = mesh.faces[rng.permutation(mesh.n_faces)]
    # rotating each face's corners keeps its orientation
    shuffled = np.array([np.roll(f, k) for f, k in zip(shuffled, rng.integers(0, 3, len(shuffled)))])
    assert extract_boundary(shuffled) == extract_boundary(mesh.faces)


def test_boundary_is_counter_clockwise():
    mesh = flat_disk(4)
    xy = mesh.vertices[mesh.boundary_loop, :2]
    area = 0.5 * np.sum(np.roll(xy[:, 0], 1) * xy[:, 1] - xy[:, 0] * np.roll(xy[:, 1], 1))
    assert area > 0


@pytest.mark.parametrize("text, line", [
    (b"v 0 0\n", 1),
    (b"v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 x\n", 4),
    (b"v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 4 3\n", 5),
])
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(ParseError) as exc:
        load_mesh(io.BytesIO(text), format="obj")
    assert exc.value.line == line


def test_off_reader():
    text = b"OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n"
    assert load_mesh(io.BytesIO(text), format="off").n_faces == 1
    with pytest.raises(ParseError):
        load_mesh(io.BytesIO(b"OFF\n4 1 0\n0 0 0\n1 0 0\n0 1 0\n1 1 0\n4 0 1 3 2\n"), format="off")


@pytest.mark.parametrize("faces, kind", [
    ([(0, 1, 2), (1, 2, 3)], "inconsistent_winding"),
    ([(0, 1, 2), (0, 1, 3), (0, 1, 4)], "non_manifold_edge"),
    ([(0, 1, 2), (3, 4, 5)], "multiple_components"),
    ([(0, 1, 2), (0, 3, 4)], "non_manifold_boundary_vertex"),
])
def test_topology_defects(faces, kind):
    vertices = np.random.default_rng(0).random((6, 3))
    diag = diagnose(vertices, faces)
    assert not diag.is_disk
    assert kind in [d[0] for d in diag.defect_list]
    with pytest.raises(TopologyError):
        make_mesh(vertices, faces)


def test_isolated_vertex_rejected():
    vertices = np.eye(4)[:, :3]
    with pytest.raises(TopologyError) as exc:
        make_mesh(vertices, [(0, 1, 2)])
    assert exc.value.kind == "isolated_vertex" and exc.value.element == 3


def test_annulus_has_two_loops():
    # ring of 4 outer and 4 inner vertices
    t = np.arange(4) * np.pi / 2
    outer = np.column_stack([2 * np.cos(t), 2 * np.sin(t), np.zeros(4)])
    inner = np.column_stack([np.cos(t), np.sin(t), np.zeros(4)])
    faces = []
    for k in range(4):
        a, b = k, (k + 1) % 4
        faces += [(a, b, 4 + b), (a, 4 + b, 4 + a)]
    diag = diagnose(np.vstack([outer, inner]), faces)
    assert diag.boundary_loop_count == 2 and not diag.is_disk


def test_obj_round_trip_preserves_uv():
    mesh = hemisphere(3)
    f = np.random.default_rng(1).normal(size=(mesh.n_vertices, 2))
    buf = io.BytesIO()
    write_parameterized(mesh, f, buf, format="obj")
    text = buf.getvalue()
    assert text.count(b"\nvt ") + text.startswith(b"vt ") == mesh.n_vertices
    mesh2, uv = load_uv_obj(io.BytesIO(text))
    assert np.array_equal(mesh2.faces, mesh.faces)
    assert np.array_equal(mesh2.boundary_loop, mesh.boundary_loop)
    np.testing.assert_allclose(uv, f, rtol=1e-12, atol=0)
    # 17 significant digits reproduce the floats exactly
    assert np.array_equal(uv, f)


def test_identity_plane_embedding_vt_lines():
    mesh = load_mesh(io.BytesIO(TRIANGLE_OBJ), format="obj")
    buf = io.BytesIO()
    write_parameterized(mesh, mesh.vertices[:, :2], buf)
    vt = [line for line in buf.getvalue().decode().splitlines() if line.startswith("vt ")]
    assert vt == ["vt 0 0", "vt 1 0", "vt 0 1"]


def test_csv_output():
    mesh = fan_disk(5)
    buf = io.BytesIO()
    write_parameterized(mesh, mesh.vertices[:, :2], buf, format="csv")
    rows = buf.getvalue().decode().splitlines()
    assert rows[0] == "index,u,v" and len(rows) == mesh.n_vertices + 1
    uv = load_uv_csv(io.BytesIO(buf.getvalue()), mesh.n_vertices)
    assert np.array_equal(uv, mesh.vertices[:, :2])


def test_write_failure_is_io_error():
    class Broken:
        def write(self, data):
            raise OSError("disk full")

    mesh = fan_disk(4)
    with pytest.raises(IoError):
        write_parameterized(mesh, mesh.vertices[:, :2], Broken())
    closed = io.BytesIO()
    closed.close()
    with pytest.raises(IoError):
        write_parameterized(mesh, mesh.vertices[:, :2], closed)


def test_load_write_load_idempotent():
    mesh = strip(4)
    again = load_mesh(io.BytesIO(_obj(mesh)), format="obj")
    buf = io.BytesIO()
    write_parameterized(again, again.vertices[:, :2], buf)
    third, _ = load_uv_obj(io.BytesIO(buf.getvalue()))
    assert np.array_equal(third.faces, mesh.faces)
    assert np.array_equal(third.boundary_loop, mesh.boundary_loop)


@given(st.integers(3, 40))
def test_fans_are_disks(n):
    mesh = fan_disk(n)
    diag = diagnose(mesh.vertices, mesh.faces)
    assert diag.is_disk
    assert diag.vertex_count - diag.edge_count + diag.face_count == 1
    assert len(mesh.boundary_loop) == n


@given(st.integers(1, 6))
def test_ring_disks_are_disks(rings):
    mesh = flat_disk(rings)
    assert len(mesh.boundary_loop) == 6 * rings
    assert mesh.n_vertices == 1 + 3 * rings * (rings + 1)
