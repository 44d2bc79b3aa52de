from types import SimpleNamespace
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sdmce.errors import ConformalPole, DegenerateFaceError, DegenerateImageFace
from sdmce.fixtures import fan_disk, flat_disk, hemisphere, strip
from sdmce.laplacian import build_system
from sdmce.mesh_io import make_mesh
from sdmce.metrics import (
    QualityReport, angle_errors, beltrami_coefficients, bijectivity_distances, build_report,
    corner_angles, corners_csv, faces_csv, signed_corner_angles,
)
from sdmce.pipeline import Parameterizer

EQUILATERAL = make_mesh([[0, 0, 0], [1, 0, 0], [0.5, np.sqrt(3) / 2, 0]], [[0, 1, 2]])


def _rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def test_corner_angles_sum_to_pi():
    mesh = hemisphere(4)
    np.testing.assert_allclose(corner_angles(mesh.vertices, mesh.faces).sum(axis=1), np.pi,
                               atol=1e-12)
    f = mesh.vertices[:, :2]
    np.testing.assert_allclose(signed_corner_angles(f, mesh.faces).sum(axis=1), np.pi,
                               atol=1e-12)


def test_identity_gives_zero_error():
    mesh = flat_disk(3)
    err = angle_errors(mesh, mesh.vertices[:, :2])
    assert err.mean < 1e-14 and np.nanmax(err.values) < 1e-13
    assert np.nanmax(beltrami_coefficients(mesh, mesh.vertices[:, :2])) < 1e-13


def test_equilateral_to_right_angle():
    f = np.array([[0, 0], [1, 0], [0, 1.0]])
    err = angle_errors(EQUILATERAL, f).values
    assert err[0] == pytest.approx(0.5, abs=1e-14)


def test_flipped_face_error_above_one():
    f = np.array([[0, 0], [0, 1], [1, 0.0]])
    assert angle_errors(EQUILATERAL, f).values.min() > 1


def test_degenerate_source_rejected():
    mesh = make_mesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])
    v = mesh.vertices.copy()
    v[2] = [2, 0, 0]
    bad = SimpleNamespace(vertices=v, faces=mesh.faces)
    with pytest.raises(DegenerateFaceError):
        angle_errors(bad, v[:, :2])


def test_degenerate_image_excluded_with_warning():
    mesh = fan_disk(6)
    f = mesh.vertices[:, :2].copy()
    f[0] = 0.5 * (f[1] + f[2])
    with pytest.warns(DegenerateImageFace):
        err = angle_errors(mesh, f)
    assert list(err.excluded_faces) == [0]
    assert np.isnan(err.values[:3]).all() and np.isfinite(err.mean)


def test_beltrami_similarity_and_stretch():
    tri = EQUILATERAL.vertices[:, :2]
    sim = 2.5 * tri @ _rotation(0.7).T + [3, -1]
    assert beltrami_coefficients(EQUILATERAL, sim)[0] < 1e-14
    stretched = tri * [2.0, 1.0]
    assert beltrami_coefficients(EQUILATERAL, stretched)[0] == pytest.approx(1 / 3, abs=1e-14)


def test_beltrami_reflection_is_pole():
    tri = EQUILATERAL.vertices[:, :2]
    with pytest.warns(ConformalPole):
        mu = beltrami_coefficients(EQUILATERAL, tri * [1.0, -1.0])
    assert mu[0] == np.inf


def test_beltrami_on_tilted_source():
    # a source triangle in a tilted plane, mapped onto its own shape in 2D
    mesh = make_mesh([[0, 0, 0], [1, 0, 1], [0, 2, 0]], [[0, 1, 2]])
    f = np.array([[0, 0], [np.sqrt(2), 0], [0, 2.0]])
    assert beltrami_coefficients(mesh, f)[0] < 1e-14
    assert angle_errors(mesh, f).mean < 1e-14


@given(st.floats(0, 2 * np.pi), st.floats(0.1, 10), st.integers(0, 2))
def test_invariance_under_rotation_and_cyclic_relabel(theta, scale, shift):
    mesh = hemisphere(3)
    rng = np.random.default_rng(5)
    f = mesh.vertices[:, :2] + 0.02 * rng.normal(size=(mesh.n_vertices, 2))
    base_err = angle_errors(mesh, f).values.reshape(-1, 3)
    base_mu = beltrami_coefficients(mesh, f)
    g = scale * f @ _rotation(theta).T
    np.testing.assert_allclose(angle_errors(mesh, g).values.reshape(-1, 3), base_err,
                               atol=1e-10)
    np.testing.assert_allclose(beltrami_coefficients(mesh, g), base_mu, atol=1e-10)
    rolled = make_mesh(mesh.vertices, np.roll(mesh.faces, shift, axis=1))
    np.testing.assert_allclose(angle_errors(rolled, f).values.reshape(-1, 3),
                               np.roll(base_err, shift, axis=1), atol=1e-12)
    np.testing.assert_allclose(beltrami_coefficients(rolled, f), base_mu, atol=1e-12)


def test_bijectivity_identity():
    mesh = flat_disk(3)
    d = bijectivity_distances(mesh, mesh.vertices[:, :2])
    edges = mesh.vertices[mesh.edges[:, 0]] - mesh.vertices[mesh.edges[:, 1]]
    assert d.max() <= np.linalg.norm(edges, axis=1).max() + 1e-12


def test_bijectivity_single_edge():
    mesh = SimpleNamespace(vertices=np.array([[0, 0, 0], [3, 4, 0.0]]))
    np.testing.assert_allclose(bijectivity_distances(mesh, [[0, 0], [1, 0]]), [5, 5])


def test_bijectivity_double_cover():
    mesh = strip(8, width=8.0)
    f = mesh.vertices[:, :2].copy()
    # fold the right half back over the left half
    f[:, 0] = np.where(f[:, 0] > 4, 8 - f[:, 0], f[:, 0])
    f[:, 1] += 1e-3 * (mesh.vertices[:, 0] > 4)
    d = bijectivity_distances(mesh, f)
    assert d.max() >= 6.0
    assert bijectivity_distances(mesh, mesh.vertices[:, :2]).max() == pytest.approx(1.0)


@pytest.fixture(scope="module")
def fan12_run():
    mesh = fan_disk(12)
    return mesh, Parameterizer(mesh).run(mu=10)


def test_fan_report(fan12_run):
    _, result = fan12_run
    rep = result.report
    expected = np.pi - 6 * np.sin(np.pi / 6)
    assert abs(rep.eps_A_signed - expected) <= 1e-8
    assert rep.E_Cd < 0
    assert rep.folding["totals"]["triangles"] == 0
    assert rep.angle_error_mean < 1e-8 and rep.mu == 10.0


def test_collapse_report():
    mesh = flat_disk(2)
    system = build_system(mesh)
    f = np.tile([1.0, 0.0], (mesh.n_vertices, 1))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        rep = build_report(mesh, f, system)
    assert rep.E_Cd == pytest.approx(-np.pi, abs=1e-14)
    assert rep.eps_A_signed == np.pi
    assert np.isnan(rep.angle_error_mean)


def test_report_json_round_trip(fan12_run):
    mesh, result = fan12_run
    rep = result.report
    again = QualityReport.from_json(rep.to_json())
    assert again.to_dict() == rep.to_dict()
    assert again.E_Cd == rep.E_Cd and again.angle_errors == rep.angle_errors


def test_csv_exports(fan12_run):
    mesh, result = fan12_run
    corners = corners_csv(mesh, result.report).splitlines()
    assert corners[0] == "face,corner,vertex,angle_error" and len(corners) == 3 * 12 + 1
    faces = faces_csv(result.report).splitlines()
    assert faces[0] == "face,beltrami_abs" and len(faces) == 13
