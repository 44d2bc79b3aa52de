"""Quality measures of a planar embedding: angle distortion, Beltrami
coefficients, the one-to-one distance check and the aggregated report."""

from dataclasses import asdict, dataclass, field
import csv
import io
import json
import warnings

import numpy as np
from scipy.spatial import cKDTree

from .disk_energy import area_deviation, conformal_energy, polygon_area
from .errors import ConformalPole, DegenerateFaceError, DegenerateImageFace


def corner_angles(points, faces):
    """Unsigned interior angle at each corner, shape (F, 3); works in 2D or 3D."""
    p = np.asarray(points, dtype=float)[faces]
    out = np.empty(faces.shape)
    for c in range(3):
        e1 = p[:, (c + 1) % 3] - p[:, c]
        e2 = p[:, (c + 2) % 3] - p[:, c]
        cross = np.cross(e1, e2)
        cross = np.linalg.norm(cross, axis=1) if cross.ndim == 2 else np.abs(cross)
        out[:, c] = np.arctan2(cross, np.einsum("ij,ij->i", e1, e2))
    return out


def signed_corner_angles(f, faces):
    """Corner angles of the image measured counter-clockwise; negative on flipped faces."""
    p = np.asarray(f, dtype=float)[faces]
    out = np.empty(faces.shape)
    for c in range(3):
        e1 = p[:, (c + 1) % 3] - p[:, c]
        e2 = p[:, (c + 2) % 3] - p[:, c]
        cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        out[:, c] = np.arctan2(cross, np.einsum("ij,ij->i", e1, e2))
    return out


@dataclass
class AngleErrors:
    values: np.ndarray  # (3F,), NaN at excluded corners
    mean: float
    std: float
    excluded_faces: np.ndarray


def angle_errors(mesh, f, rtol=1e-14):
    """Relative angle change ``|theta_v - theta_f| / theta_v`` at all 3F corners.

    Image angles are signed, so a flipped face contributes errors above 1.
    Zero-area image faces are excluded from the statistics with a
    :class:`DegenerateImageFace` warning.
    """
    f = np.asarray(getattr(f, "f", f), dtype=float)
    faces = mesh.faces
    src = corner_angles(mesh.vertices, faces)
    bad_src = np.flatnonzero((src <= rtol).any(axis=1) | (src >= np.pi - rtol).any(axis=1))
    if len(bad_src):
        raise DegenerateFaceError(
            f"{len(bad_src)} degenerate source faces, first is face {bad_src[0]}", bad_src
        )
    img = signed_corner_angles(f, faces)
    p = f[faces]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    scale = np.maximum(np.einsum("ij,ij->i", e1, e1), np.einsum("ij,ij->i", e2, e2))
    degenerate = np.abs(cross) <= rtol * scale
    errors = np.abs(src - img) / src
    if degenerate.any():
        idx = np.flatnonzero(degenerate)
        warnings.warn(
            f"{len(idx)} zero-area image faces excluded, first is face {idx[0]}",
            DegenerateImageFace, stacklevel=2,
        )
        errors[degenerate] = np.nan
    else:
        idx = np.zeros(0, dtype=np.int64)
    values = errors.ravel()
    kept = values[~np.isnan(values)]
    mean = float(np.mean(kept)) if len(kept) else float("nan")
    std = float(np.std(kept)) if len(kept) else float("nan")
    return AngleErrors(values, mean, std, idx)


def _local_frames(vertices, faces):
    # Isometric flattening of every source triangle: corner 0 at the origin,
    # edge 0->1 along +x.
    p = np.asarray(vertices, dtype=float)[faces]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    l1 = np.linalg.norm(e1, axis=1)
    x_axis = e1 / l1[:, None]
    normal = np.cross(e1, e2)
    y_axis = np.cross(normal / np.linalg.norm(normal, axis=1)[:, None], x_axis)
    q = np.zeros((len(faces), 3, 2))
    q[:, 1, 0] = l1
    q[:, 2, 0] = np.einsum("ij,ij->i", e2, x_axis)
    q[:, 2, 1] = np.einsum("ij,ij->i", e2, y_axis)
    return q


def beltrami_coefficients(mesh, f, pole_tol=1e-14):
    """Modulus of the Beltrami coefficient of every face map.

    The source triangle is flattened isometrically and the affine map onto
    the image triangle is split into ``f_z`` and ``f_zbar``; the result is
    ``|f_zbar| / |f_z|``.  Faces with ``|f_z| < pole_tol`` (e.g. reflections)
    report ``inf`` with a :class:`ConformalPole` warning.
    """
    f = np.asarray(getattr(f, "f", f), dtype=float)
    faces = mesh.faces
    q = _local_frames(mesh.vertices, faces)
    img = f[faces]
    # Jacobian J = [img1 - img0, img2 - img0] @ inv([q1 - q0, q2 - q0])
    P = np.stack([q[:, 1] - q[:, 0], q[:, 2] - q[:, 0]], axis=2)
    Q = np.stack([img[:, 1] - img[:, 0], img[:, 2] - img[:, 0]], axis=2)
    J = Q @ np.linalg.inv(P)
    a, b, c, d = J[:, 0, 0], J[:, 0, 1], J[:, 1, 0], J[:, 1, 1]
    fz = 0.5 * np.hypot(a + d, c - b)
    fzbar = 0.5 * np.hypot(a - d, c + b)
    pole = fz < pole_tol * np.maximum(1.0, np.abs(J).reshape(len(J), -1).max(axis=1))
    out = np.empty(len(faces))
    out[~pole] = fzbar[~pole] / fz[~pole]
    out[pole] = np.inf
    if pole.any():
        warnings.warn(
            f"{int(pole.sum())} faces with vanishing f_z reported as inf",
            ConformalPole, stacklevel=2,
        )
    return out


def bijectivity_distances(mesh, f):
    """For each vertex, the 3D distance to the vertex whose image is nearest its own.

    Large values mean far-apart source points landed next to each other,
    i.e. the embedding overlaps itself.
    """
    f = np.asarray(getattr(f, "f", f), dtype=float)
    if len(f) < 2:
        raise ValueError("need at least two vertices")
    tree = cKDTree(f)
    dist, idx = tree.query(f, k=2)
    nearest = idx[:, 1].copy()
    # a coincident image may return the vertex itself second
    self_hit = nearest == np.arange(len(f))
    nearest[self_hit] = idx[self_hit, 0]
    return np.linalg.norm(mesh.vertices - mesh.vertices[nearest], axis=1)


@dataclass
class QualityReport:
    E_Cd: float
    eps_A_signed: float
    polygon_area: float
    angle_error_mean: float
    angle_error_std: float
    beltrami_mean: float
    d_max: float
    wall_seconds: float
    mu: float = None
    repair_stalled: bool = False
    folding: dict = field(default_factory=dict)
    angle_errors: list = field(default_factory=list)
    beltrami: list = field(default_factory=list)
    d_list: list = field(default_factory=list)
    tuning: list = field(default_factory=list)
    manifest: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    def to_json(self, indent=None):
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))


def build_report(mesh, f, system, timings=None, mu=None, folding=None):
    """Aggregate every measure for ``f`` into a :class:`QualityReport`.

    ``timings`` may carry ``{"solve": seconds}``.  ``folding`` defaults to a
    fresh :func:`~sdmce.unfolding.classify_folding`.
    """
    from .unfolding import classify_folding

    emb_f = np.asarray(getattr(f, "f", f), dtype=float)
    f_b = emb_f[mesh.boundary_loop]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", (ConformalPole, DegenerateImageFace))
        ang = angle_errors(mesh, emb_f)
        mu_abs = beltrami_coefficients(mesh, emb_f)
    finite = mu_abs[np.isfinite(mu_abs)]
    d = bijectivity_distances(mesh, emb_f)
    if folding is None:
        folding = classify_folding(mesh, emb_f)
    return QualityReport(
        E_Cd=conformal_energy(system, emb_f),
        eps_A_signed=area_deviation(f_b),
        polygon_area=polygon_area(f_b),
        angle_error_mean=ang.mean,
        angle_error_std=ang.std,
        beltrami_mean=float(np.mean(finite)) if len(finite) else float("nan"),
        d_max=float(d.max()),
        wall_seconds=float((timings or {}).get("solve", 0.0)),
        mu=None if mu is None else float(mu),
        folding=folding.to_dict(),
        angle_errors=ang.values.tolist(),
        beltrami=mu_abs.tolist(),
        d_list=d.tolist(),
    )


def corners_csv(mesh, report):
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["face", "corner", "vertex", "angle_error"])
    for k, err in enumerate(report.angle_errors):
        face, corner = divmod(k, 3)
        w.writerow([face, corner, int(mesh.faces[face, corner]), repr(err)])
    return out.getvalue()


def faces_csv(report):
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["face", "beltrami_abs"])
    for k, b in enumerate(report.beltrami):
        w.writerow([k, repr(b)])
    return out.getvalue()
