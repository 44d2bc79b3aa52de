"""Energies, areas and penalties of disk embeddings, with gradients.

Boundary data ``f_b`` is an ``(n, 2)`` array of points on the unit circle in
boundary-loop order.  The polygon area of the boundary is

    A(f) = 1/4 <f_b, D2 f_b Theta>,

with ``D2`` the cyclic central difference ``(D2 y)_i = y_{i+1} - y_{i-1}`` and
``Theta`` the quarter-turn ``[[0, -1], [1, 0]]``.  Its gradient is
``1/2 D2 f_b Theta``.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

TRUE_AREA = "subtract_true_area"
POLYGON_AREA = "subtract_polygon_area"
VARIANTS = (TRUE_AREA, POLYGON_AREA)

THETA = np.array([[0.0, -1.0], [1.0, 0.0]])
THETA.setflags(write=False)


@dataclass(frozen=True)
class DiskOperators:
    """Cyclic shift ``D1`` and central difference ``D2`` on ``n`` boundary points."""

    n: int

    @property
    def D1(self):
        # columns e_2, ..., e_n, e_1: row i picks entry i-1
        rows = np.arange(self.n)
        cols = (rows - 1) % self.n
        return sp.csr_matrix((np.ones(self.n), (rows, cols)), shape=(self.n, self.n))

    @property
    def D2(self):
        rows = np.arange(self.n)
        data = np.concatenate([np.ones(self.n), -np.ones(self.n)])
        return sp.csr_matrix(
            (data, (np.concatenate([rows, rows]),
                    np.concatenate([(rows + 1) % self.n, (rows - 1) % self.n]))),
            shape=(self.n, self.n),
        )

    Theta = THETA

    @staticmethod
    def shift(x):
        """``D1 @ x`` without forming the matrix."""
        return np.roll(x, 1, axis=0)

    @staticmethod
    def diff(x):
        """``D2 @ x`` without forming the matrix."""
        return np.roll(x, -1, axis=0) - np.roll(x, 1, axis=0)


@dataclass
class PenaltyState:
    """Area-penalty weight ``mu``, boundary-folding weights ``alpha`` and objective variant."""

    mu: float = 0.0
    alpha: np.ndarray = None
    variant: str = TRUE_AREA

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("mu must be nonnegative")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.alpha is not None:
            self.alpha = np.asarray(self.alpha, dtype=float)
            if (self.alpha < 0).any():
                raise ValueError("alpha must be nonnegative")


@dataclass
class DiskEmbedding:
    """Planar image ``f`` of every vertex; boundary rows lie on the unit circle."""

    f: np.ndarray
    boundary: np.ndarray = field(repr=False)

    @property
    def f_boundary(self):
        return self.f[self.boundary]

    @property
    def t(self):
        """Central angles of the boundary points in ``[0, 2*pi)``."""
        fb = self.f_boundary
        return np.mod(np.arctan2(fb[:, 1], fb[:, 0]), 2.0 * np.pi)

    def max_radius_error(self):
        return float(np.max(np.abs(np.linalg.norm(self.f_boundary, axis=1) - 1.0)))

    def copy(self):
        return DiskEmbedding(self.f.copy(), self.boundary)


def circle_points(t):
    t = np.asarray(t, dtype=float)
    return np.column_stack([np.cos(t), np.sin(t)])


def embedding_from_angles(system, t):
    """Boundary on the unit circle at angles ``t``, interior harmonic."""
    return DiskEmbedding(system.extend(circle_points(t)), system.boundary)


def polygon_area(f_b, ops=None):
    """Signed area of the boundary polygon, ``1/2 sum sin(t_i - t_{i-1})`` on the circle."""
    f_b = np.asarray(f_b, dtype=float)
    return 0.25 * float(np.sum(f_b * (DiskOperators.diff(f_b) @ THETA)))


def area_gradient(f_b):
    return 0.5 * (DiskOperators.diff(f_b) @ THETA)


def sector_terms(f_b):
    """Signed pair areas ``sigma_i = 1/2 sin(t_i - t_{i-1})``; negative means folded."""
    f_b = np.asarray(f_b, dtype=float)
    prev = DiskOperators.shift(f_b)
    return 0.5 * (prev[:, 0] * f_b[:, 1] - f_b[:, 0] * prev[:, 1])


def face_signed_areas(f, faces):
    """Algebraic area of every image triangle (positive when counter-clockwise)."""
    p = np.asarray(f, dtype=float)[faces]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def triangulation_area(f, faces, signed=False):
    """Total image area; absolute per-face areas unless ``signed``."""
    a = face_signed_areas(f, faces)
    return float(a.sum() if signed else np.abs(a).sum())


def dirichlet_energy(system, f):
    """``1/2 <L f, f>`` over all vertices."""
    f = np.asarray(getattr(f, "f", f), dtype=float)
    return 0.5 * float(np.sum(f * (system.L @ f)))


def conformal_energy(system, f):
    """Disk conformal energy ``1/2 <L f, f> - pi``.

    For a harmonic interior this equals ``1/2 <S f_b, f_b> - pi``.  The full
    form is used so the value stays meaningful after interior vertices are
    moved by unfolding repairs.  Negative values flag deficient coverage.
    """
    return dirichlet_energy(system, f) - np.pi


def area_deviation(f_b):
    """Signed deviation ``pi - A(f)``; negative means the disk is over-covered."""
    return np.pi - polygon_area(f_b)


def _hinge(f_b, alpha):
    if alpha is None:
        return 0.0, None
    sigma = sector_terms(f_b)
    active = sigma < 0.0
    return float(np.sum(alpha[active] * -sigma[active])), active


def _value(Sf, f_b, penalty):
    area = polygon_area(f_b)
    val = 0.5 * float(np.sum(Sf * f_b))
    val -= np.pi if penalty.variant == TRUE_AREA else area
    val += 0.5 * penalty.mu * (np.pi - area) ** 2
    val += _hinge(f_b, penalty.alpha)[0]
    return val


def _euclidean_gradient(Sf, f_b, penalty):
    area = polygon_area(f_b)
    dA = area_gradient(f_b)
    coeff = -penalty.mu * (np.pi - area)
    if penalty.variant == POLYGON_AREA:
        coeff -= 1.0
    G = Sf + coeff * dA
    if penalty.alpha is not None:
        _, active = _hinge(f_b, penalty.alpha)
        if active.any():
            # d(-sigma_i) wrt f_i is 1/2 (y_{i-1}, -x_{i-1}); wrt f_{i-1} is 1/2 (-y_i, x_i)
            prev = DiskOperators.shift(f_b)
            w = np.where(active, penalty.alpha, 0.0)[:, None]
            G = G + 0.5 * w * np.column_stack([prev[:, 1], -prev[:, 0]])
            own = 0.5 * w * np.column_stack([-f_b[:, 1], f_b[:, 0]])
            G = G + np.roll(own, -1, axis=0)
    return G


def project_tangent(G, f_b):
    """Remove the radial component of each row: ``G_i - (G_i . f_i) f_i``."""
    radial = np.einsum("ij,ij->i", G, f_b)
    return G - radial[:, None] * f_b


def penalized_objective(f_b, system, penalty, ops=None):
    """Boundary objective

        1/2 <S f_b, f_b> - pi + mu/2 (pi - A)^2 + sum_i alpha_i max(-sigma_i, 0),

    with ``- A`` in place of ``- pi`` for the polygon-area variant.
    """
    f_b = np.asarray(f_b, dtype=float)
    return _value(system.schur_matvec(f_b), f_b, penalty)


def euclidean_gradient(f_b, system, penalty, ops=None):
    f_b = np.asarray(f_b, dtype=float)
    return _euclidean_gradient(system.schur_matvec(f_b), f_b, penalty)


def objective_gradient(f_b, system, penalty, ops=None):
    """Gradient of :func:`penalized_objective` projected onto the circle tangents.

    At hinge kinks (``sigma_i == 0``) the one-sided zero subgradient is used.
    """
    f_b = np.asarray(f_b, dtype=float)
    return project_tangent(euclidean_gradient(f_b, system, penalty), f_b)


def kkt_residual(f, system, penalty, ops=None):
    """Stationarity residual of the circle-constrained problem.

    Returns ``(residual, lam)`` where ``lam_i = G_i . f_i`` estimates the
    multipliers and ``residual = max_i ||G_i - lam_i f_i||``.
    """
    f_b = np.asarray(getattr(f, "f_boundary", f), dtype=float)
    G = euclidean_gradient(f_b, system, penalty)
    lam = np.einsum("ij,ij->i", G, f_b)
    res = G - lam[:, None] * f_b
    return float(np.max(np.linalg.norm(res, axis=1))), lam


def make_objective(system, penalty):
    """``(fun, grad)`` pair for the optimizer, sharing one ``S f`` product per point."""
    cache = {"x": None, "Sf": None}

    def schur(f_b):
        if cache["x"] is None or not np.array_equal(cache["x"], f_b):
            cache["x"] = np.array(f_b, copy=True)
            cache["Sf"] = system.schur_matvec(f_b)
        return cache["Sf"]

    def fun(f_b):
        return _value(schur(f_b), f_b, penalty)

    def grad(f_b):
        return project_tangent(_euclidean_gradient(schur(f_b), f_b, penalty), f_b)

    return fun, grad
