"""Cotangent Laplacian, boundary/interior block split and Schur reduction."""

from dataclasses import dataclass, field
import logging
import os

import numpy as np
import scipy.io
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, onenormest, splu

from .errors import DegenerateFaceError, SingularInteriorError

logger = logging.getLogger(__name__)

SCHUR_MODES = ("explicit", "implicit")


def corner_cotangents(vertices, faces, rtol=1e-14):
    """Cotangent of the interior angle at each face corner, shape (F, 3).

    Column ``c`` holds the angle at ``faces[:, c]``.
    """
    v = np.asarray(vertices, dtype=float)
    p = v[faces]
    cots = np.empty(faces.shape, dtype=float)
    for c in range(3):
        e1 = p[:, (c + 1) % 3] - p[:, c]
        e2 = p[:, (c + 2) % 3] - p[:, c]
        cross = np.cross(e1, e2)
        cross = np.linalg.norm(cross, axis=1) if cross.ndim == 2 else np.abs(cross)
        scale = np.linalg.norm(e1, axis=1) * np.linalg.norm(e2, axis=1)
        bad = cross <= rtol * scale
        if bad.any():
            idx = np.flatnonzero(bad)
            raise DegenerateFaceError(
                f"{len(idx)} zero-area faces, first is face {idx[0]}", faces=idx
            )
        cots[:, c] = np.einsum("ij,ij->i", e1, e2) / cross
    return cots


def build_laplacian(mesh):
    """Cotangent Laplacian as a symmetric CSC matrix.

    Off-diagonals are ``-(cot a + cot b) / 2`` over the angles opposite each
    edge, diagonals the negated row sums, so that ``0.5 * f.T @ L @ f`` is the
    Dirichlet energy of the piecewise-linear map ``f``.  Obtuse angles give
    negative weights; the form stays positive semidefinite.
    """
    faces = mesh.faces
    cots = corner_cotangents(mesh.vertices, faces)
    rows, cols, vals = [], [], []
    for c in range(3):
        # the angle at corner c is opposite the edge (c+1, c+2)
        i = faces[:, (c + 1) % 3]
        j = faces[:, (c + 2) % 3]
        w = 0.5 * cots[:, c]
        rows += [i, j]
        cols += [j, i]
        vals += [w, w]
    n = mesh.n_vertices
    W = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()
    W.sum_duplicates()
    L = sp.diags(np.asarray(W.sum(axis=1)).ravel()) - W
    return sp.csc_matrix(L)


def edge_weights(L):
    """``(i, j, w_ij)`` for the strict upper triangle of ``-L``."""
    U = sp.triu(-L, k=1).tocoo()
    return U.row, U.col, U.data


@dataclass(eq=False)
class BlockSystem:
    """Laplacian split into boundary (Gamma) and interior (Gamma_c) blocks.

    In explicit mode the dense Schur complement ``S`` is formed once; in
    implicit mode every product ``S x`` performs one interior solve.
    """

    L: sp.csc_matrix
    boundary: np.ndarray
    interior: np.ndarray
    L_bb: sp.csc_matrix
    L_bi: sp.csc_matrix
    L_ib: sp.csc_matrix
    L_ii: sp.csc_matrix
    mode: str = "explicit"
    condition_estimate: float = float("nan")
    _lu: object = field(default=None, repr=False)
    _schur: np.ndarray = field(default=None, repr=False)

    @property
    def n_boundary(self):
        return len(self.boundary)

    @property
    def n_interior(self):
        return len(self.interior)

    def factorize(self):
        if self._lu is not None or self.n_interior == 0:
            return
        try:
            self._lu = splu(self.L_ii.tocsc(), permc_spec="MMD_AT_PLUS_A")
        except RuntimeError as exc:
            raise SingularInteriorError(
                f"interior Laplacian block is singular: {exc}", float("inf")
            ) from exc
        self.condition_estimate = _condition_1norm(self.L_ii, self._lu)
        logger.debug("interior block 1-norm condition estimate %.3e", self.condition_estimate)
        if not np.isfinite(self.condition_estimate):
            raise SingularInteriorError(
                "interior Laplacian block is numerically singular", self.condition_estimate
            )

    def _interior_solve(self, rhs):
        self.factorize()
        out = self._lu.solve(np.asarray(rhs, dtype=float))
        if not np.all(np.isfinite(out)):
            raise SingularInteriorError(
                "interior solve produced non-finite values", self.condition_estimate
            )
        return out

    def schur_matrix(self):
        """Dense ``S = L_bb - L_bi L_ii^{-1} L_ib`` (formed on first use)."""
        if self._schur is None:
            self._schur = _explicit_schur(self)
        return self._schur

    def schur_matvec(self, x):
        """``S @ x`` for ``x`` of shape ``(n,)`` or ``(n, k)``."""
        x = np.asarray(x, dtype=float)
        if self.mode == "explicit":
            return self.schur_matrix() @ x
        out = self.L_bb @ x
        if self.n_interior:
            h = self._interior_solve(self.L_ib @ x)
            out = out - self.L_bi @ h
        return out

    def solve_interior(self, f_boundary):
        """Harmonic extension: interior rows solving ``L_ib f_b + L_ii f_i = 0``."""
        f_boundary = np.asarray(f_boundary, dtype=float)
        if self.n_interior == 0:
            return np.zeros((0,) + f_boundary.shape[1:])
        return -self._interior_solve(self.L_ib @ f_boundary)

    def extend(self, f_boundary):
        """Full ``(V, 2)`` embedding with harmonic interior."""
        f_boundary = np.asarray(f_boundary, dtype=float)
        f = np.empty((self.L.shape[0],) + f_boundary.shape[1:])
        f[self.boundary] = f_boundary
        f[self.interior] = self.solve_interior(f_boundary)
        return f


def _condition_1norm(A, lu):
    n = A.shape[0]
    inv = LinearOperator(
        (n, n),
        matvec=lambda x: lu.solve(np.asarray(x, float).ravel()),
        rmatvec=lambda x: lu.solve(np.asarray(x, float).ravel(), trans="T"),
        dtype=float,
    )
    try:
        return float(onenormest(A) * onenormest(inv))
    except (RuntimeError, ValueError, FloatingPointError):
        return float("inf")


def _explicit_schur(system):
    S = system.L_bb.toarray()
    if system.n_interior:
        H = system._interior_solve(system.L_ib.toarray())
        S = S - system.L_bi @ H
    return 0.5 * (S + S.T)


def partition_blocks(L, boundary, mode="explicit"):
    """Split ``L`` by the boundary index list (kept in loop order)."""
    if mode not in SCHUR_MODES:
        raise ValueError(f"mode must be one of {SCHUR_MODES}")
    L = sp.csc_matrix(L)
    n = L.shape[0]
    boundary = np.asarray(boundary, dtype=np.int64)
    if boundary.ndim != 1 or len(np.unique(boundary)) != len(boundary):
        raise ValueError("boundary indices must be a list of distinct integers")
    if len(boundary) and (boundary.min() < 0 or boundary.max() >= n):
        raise ValueError("boundary index out of range")
    mask = np.ones(n, dtype=bool)
    mask[boundary] = False
    interior = np.flatnonzero(mask)
    Lr_b = L[boundary]
    Lr_i = L[interior]
    return BlockSystem(
        L=L,
        boundary=boundary,
        interior=interior,
        L_bb=Lr_b[:, boundary].tocsc(),
        L_bi=Lr_b[:, interior].tocsc(),
        L_ib=Lr_i[:, boundary].tocsc(),
        L_ii=Lr_i[:, interior].tocsc(),
        mode=mode,
    )


def schur_complement(blocks):
    """Schur complement on boundary vectors.

    Explicit mode returns the dense symmetric matrix; implicit mode returns a
    :class:`~scipy.sparse.linalg.LinearOperator` that solves one interior
    system per product.
    """
    blocks.factorize()
    if blocks.mode == "explicit":
        return blocks.schur_matrix()
    n = blocks.n_boundary
    return LinearOperator(
        (n, n), matvec=blocks.schur_matvec, matmat=blocks.schur_matvec,
        rmatvec=blocks.schur_matvec, dtype=float,
    )


def solve_interior(blocks, f_boundary):
    return blocks.solve_interior(f_boundary)


def build_system(mesh, mode="explicit"):
    """Laplacian, block split and factorization for ``mesh`` in one call."""
    system = partition_blocks(build_laplacian(mesh), mesh.boundary_loop, mode)
    system.factorize()
    if mode == "explicit":
        system.schur_matrix()
    return system


def dump_matrices(system, directory):
    """Write ``L.mtx`` and ``S.mtx`` (MatrixMarket coordinate) for debugging."""
    os.makedirs(directory, exist_ok=True)
    scipy.io.mmwrite(os.path.join(directory, "L.mtx"), sp.coo_matrix(system.L))
    scipy.io.mmwrite(os.path.join(directory, "S.mtx"), sp.coo_matrix(system.schur_matrix()))
