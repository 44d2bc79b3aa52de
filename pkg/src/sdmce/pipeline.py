"""End-to-end disk parameterization: boundary solve, interior extension,
optional ``mu`` tuning and folding repair."""

from dataclasses import dataclass, field
import logging
import time
import warnings

import numpy as np

from .adaptive_mu import BoundaryInit, Probe, generate_initial_boundary, tune_mu
from .disk_energy import (
    TRUE_AREA, DiskEmbedding, PenaltyState, area_deviation, circle_points,
    conformal_energy, make_objective,
)
from .errors import ConformalPole, DegenerateImageFace, RepairStall
from .laplacian import build_system
from .metrics import angle_errors, build_report
from .optimizer import NcgConfig, minimize_on_circles
from .unfolding import repair_all

logger = logging.getLogger(__name__)


@dataclass
class SolveResult:
    embedding: DiskEmbedding
    trace: object
    penalty: PenaltyState
    seconds: float


@dataclass
class PipelineResult:
    embedding: DiskEmbedding
    report: object
    mu: float
    tune: object = None
    folding_history: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    stalled: bool = False
    traces: list = field(default_factory=list)


def _boundary_start(start, n):
    start = np.asarray(start, dtype=float)
    if start.ndim == 1:
        if len(start) != n:
            raise ValueError(f"expected {n} start angles, got {len(start)}")
        return circle_points(start)
    if start.shape != (n, 2):
        raise ValueError(f"expected a ({n}, 2) start boundary")
    return start / np.linalg.norm(start, axis=1)[:, None]


def _mean_angle_error(mesh, f):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", (DegenerateImageFace, ConformalPole))
        return angle_errors(mesh, f).mean


class Parameterizer:
    """Fixed mesh, factorized Laplacian and solver settings.

    Parameters
    ----------
    mesh : TriMesh
    variant : str
        Objective variant, see :class:`~sdmce.disk_energy.PenaltyState`.
    ncg : NcgConfig, optional
    schur : {"explicit", "implicit"}
    """

    def __init__(self, mesh, variant=TRUE_AREA, ncg=None, schur="explicit"):
        t = time.perf_counter()
        self.mesh = mesh
        self.variant = variant
        self.ncg = ncg or NcgConfig()
        self.system = build_system(mesh, schur)
        self.setup_seconds = time.perf_counter() - t
        self.traces = []

    @property
    def n_boundary(self):
        return len(self.mesh.boundary_loop)

    def solve(self, mu, start, alpha=None):
        """Minimize the penalized objective from ``start`` (angles or unit rows)
        and extend harmonically to the interior."""
        t = time.perf_counter()
        penalty = PenaltyState(mu=mu, alpha=alpha, variant=self.variant)
        fun, grad = make_objective(self.system, penalty)
        f_b, trace = minimize_on_circles(fun, grad, _boundary_start(start, self.n_boundary),
                                         self.ncg)
        if not trace.converged:
            logger.warning("mu=%g: solve stopped (%s) at gradient norm %.3e",
                           mu, trace.reason, trace.grad_norm[-1])
        emb = DiskEmbedding(self.system.extend(f_b), self.system.boundary)
        self.traces.append(trace)
        return SolveResult(emb, trace, penalty, time.perf_counter() - t)

    def probe(self, mu, start):
        """Fixed-``mu`` solve summarized for :func:`~sdmce.adaptive_mu.tune_mu`."""
        res = self.solve(mu, start)
        f = res.embedding.f
        return Probe(
            mu=float(mu),
            energy=conformal_energy(self.system, f),
            area_deviation=area_deviation(res.embedding.f_boundary),
            angle_error=_mean_angle_error(self.mesh, f),
            angles=res.embedding.t,
            embedding=res.embedding,
            seconds=res.seconds,
        )

    def resolver(self, mu):
        """``solver(alpha, f_b_start)`` for the boundary-folding repair at fixed ``mu``."""

        def solver(alpha, f_b):
            return self.solve(mu, f_b, alpha=np.array(alpha, dtype=float)).embedding

        return solver

    def run(self, mu="auto", init=None, tau=1e-4, repair=True, delta=None):
        """Full pipeline.

        Parameters
        ----------
        mu : "auto" or float
            ``"auto"`` tunes the penalty weight; a number fixes it.
        init : BoundaryInit or array_like, optional
            Start recipe or explicit angles; equal angles by default.
        tau : float
        repair : bool
            Run the folding repair after the solve.

        Returns
        -------
        PipelineResult
            ``stalled`` is set when repair gave up; the embedding is then the
            partially repaired one.
        """
        n = self.n_boundary
        if init is None:
            init = BoundaryInit(n=n)
        t0 = generate_initial_boundary(init) if isinstance(init, BoundaryInit) else init
        timings = {"setup": self.setup_seconds}
        self.traces = []

        t = time.perf_counter()
        tune = None
        if mu == "auto":
            tune = tune_mu(self.probe, t0, tau=tau)
            mu_star, emb = tune.mu, tune.embedding
        else:
            mu_star = float(mu)
            emb = self.solve(mu_star, t0).embedding
        timings["solve"] = time.perf_counter() - t

        history, stalled = [], False
        t = time.perf_counter()
        if repair:
            state = PenaltyState(mu=mu_star, variant=self.variant)
            try:
                emb, history = repair_all(self.mesh, emb, state, self.resolver(mu_star),
                                          delta=delta, history=history)
            except RepairStall as exc:
                logger.error("folding repair stalled: %s", exc)
                stalled = True
                if exc.embedding is not None:
                    f = getattr(exc.embedding, "f", exc.embedding)
                    emb = DiskEmbedding(np.asarray(f, dtype=float), self.system.boundary)
        timings["repair"] = time.perf_counter() - t

        report = build_report(self.mesh, emb, self.system, timings=timings, mu=mu_star)
        report.repair_stalled = stalled
        if tune is not None:
            report.tuning = [
                {"phase": p.phase, "mu": p.mu, "E_Cd": p.energy, "eps_A": p.area_deviation,
                 "eps_theta": p.angle_error}
                for p in tune.history
            ]
        return PipelineResult(emb, report, mu_star, tune, history, timings, stalled,
                              list(self.traces))


def parameterize(mesh, mu="auto", init=None, tau=1e-4, repair=True, variant=TRUE_AREA,
                 ncg=None, schur="explicit"):
    """One-call convenience wrapper around :class:`Parameterizer`."""
    return Parameterizer(mesh, variant=variant, ncg=ncg, schur=schur).run(
        mu=mu, init=init, tau=tau, repair=repair
    )
