"""Nonlinear conjugate gradient on a product of unit circles.

Iterates are ``(n, 2)`` arrays whose rows stay on the unit circle: each step
moves along a tangent direction and retracts by row normalization.  The
search direction uses the Polak-Ribiere-plus coefficient with periodic
restarts; steps come from Armijo backtracking.
"""

from dataclasses import dataclass, field
import csv
import io

import numpy as np

from .disk_energy import project_tangent


@dataclass
class NcgConfig:
    max_iterations: int = 2000
    gradient_tolerance: float = 1e-6
    contraction: float = 0.5
    sufficient_decrease: float = 1e-4
    initial_step: float = 1.0
    max_backtracks: int = 50
    restart_period: int = None  # None means the number of boundary points

    def __post_init__(self):
        if not 0.0 < self.contraction < 1.0:
            raise ValueError("contraction must lie in (0, 1)")
        for name in ("max_iterations", "gradient_tolerance", "sufficient_decrease",
                     "initial_step", "max_backtracks"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.restart_period is not None and self.restart_period <= 0:
            raise ValueError("restart_period must be positive")


@dataclass
class SolveTrace:
    objective: list = field(default_factory=list)
    grad_norm: list = field(default_factory=list)
    step: list = field(default_factory=list)
    restarted: list = field(default_factory=list)
    reason: str = ""

    @property
    def iterations(self):
        return len(self.objective) - 1

    @property
    def converged(self):
        return self.reason == "converged"

    def to_csv(self):
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["iteration", "objective", "grad_norm", "step"])
        for k, (F, g, s) in enumerate(zip(self.objective, self.grad_norm, self.step)):
            w.writerow([k, repr(F), repr(g), repr(s)])
        return out.getvalue()


def _max_row_norm(x):
    return float(np.sqrt(np.max(np.einsum("ij,ij->i", x, x)))) if len(x) else 0.0


def _normalize_rows(x):
    norms = np.linalg.norm(x, axis=1)
    return x / norms[:, None], norms


def _secant_step(grad, f, d, slope, sigma):
    """Zero of the directional derivative along ``d``, from one probe at ``sigma``.

    Falls back to ``2 * sigma`` when the probe shows no positive curvature.
    """
    probe, norms = _normalize_rows(f + sigma * d)
    if norms.min() < 1e-8:
        return sigma
    g1 = project_tangent(np.asarray(grad(probe), dtype=float), probe)
    slope1 = float(np.sum(g1 * project_tangent(d, probe)))
    if slope1 <= slope:
        return 2.0 * sigma
    return sigma * slope / (slope - slope1)


def ncg_direction(gradient_new, gradient_old, direction_old):
    """Polak-Ribiere-plus update ``-g_new + beta d_old``.

    ``beta = max(0, <g_new, g_new - g_old> / <g_old, g_old>)``.  Falls back
    to ``-g_new`` when the candidate is not a descent direction.
    """
    g_new = np.asarray(gradient_new, dtype=float)
    g_old = np.asarray(gradient_old, dtype=float)
    denom = float(np.sum(g_old * g_old))
    beta = 0.0
    if denom > 0.0:
        beta = max(0.0, float(np.sum(g_new * (g_new - g_old))) / denom)
    d = -g_new + beta * np.asarray(direction_old, dtype=float)
    if float(np.sum(d * g_new)) >= 0.0:
        return -g_new
    return d


def minimize_on_circles(fun, grad, f0, config=None):
    """Minimize ``fun`` over ``(n, 2)`` arrays with unit rows.

    Parameters
    ----------
    fun, grad : callable
        Objective value and (Euclidean or tangent) gradient.  The gradient is
        projected onto the circle tangents here, so either form is accepted.
    f0 : (n, 2) array
        Start; rows must be unit to within 1e-12 (they are renormalized).
    config : NcgConfig, optional

    Returns
    -------
    f : (n, 2) array
        Best iterate found; every row is unit.
    trace : SolveTrace
        ``reason`` is ``"converged"``, ``"max_iterations"`` or
        ``"line_search_failed"``.  A failed line search returns the last
        accepted iterate instead of raising.
    """
    cfg = config or NcgConfig()
    f0 = np.asarray(f0, dtype=float)
    norms = np.linalg.norm(f0, axis=1)
    if np.max(np.abs(norms - 1.0)) > 1e-12:
        raise ValueError("start rows must lie on the unit circle")
    f = f0 / norms[:, None]
    n = len(f)
    period = cfg.restart_period or max(n, 1)

    F = float(fun(f))
    g = project_tangent(np.asarray(grad(f), dtype=float), f)
    gnorm = _max_row_norm(g)
    trace = SolveTrace([F], [gnorm], [0.0], [True])
    d = -g
    prev_alpha, prev_slope = None, None

    for k in range(cfg.max_iterations):
        if gnorm <= cfg.gradient_tolerance:
            trace.reason = "converged"
            return f, trace
        slope = float(np.sum(g * d))
        if slope >= 0.0:
            d = -g
            slope = -float(np.sum(g * g))
        if prev_alpha is None:
            alpha = cfg.initial_step
        else:
            alpha = 1.01 * prev_alpha * prev_slope / slope
        # no single point moves more than about one radian per trial
        cap = 1.0 / max(_max_row_norm(d), 1e-300)
        alpha = min(alpha, cap)
        alpha = min(_secant_step(grad, f, d, slope, alpha), cap)

        accepted = False
        for _ in range(cfg.max_backtracks):
            trial = f + alpha * d
            f_new, trial_norms = _normalize_rows(trial)
            if trial_norms.min() < 1e-8:
                alpha *= 0.5
                continue
            F_new = float(fun(f_new))
            if F_new <= F + cfg.sufficient_decrease * alpha * slope:
                accepted = True
                break
            alpha *= cfg.contraction
        if not accepted:
            trace.reason = "line_search_failed"
            return f, trace

        g_new = project_tangent(np.asarray(grad(f_new), dtype=float), f_new)
        restart = (k + 1) % period == 0
        if restart:
            d_new = -g_new
        else:
            d_new = ncg_direction(
                g_new, project_tangent(g, f_new), project_tangent(d, f_new)
            )
            restart = bool(np.array_equal(d_new, -g_new))
        prev_alpha, prev_slope = alpha, slope
        f, F, g, d = f_new, F_new, g_new, d_new
        gnorm = _max_row_norm(g)
        trace.objective.append(F)
        trace.grad_norm.append(gnorm)
        trace.step.append(alpha)
        trace.restarted.append(restart)

    trace.reason = "converged" if gnorm <= cfg.gradient_tolerance else "max_iterations"
    return f, trace
