"""Adaptive choice of the area-penalty weight ``mu`` and initial boundaries.

The tuner treats the boundary solve as a black box ``solver(mu, t_start)``
returning a :class:`Probe`.  It escalates ``mu`` until the solution neither
under-covers the disk (energy gate) nor over-covers it (area gate), takes one
more step up, and then refines downward or upward depending on which of the
two candidates has the smaller mean angle error.
"""

from dataclasses import dataclass, field
import csv
import io
import logging
import math

import numpy as np

from .errors import EscalationOverflow

logger = logging.getLogger(__name__)

EQUAL_ANGLES = "equal_angles"
SCALED_ARC = "scaled_arc"
RANDOM_ORDER = "random_order"
INIT_KINDS = (EQUAL_ANGLES, SCALED_ARC, RANDOM_ORDER)


@dataclass(frozen=True)
class BoundaryInit:
    """Recipe for the starting boundary angles.

    ``rho`` is used by ``scaled_arc`` (the points cover an arc of length
    ``2 pi / rho``); ``seed`` by ``random_order``.
    """

    kind: str = EQUAL_ANGLES
    n: int = 3
    rho: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in INIT_KINDS:
            raise ValueError(f"kind must be one of {INIT_KINDS}")
        if self.n < 3:
            raise ValueError("need at least 3 boundary points")
        if not self.rho > 0:
            raise ValueError("rho must be positive")


def generate_initial_boundary(init):
    """Central angles in ``[0, 2 pi)`` for the boundary points, in loop order."""
    n = init.n
    equal = 2.0 * np.pi * np.arange(n) / n
    if init.kind == EQUAL_ANGLES:
        return equal
    if init.kind == SCALED_ARC:
        return np.mod(equal / init.rho, 2.0 * np.pi)
    rng = np.random.default_rng(init.seed)
    return equal[rng.permutation(n)]


def parse_init(text, n, seed=None):
    """Read ``equal``, ``arc:RHO`` or ``random:SEED`` into a :class:`BoundaryInit`.

    A bare ``random`` takes its seed from ``seed``.
    """
    head, _, arg = text.partition(":")
    if head in ("equal", EQUAL_ANGLES) and not arg:
        return BoundaryInit(EQUAL_ANGLES, n)
    if head in ("arc", SCALED_ARC):
        return BoundaryInit(SCALED_ARC, n, rho=float(arg))
    if head in ("random", RANDOM_ORDER):
        return BoundaryInit(RANDOM_ORDER, n, seed=int(arg) if arg else int(seed or 0))
    raise ValueError(f"unknown init {text!r}; use equal, arc:RHO or random:SEED")


@dataclass
class Probe:
    """One fixed-``mu`` solve as seen by the tuner."""

    mu: float
    energy: float  # conformal energy E_Cd
    area_deviation: float  # signed pi - A(f)
    angle_error: float  # mean relative angle error
    angles: np.ndarray  # boundary angles of the solution, for warm starts
    embedding: object = None
    seconds: float = 0.0
    phase: str = ""


@dataclass
class MuSchedule:
    mu: float = 0.0
    s_mu: float = 0.0
    mu_lo: float = None
    mu_hi: float = None
    tau: float = 1e-4
    area_gate: float = 0.1

    def __post_init__(self):
        if self.mu < 0 or self.s_mu < 0:
            raise ValueError("mu and s_mu must be nonnegative")
        if self.tau <= 0:
            raise ValueError("tau must be positive")


@dataclass
class TuneResult:
    mu: float
    probe: Probe
    history: list = field(default_factory=list)
    schedule: MuSchedule = None

    @property
    def embedding(self):
        return self.probe.embedding

    def history_csv(self):
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["phase", "mu", "E_Cd", "eps_A", "eps_theta", "seconds"])
        for p in self.history:
            w.writerow([p.phase, repr(p.mu), repr(p.energy), repr(p.area_deviation),
                        repr(p.angle_error), repr(p.seconds)])
        return out.getvalue()


def tune_mu(solver, t0, tau=1e-4, area_gate=0.1, mu_max=1e6):
    """Adaptive penalty tuning.

    Parameters
    ----------
    solver : callable
        ``solver(mu, t_start) -> Probe``; a converged fixed-``mu`` solve from
        the boundary angles ``t_start``.
    t0 : array_like
        Initial boundary angles.
    tau : float
        Accuracy used by the gates and the improvement test.
    area_gate : float
        The start angles are re-anchored to a probe's solution when its
        ``|pi - A|`` falls below this value.
    mu_max : float
        Escalation beyond this raises :class:`EscalationOverflow`.

    Returns
    -------
    TuneResult
        The better of the two refined candidates, with every probe in
        ``history``.

    Notes
    -----
    Three guards keep the refinement finite: the downward search stops once
    the step is at most 5 even if its last probe failed the gates, ``mu`` is
    clamped at 0, and an already probed ``mu`` is not solved again.
    """
    sched = MuSchedule(tau=tau, area_gate=area_gate)
    history = []
    seen = {}
    anchor = np.asarray(t0, dtype=float)

    def probe(mu, start, phase):
        mu = float(mu)
        if mu in seen:
            return seen[mu]
        p = solver(mu, start)
        p.phase = phase
        history.append(p)
        seen[mu] = p
        logger.info("%s mu=%g E_Cd=%.6e eps_A=%.6e eps_theta=%.6e",
                    phase, mu, p.energy, p.area_deviation, p.angle_error)
        return p

    def feasible(p):
        return p.energy > -tau and p.area_deviation > -tau

    def better(a, b):
        return a.angle_error < (1.0 - tau) * b.angle_error

    def escalate(phase):
        nonlocal anchor
        while True:
            sched.mu += sched.s_mu
            sched.s_mu += 10.0
            if sched.mu > mu_max:
                raise EscalationOverflow(
                    f"mu exceeded {mu_max:g} without meeting the energy and area gates"
                )
            p = probe(sched.mu, anchor, phase)
            if abs(p.area_deviation) < area_gate:
                anchor = p.angles
            if feasible(p):
                return p

    first = escalate("escalate")
    sched.mu_lo = first.mu
    sched.s_mu = max(sched.s_mu, 10.0)
    second = escalate("second")
    sched.mu_hi = second.mu

    if better(first, second) and first.mu > 0:
        # refine downward from mu'
        while sched.s_mu > 5.0:
            sched.s_mu /= 2.0
            sched.mu = max(math.floor(first.mu - sched.s_mu), 0.0)
            p = probe(sched.mu, first.angles, "refine_down")
            if not (p.energy > -tau and p.area_deviation > 0.0):
                continue
            if better(p, first):
                first = p
                sched.mu_lo = p.mu
    elif better(second, first):
        # refine upward from mu''
        while True:
            sched.mu = second.mu + sched.s_mu
            if sched.mu > mu_max:
                break
            p = probe(sched.mu, second.angles, "refine_up")
            if feasible(p) and better(p, second):
                second = p
                sched.mu_hi = p.mu
            else:
                break

    best = first if first.angle_error <= second.angle_error else second
    sched.mu = best.mu
    return TuneResult(best.mu, best, history, sched)
