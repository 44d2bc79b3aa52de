import numpy as np
import pytest
from hypothesis import given, strategies as st

from sdmce.adaptive_mu import (
    EQUAL_ANGLES, RANDOM_ORDER, SCALED_ARC, BoundaryInit, MuSchedule, Probe,
    generate_initial_boundary, parse_init, tune_mu,
)
from sdmce.errors import EscalationOverflow


class Stub:
    """Scripted solver: ``table(mu) -> (energy, area_deviation, angle_error)``."""

    def __init__(self, table):
        self.table = table
        self.calls = []

    def __call__(self, mu, start):
        self.calls.append(mu)
        E, eps_a, err = self.table(mu)
        return Probe(mu, E, eps_a, err, np.asarray(start, float) + 0.0)


def test_equal_angles():
    t = generate_initial_boundary(BoundaryInit(EQUAL_ANGLES, 4))
    np.testing.assert_allclose(t, [0, np.pi / 2, np.pi, 3 * np.pi / 2])


def test_scaled_arc_half_circle():
    t = generate_initial_boundary(BoundaryInit(SCALED_ARC, 4, rho=2))
    np.testing.assert_allclose(t, [0, np.pi / 4, np.pi / 2, 3 * np.pi / 4])


def test_scaled_arc_wraps():
    t = generate_initial_boundary(BoundaryInit(SCALED_ARC, 8, rho=0.5))
    assert t.min() >= 0 and t.max() < 2 * np.pi


def test_random_order_reproducible():
    a = generate_initial_boundary(BoundaryInit(RANDOM_ORDER, 4, seed=7))
    b = generate_initial_boundary(BoundaryInit(RANDOM_ORDER, 4, seed=7))
    np.testing.assert_array_equal(a, b)
    np.testing.assert_allclose(np.sort(a), [0, np.pi / 2, np.pi, 3 * np.pi / 2])


@pytest.mark.parametrize("kwargs", [
    {"rho": 0.0}, {"rho": -1.0}, {"n": 2}, {"kind": "spiral"},
])
def test_init_validation(kwargs):
    args = {"kind": SCALED_ARC, "n": 5, **kwargs}
    with pytest.raises(ValueError):
        BoundaryInit(**args)


def test_parse_init():
    assert parse_init("equal", 6) == BoundaryInit(EQUAL_ANGLES, 6)
    assert parse_init("arc:1000", 6).rho == 1000.0
    assert parse_init("random:3", 6).seed == 3
    assert parse_init("random", 6, seed=11).seed == 11
    for bad in ("arc:0", "arc:-2", "spiral", "equal:4"):
        with pytest.raises(ValueError):
            parse_init(bad, 6)


def test_schedule_validation():
    with pytest.raises(ValueError):
        MuSchedule(mu=-1)
    with pytest.raises(ValueError):
        MuSchedule(tau=0)


def test_escalation_sequence():
    # gates fail below mu = 100
    stub = Stub(lambda mu: (-1.0 if mu < 100 else 0.01, 0.01, 1.0))
    res = tune_mu(stub, np.zeros(5))
    escalate = [p.mu for p in res.history if p.phase == "escalate"]
    assert escalate == [0, 10, 30, 60, 100]
    second = [p.mu for p in res.history if p.phase == "second"]
    assert second == [150]


def test_no_refinement_when_errors_close():
    stub = Stub(lambda mu: (0.01, 0.01, 0.2 + 1e-7 * mu))
    res = tune_mu(stub, np.zeros(5))
    assert [p.mu for p in res.history] == [0, 10]
    assert res.mu in (0, 10)


def test_refine_up_stops_at_first_non_improvement():
    stub = Stub(lambda mu: (0.01, 0.01, 1.0 + abs(mu - 40.0)))
    res = tune_mu(stub, np.zeros(5))
    up = [p.mu for p in res.history if p.phase == "refine_up"]
    assert up == [30, 50]
    assert res.mu == 30 and res.mu <= 50


def test_refine_down():
    # gates pass from mu = 60 on; the error grows with mu
    stub = Stub(lambda mu: (0.01 if mu >= 25 else -1.0, 0.01, mu / 100.0))
    res = tune_mu(stub, np.zeros(5))
    down = [p.mu for p in res.history if p.phase == "refine_down"]
    assert [p.mu for p in res.history if p.phase == "escalate"][-1] == 30
    assert down and all(d < 30 for d in down)
    assert res.mu == min(p.mu for p in res.history if p.energy > -1e-4)
    assert res.probe.energy > -1e-4 and res.probe.area_deviation > -1e-4


def test_refine_down_rejects_over_coverage():
    # below mu = 30 the area over-covers; refinement must not accept it
    stub = Stub(lambda mu: (0.01, 0.01 if mu >= 30 else -0.5, mu / 100.0))
    stub2 = Stub(lambda mu: (-1.0 if mu < 30 else 0.01, 0.01 if mu >= 30 else -0.5, mu / 100.0))
    for s in (stub, stub2):
        res = tune_mu(s, np.zeros(5))
        assert res.probe.area_deviation > -1e-4


def test_overflow():
    stub = Stub(lambda mu: (-1.0, 0.01, 1.0))
    with pytest.raises(EscalationOverflow):
        tune_mu(stub, np.zeros(5), mu_max=1000)


def test_anchor_follows_small_area_error():
    starts = []

    def solver(mu, start):
        starts.append(np.array(start))
        return Probe(mu, -1.0 if mu < 30 else 0.01, 0.05, 1.0, np.full(5, mu))

    tune_mu(solver, np.zeros(5))
    # the third probe starts from the second one's angles
    np.testing.assert_array_equal(starts[2], np.full(5, 10.0))


def test_deterministic_and_history_csv():
    table = lambda mu: (0.01 if mu >= 20 else -1.0, 0.01, 1.0 + abs(mu - 45.0))  # noqa: E731
    a = tune_mu(Stub(table), np.zeros(5))
    b = tune_mu(Stub(table), np.zeros(5))
    assert a.mu == b.mu
    assert [p.mu for p in a.history] == [p.mu for p in b.history]
    rows = a.history_csv().splitlines()
    assert rows[0] == "phase,mu,E_Cd,eps_A,eps_theta,seconds"
    assert len(rows) == len(a.history) + 1


@given(st.floats(0, 300), st.floats(0, 300), st.floats(1, 200))
def test_result_meets_gates(gate, best_mu, width):
    def table(mu):
        E = 0.01 if mu >= gate else -1.0
        return E, 0.01, 1.0 + abs(mu - best_mu) / width

    stub = Stub(table)
    res = tune_mu(stub, np.zeros(5))
    assert res.probe.energy > -1e-4 and res.probe.area_deviation > -1e-4
    # no mu is solved twice
    assert len(stub.calls) == len(set(stub.calls))
    phases = {}
    for p in res.history:
        phases.setdefault(p.phase, []).append(p.mu)
    for mus in phases.values():
        assert len(mus) == len(set(mus))
