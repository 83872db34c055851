import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biotlab import terzaghi as tz
from biotlab.bench import terzaghi_problem
from biotlab.errors import ConfigError
from biotlab.stepper import LoadSpec, StepOperator, TimePartition, dt, restrict, restrict_loads, run, step_residuals

from conftest import column_system, square_system


def test_partition_validation():
    with pytest.raises(ConfigError):
        TimePartition(np.array([0.0, 0.5, 0.5]))
    with pytest.raises(ConfigError):
        TimePartition.uniform(1.0, 0)
    p = TimePartition.geometric(2.0, 4, 1.5)
    assert p.T == pytest.approx(2.0) and p.grading == pytest.approx(1 / 1.5)


def test_backward_difference():
    part = TimePartition.uniform(1.0, 1)
    np.testing.assert_allclose(dt(np.array([[2.0]]), np.array([2.0]), part), [[0.0]])
    v = np.array([1.0, -3.0])
    np.testing.assert_allclose(dt(v[None], np.zeros(2), TimePartition.uniform(0.5, 1)), [2 * v])
    part = TimePartition(np.array([0.0, 0.1, 0.4, 0.5]))
    t = part.knots
    np.testing.assert_allclose(dt((3 * t[1:] + 1)[:, None], np.array([1.0]), part), 3.0)


def test_restrict_averages():
    np.testing.assert_allclose(restrict(lambda t: np.array([t]), TimePartition.uniform(1.0, 1)), [[0.5]])
    out = restrict(lambda t: np.array([t * t]), TimePartition.uniform(1.0, 2))
    np.testing.assert_allclose(out.ravel(), [1 / 12, 7 / 12])


def test_zero_data_zero_solution():
    s = column_system(4)
    h = run(s, TimePartition.uniform(1.0, 3), LoadSpec.zero(s))
    for X in (h.U, h.Ptot, h.P, h.M, h.M0):
        assert not np.any(X)


def test_constant_traction_each_interval():
    s, loads = terzaghi_problem(4)
    Lu, _ = restrict_loads(loads, TimePartition.uniform(1.0, 3))
    assert np.allclose(Lu, Lu[0]) and Lu[0].sum() == pytest.approx(1e3)


def test_residuals_of_solution(rng):
    s, loads = terzaghi_problem(8)
    part = TimePartition.geometric(1.0, 5, 0.7)
    h = run(s, part, loads)
    Lu, Lp = loads.u(0.0), loads.p(0.0)
    prev = h.M0
    for j, tau in enumerate(part.lengths):
        res = step_residuals(s, h.U[j], h.Ptot[j], h.P[j], h.M[j], prev, tau, Lu, Lp)
        assert max(res) < 1e-10
        prev = h.M[j]


def test_meanfree_multipliers_keep_constraints():
    from biotlab.bench import cantilever_problem

    s, loads = cantilever_problem(2)
    h = run(s, TimePartition.uniform(0.005, 3), loads)
    assert np.abs(h.P @ s.c_P).max() < 1e-12
    assert np.abs(h.M @ s.c_P).max() < 1e-12


def test_one_factorization_per_length(monkeypatch):
    import biotlab.stepper as stepper

    count = []
    orig = stepper.StepOperator.__post_init__

    def counting(self):
        count.append(self.tau)
        orig(self)

    monkeypatch.setattr(stepper.StepOperator, "__post_init__", counting)
    s, loads = terzaghi_problem(2)
    run(s, TimePartition(np.array([0.0, 0.1, 0.2, 0.4, 0.6, 0.8])), loads)
    assert len(count) == 2


def test_terzaghi_first_step_bounds():
    setup = tz.TerzaghiSetup()
    s, loads = terzaghi_problem(4, setup)
    h = run(s, TimePartition.uniform(1.0 / 5000, 1), loads)
    P = s.spaces.P.expand(h.P[0])
    bottom = P[np.argmax(s.spaces.P.node_coordinates()[:, 0])]
    assert 0 < bottom < setup.p0


@settings(max_examples=20, deadline=None)
@given(tau=st.floats(1e-4, 10.0), e=st.floats(0.1, 3), flip=st.booleans())
def test_steady_state_any_step(tau, e, flip):
    from biotlab.manufactured import column, field_errors
    from biotlab.params import TERZAGHI_PARAMS

    prob = column(4, TERZAGHI_PARAMS, e=-e if flip else e)
    h = run(prob.system, TimePartition.uniform(tau * 2, 2), prob.loads)
    assert max(field_errors(prob, h).values()) < 1e-8


def test_step_operator_split_sizes():
    s = square_system(2)
    op = StepOperator(s, 0.1)
    parts = op.split(np.zeros(op.matrix.shape[0]))
    assert [len(p) for p in parts] == [s.nU, s.nD, s.nP, s.nP, 2]
