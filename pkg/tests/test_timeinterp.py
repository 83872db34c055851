import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biotlab.quadrature import gauss_interval
from biotlab.stepper import TimePartition
from biotlab.timeinterp import (
    PiecewiseConstant,
    TimeFunction,
    commutation_defect,
    interp_J,
    interp_Jtilde,
    interval_means,
    psi,
    stability_factor,
)


def const(c):
    return TimeFunction(lambda t: np.full((len(t), np.size(c)), c))


def test_psi_values():
    p = psi(1, TimePartition.uniform(1.0, 1))
    np.testing.assert_allclose(p(np.array([0.0, 1.0])), [-2.0, 4.0])
    part = TimePartition(np.array([0.0, 1.0, 3.0]))
    assert psi(2, part)(3.0) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        psi(3, part)


def test_psi_moments():
    x, w = gauss_interval(3)
    p = psi(1, TimePartition.uniform(1.0, 1))
    assert w @ p(x) == pytest.approx(1.0)
    assert w @ (x * p(x)) == pytest.approx(1.0)


@settings(max_examples=50, deadline=None)
@given(a=st.floats(-5, 5), b=st.floats(-5, 5), lo=st.floats(0, 3), width=st.floats(0.01, 4))
def test_moment_property_affine(a, b, lo, width):
    knots = np.array([0.0, lo, lo + width]) if lo > 0 else np.array([0.0, width])
    part = TimePartition(knots)
    j = part.J
    t0, t1 = knots[-2], knots[-1]
    x, w = gauss_interval(3)
    t = t0 + (t1 - t0) * x
    assert (t1 - t0) * w @ ((a + b * t) * psi(j, part)(t)) == pytest.approx(a + b * t1, abs=1e-10 * (1 + abs(a) + abs(b) * t1))


def test_J_hand_values():
    part = TimePartition.uniform(1.0, 1)
    np.testing.assert_allclose(interp_J(TimeFunction(lambda t: t), part).values, [[1.0]])
    np.testing.assert_allclose(interp_J(const(2.5), TimePartition.uniform(1.0, 3)).values, 2.5)


def test_Jtilde_hand_values():
    part = TimePartition.uniform(1.0, 2)
    np.testing.assert_allclose(interp_Jtilde(const(-1.5), part).values, -1.5)
    one = TimePartition.uniform(1.0, 1)
    y = TimeFunction(lambda t: t**2, antiderivative=lambda t: t**3 / 3)
    dy = TimeFunction(lambda t: 2 * t, antiderivative=lambda t: t**2)
    lhs = interp_J(y, one).values[0, 0] - 0.0
    assert lhs == pytest.approx(5 / 6)
    assert interp_Jtilde(dy, one).values[0, 0] == pytest.approx(5 / 6)


@pytest.mark.parametrize("op", [interp_J, interp_Jtilde])
def test_piecewise_constants_reproduced(op, rng):
    part = TimePartition(np.array([0.0, 0.2, 0.5, 1.1, 2.0]))
    vals = rng.standard_normal((4, 3))
    pc = PiecewiseConstant(part, vals)
    # evaluation at interior points only: the jumps sit on the knots
    np.testing.assert_allclose(op(TimeFunction(pc), part, order=16).values, vals, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), J=st.integers(1, 8), ratio=st.floats(0.5, 2.0))
def test_commutation(seed, J, ratio):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(4)
    w = rng.uniform(0.5, 4)
    y = TimeFunction(lambda t: c[0] + c[1] * t + c[2] * np.sin(w * t) + c[3] * t**4)
    dy = TimeFunction(lambda t: c[1] + c[2] * w * np.cos(w * t) + 4 * c[3] * t**3)
    part = TimePartition.geometric(1.5, J, ratio)
    assert commutation_defect(y, dy, part) <= 1e-10


def test_stability_factor_bound_attained_for_affine():
    part = TimePartition.uniform(1.0, 3)
    assert stability_factor(TimeFunction(lambda t: t), part) == pytest.approx(4.0, rel=1e-12)


def test_stability_factor_with_gram(rng):
    part = TimePartition.uniform(1.0, 4)
    G = np.array([[2.0, 0.3], [0.3, 1.0]])
    x = TimeFunction(lambda t: np.column_stack([np.sin(3 * t), t**2]))
    assert stability_factor(x, part, gram=G) <= 4 * (1 + 1e-12)


def test_interval_means_are_l2_best():
    part = TimePartition.uniform(1.0, 2)
    x = TimeFunction(lambda t: t**2)
    np.testing.assert_allclose(interval_means(x, part).values.ravel(), [1 / 12, 7 / 12])


def test_antiderivative_and_quadrature_agree():
    f = TimeFunction(lambda t: np.cos(t), antiderivative=lambda t: np.sin(t))
    g = TimeFunction(lambda t: np.cos(t))
    t = np.array([0.3, 1.2])
    np.testing.assert_allclose(f.integral(0.1, t), g.integral(0.1, t), atol=1e-13)
