"""Quasi-interpolation of time-dependent functions into piecewise constants.

Two operators map a function x : [0, T] -> R^n onto one value per interval:

    (J x)_j  = int_{I_j} x psi_j
    (Jt x)_j = ( int_{I_j} X_{j-1}(t) psi_j(t) dt
                 - int_{I_{j-1}} X_{j-1}(t) psi_{j-1}(t) dt ) / |I_j|

where psi_j is the affine weight reproducing end values of affine functions
and X_{j-1}(t) = int_{t_{j-1}}^t x.  On the first interval only the first
integral is present.  They satisfy d_t(J x, x(0)) = Jt x'.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .quadrature import gauss_interval
from .stepper import TimePartition, dt

DEFAULT_ORDER = 16


@dataclass
class TimeFunction:
    """``value(t)`` returns an array (len(t), n) for an array of times.
    ``antiderivative`` (optional) has the same signature."""

    value: Callable[[np.ndarray], np.ndarray]
    antiderivative: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.asarray(self.value(t), dtype=float).reshape(len(t), -1)

    def integral(self, a: float, t, order: int = DEFAULT_ORDER) -> np.ndarray:
        """int_a^t x for every entry of t; shape (len(t), n)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.antiderivative is not None:
            F = np.asarray(self.antiderivative(np.append(t, a)), dtype=float).reshape(len(t) + 1, -1)
            return F[:-1] - F[-1]
        x, w = gauss_interval(order)
        s = a + np.outer(t - a, x)  # (len(t), order)
        vals = self(s.ravel()).reshape(len(t), order, -1)
        return np.einsum("q,tqn->tn", w, vals) * (t - a)[:, None]


@dataclass
class PiecewiseConstant:
    partition: TimePartition
    values: np.ndarray  # (J, n)

    def __call__(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        j = np.clip(np.searchsorted(self.partition.knots, t, side="left") - 1, 0, self.partition.J - 1)
        return self.values[j]


def psi(j: int, partition: TimePartition) -> Callable[[np.ndarray], np.ndarray]:
    """The affine weight on I_j (1-based j)."""
    if not 1 <= j <= partition.J:
        raise ValueError(f"interval index {j} outside 1..{partition.J}")
    a, b = partition.knots[j - 1], partition.knots[j]
    h = b - a

    def f(t):
        return 6 * (np.asarray(t, dtype=float) - a) / h**2 - 2 / h

    return f


def _nodes(a, b, order):
    x, w = gauss_interval(order)
    return a + (b - a) * x, (b - a) * w


def interp_J(x: TimeFunction, partition: TimePartition, order: int = DEFAULT_ORDER) -> PiecewiseConstant:
    knots = partition.knots
    out = []
    for j in range(1, partition.J + 1):
        t, w = _nodes(knots[j - 1], knots[j], order)
        out.append((w * psi(j, partition)(t)) @ x(t))
    return PiecewiseConstant(partition, np.array(out))


def interp_Jtilde(x: TimeFunction, partition: TimePartition, order: int = DEFAULT_ORDER) -> PiecewiseConstant:
    knots, h = partition.knots, partition.lengths
    out = []
    for j in range(1, partition.J + 1):
        a = knots[j - 1]
        t, w = _nodes(a, knots[j], order)
        val = (w * psi(j, partition)(t)) @ x.integral(a, t, order)
        if j > 1:
            t, w = _nodes(knots[j - 2], a, order)
            # int_t^{t_{j-1}} x = -int_{t_{j-1}}^t x
            val -= (w * psi(j - 1, partition)(t)) @ x.integral(a, t, order)
        out.append(val / h[j - 1])
    return PiecewiseConstant(partition, np.array(out))


def commutation_defect(y: TimeFunction, dy: TimeFunction, partition: TimePartition,
                       order: int = DEFAULT_ORDER) -> float:
    """max |d_t(J y, y(0)) - Jt y'| relative to the size of the terms."""
    Jy = interp_J(y, partition, order).values
    lhs = dt(Jy, y(np.array([0.0]))[0], partition)
    rhs = interp_Jtilde(dy, partition, order).values
    scale = max(np.abs(lhs).max(), np.abs(rhs).max(), 1e-300)
    return float(np.abs(lhs - rhs).max() / scale)


def l2_distance_sq(x: TimeFunction, X: PiecewiseConstant, gram=None, order: int = DEFAULT_ORDER) -> float:
    """int_0^T |x - X|^2 in the norm induced by ``gram`` (identity if None)."""
    knots = X.partition.knots
    total = 0.0
    for j in range(X.partition.J):
        t, w = _nodes(knots[j], knots[j + 1], order)
        e = x(t) - X.values[j]
        ge = e if gram is None else e @ np.asarray(gram).T
        total += float(w @ np.einsum("qn,qn->q", e, ge))
    return total


def interval_means(x: TimeFunction, partition: TimePartition, order: int = DEFAULT_ORDER) -> PiecewiseConstant:
    """L2-best piecewise constant: the mean on every interval."""
    knots, h = partition.knots, partition.lengths
    out = []
    for j in range(partition.J):
        t, w = _nodes(knots[j], knots[j + 1], order)
        out.append(w @ x(t) / h[j])
    return PiecewiseConstant(partition, np.array(out))


def stability_factor(x: TimeFunction, partition: TimePartition, which: str = "J", gram=None,
                     order: int = DEFAULT_ORDER) -> float:
    """int |x - I x|^2 / int |x - mean x|^2 for I = J or Jt."""
    op = interp_J if which == "J" else interp_Jtilde
    num = l2_distance_sq(x, op(x, partition, order), gram, order)
    den = l2_distance_sq(x, interval_means(x, partition, order), gram, order)
    if den <= 0:
        return 0.0 if num <= 1e-28 else np.inf
    return num / den
