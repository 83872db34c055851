"""Closed-form solution of the Terzaghi consolidation column.

The column occupies 0 < z < H with the loaded, drained top at z = 0 and the
clamped, impermeable bottom at z = H.  The pressure is the truncated series

    p(z, t) = p0 sum_m 4/((2m+1) pi) sin((2m+1) pi z / (2H)) exp(-(2m+1)^2 a t),
    a = pi^2 gt kappa / (4 H^2),

from which u_z = (alpha p - F)/(2 mu + lam) and p_tot = lam u_z - alpha p.
Besides pointwise evaluation the module provides exact space-time integrals
of the series against piecewise linear functions, used by the error norm.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .params import TERZAGHI_PARAMS, BiotParameters

if os.environ.get("BIOTLAB_PURE_PYTHON"):
    from ._series_py import sine_series

    BACKEND = "python"
else:
    try:
        from ._series import sine_series

        BACKEND = "compiled"
    except ImportError:  # extension not built
        from ._series_py import sine_series

        BACKEND = "python"


@dataclass(frozen=True)
class TerzaghiSetup:
    params: BiotParameters = TERZAGHI_PARAMS
    H: float = 1.0
    F: float = 1e3
    n_terms: int = 5000

    def __post_init__(self):
        if self.n_terms < 1 or not self.H > 0:
            raise ValueError("need n_terms >= 1 and H > 0")

    @property
    def stiffness(self) -> float:
        """2 mu + lambda (one-dimensional constrained modulus)."""
        return 2 * self.params.mu + self.params.lam

    @property
    def gamma_tilde(self) -> float:
        p = self.params
        return 1.0 / (p.alpha**2 / self.stiffness + p.sigma)

    @property
    def p0(self) -> float:
        return self.params.alpha * self.gamma_tilde * self.F / self.stiffness

    @property
    def rate(self) -> float:
        """a in exp(-(2m+1)^2 a t)."""
        return np.pi**2 * self.gamma_tilde * self.params.kappa / (4 * self.H**2)

    def wavenumbers(self) -> np.ndarray:
        return (2 * np.arange(self.n_terms) + 1) * np.pi / (2 * self.H)

    def decay_rates(self) -> np.ndarray:
        return (2 * np.arange(self.n_terms) + 1.0) ** 2 * self.rate

    def coefficients(self) -> np.ndarray:
        return self.p0 * 4 / ((2 * np.arange(self.n_terms) + 1) * np.pi)


def _args(setup, z, t):
    z, t = np.broadcast_arrays(np.asarray(z, dtype=float), np.asarray(t, dtype=float))
    return np.pi * z / (2 * setup.H), setup.rate * t


def pressure(setup: TerzaghiSetup, z, t):
    x, s = _args(setup, z, t)
    return setup.p0 * 4 / np.pi * sine_series(x, s, setup.n_terms, -1, False)


def pressure_dz(setup: TerzaghiSetup, z, t):
    x, s = _args(setup, z, t)
    return setup.p0 * 2 / setup.H * sine_series(x, s, setup.n_terms, 0, True)


def pressure_dzz(setup: TerzaghiSetup, z, t):
    x, s = _args(setup, z, t)
    k = np.pi / (2 * setup.H)
    return -setup.p0 * 4 / np.pi * k**2 * sine_series(x, s, setup.n_terms, 1, False)


def pressure_dt(setup: TerzaghiSetup, z, t):
    x, s = _args(setup, z, t)
    return -setup.p0 * 4 / np.pi * setup.rate * sine_series(x, s, setup.n_terms, 1, False)


def displacement_gradient(setup: TerzaghiSetup, z, t):
    return (setup.params.alpha * pressure(setup, z, t) - setup.F) / setup.stiffness


def total_pressure(setup: TerzaghiSetup, z, t):
    p = pressure(setup, z, t)
    u_z = (setup.params.alpha * p - setup.F) / setup.stiffness
    return setup.params.lam * u_z - setup.params.alpha * p


def fluid_content(setup: TerzaghiSetup, z, t):
    p = pressure(setup, z, t)
    u_z = (setup.params.alpha * p - setup.F) / setup.stiffness
    return setup.params.alpha * u_z + setup.params.sigma * p


# ---------------------------------------------------------------------------
# exact integrals


def affine_maps(setup: TerzaghiSetup):
    """Each exact field written as c * p + d.

    Returns {name: (c, d)} for 'u_z', 'p_tot', 'p'.
    """
    a, E, lam, F = setup.params.alpha, setup.stiffness, setup.params.lam, setup.F
    return {
        "u_z": (a / E, -F / E),
        "p_tot": (lam * a / E - a, -lam * F / E),
        "p": (1.0, 0.0),
    }


def time_integrals(setup: TerzaghiSetup, knots) -> tuple[np.ndarray, np.ndarray]:
    """For every interval I_j and every term m:

    E[m, j]  = int_{I_j} exp(-lambda_m t) dt
    E2[m, j] = int_{I_j} exp(-2 lambda_m t) dt
    """
    lam = setup.decay_rates()[:, None]
    t0 = np.asarray(knots[:-1])[None, :]
    tau = np.diff(knots)[None, :]

    def block(rate):
        return np.exp(-rate * t0) * (-np.expm1(-rate * tau)) / rate

    return block(lam), block(2 * lam)


def _sin_moments(k, centres, half):
    """int over [c-h, c+h] of sin(k z) and of sin(k z) (z - c)."""
    x = np.outer(k, half)
    kk = k[:, None]
    kc = np.outer(k, centres)
    I0 = 2 * np.sin(kc) * np.sin(x) / kk
    small = x < 0.05
    x2 = x * x
    g = np.where(
        small,
        x**3 * (1 / 3 - x2 / 30 + x2 * x2 / 840 - x2**3 / 45360),
        np.sin(x) - x * np.cos(x),
    )
    I1 = 2 * np.cos(kc) * g / kk**2
    return I0, I1


def space_moments(setup: TerzaghiSetup, vertices, terms=slice(None)):
    """Moments of the spatial sine modes on each cell of a 1D mesh.

    Returns (S0, S1) of shape (n_terms, n_cells):
    S0[m, i] = int_cell sin(k_m z), S1[m, i] = int_cell sin(k_m z) (z - mid).
    """
    z = np.asarray(vertices, dtype=float).ravel()
    centres = (z[:-1] + z[1:]) / 2
    half = np.diff(z) / 2
    return _sin_moments(setup.wavenumbers()[terms], centres, half)


def squared_norm_integrals(setup: TerzaghiSetup, knots) -> np.ndarray:
    """int_{I_j} ||p(t)||^2_{L2(0,H)} dt for all intervals (Parseval)."""
    b = setup.coefficients()
    _, E2 = time_integrals(setup, knots)
    return (setup.H / 2) * (b**2) @ E2


class PressureTable:
    """Batched evaluation of the series at fixed depths and many times.

    p(z_i, t_r) = sum_m b_m exp(-lambda_m t_r) sin(k_m z_i) is formed as a
    matrix product; the sine table is cached when it fits in memory.
    """

    CACHE_ENTRIES = 2 * 10**7
    TERM_CHUNK = 500

    def __init__(self, setup: TerzaghiSetup, z):
        self.setup = setup
        self.z = np.asarray(z, dtype=float).ravel()
        self.k = setup.wavenumbers()
        self.b = setup.coefficients()
        self.rates = setup.decay_rates()
        self._table = None
        if self.z.size * self.k.size <= self.CACHE_ENTRIES:
            self._table = np.sin(np.outer(self.k, self.z))

    def __call__(self, t) -> np.ndarray:
        """Array of shape (len(t), len(z))."""
        t = np.asarray(t, dtype=float).ravel()
        coef = self.b[None, :] * np.exp(-np.outer(t, self.rates))
        if self._table is not None:
            return coef @ self._table
        out = np.zeros((t.size, self.z.size))
        for m0 in range(0, self.k.size, self.TERM_CHUNK):
            sl = slice(m0, m0 + self.TERM_CHUNK)
            out += coef[:, sl] @ np.sin(np.outer(self.k[sl], self.z))
        return out
