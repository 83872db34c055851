"""Steady polynomial solutions that the discretization reproduces exactly.

Both cases keep u in P2 and p, p_tot, m in P1 and satisfy the essential
conditions of their boundary configuration, so the discrete solution equals
the interpolant on every interval once M_0 is set to the steady m.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .assembly import DiscreteSystem, assemble
from .fespace import build_spaces
from .mesh import crisscross_mesh, interval_mesh
from .params import TERZAGHI_CONFIG, BiotParameters, BoundaryConfig, select_spaces
from .stepper import LoadSpec, SolutionHistory

SQUARE_CONFIG = BoundaryConfig(
    u_essential={"left"},
    u_natural={"top", "right", "bottom"},
    p_essential={"bottom"},
    p_natural={"left", "top", "right"},
)


@dataclass
class SteadyProblem:
    system: DiscreteSystem
    loads: LoadSpec
    u: Callable
    ptot: Callable
    p: Callable
    m: Callable


def column(n: int, params: BiotParameters, e: float = 1.0) -> SteadyProblem:
    """u = 1 - z^2, p = e z on the column (clamped at z=1, drained at z=0)."""
    cfg = TERZAGHI_CONFIG
    mu, lam, a, s, k = params.mu, params.lam, params.alpha, params.sigma, params.kappa
    spaces = build_spaces(interval_mesh(1.0, n), cfg, select_spaces(cfg, s))
    system = assemble(spaces, params)

    def u(x):
        return 1 - x[:, 0] ** 2

    def p(x):
        return e * x[:, 0]

    def ptot(x):
        return -2 * lam * x[:, 0] - a * p(x)

    def m(x):
        return -2 * a * x[:, 0] + s * p(x)

    f_u = 4 * mu + 2 * lam + a * e
    loads = LoadSpec.from_data(
        spaces,
        cfg,
        f_u=lambda x, t: np.full(len(x), f_u),
        g_u=lambda x, nrm, t: np.zeros(len(x)),
        g_p=lambda x, nrm, t: k * e * nrm[:, 0],
        m0=m,
    )
    return SteadyProblem(system, loads, u, ptot, p, m)


def square(m: int, params: BiotParameters, b1=0.3, c1=0.7, a2=-0.4, b2=0.5, e=1.2) -> SteadyProblem:
    """u = x (b1 x + c1 y, a2 + b2 x - 2 b1 y), p = e y on the unit square."""
    cfg = SQUARE_CONFIG
    mu, lam, a, s, k = params.mu, params.lam, params.alpha, params.sigma, params.kappa
    c2 = -2 * b1
    spaces = build_spaces(crisscross_mesh(m), cfg, select_spaces(cfg, s))
    system = assemble(spaces, params)

    def u(x):
        X, Y = x[:, 0], x[:, 1]
        return np.column_stack([X * (b1 * X + c1 * Y), X * (a2 + b2 * X + c2 * Y)])

    def p(x):
        return e * x[:, 1]

    def ptot(x):
        return (lam * c1 - a * e) * x[:, 1]

    def mfun(x):
        return (a * c1 + s * e) * x[:, 1]

    def stress(x):
        X, Y = x[:, 0], x[:, 1]
        e11 = 2 * b1 * X + c1 * Y
        e22 = c2 * X
        e12 = (c1 * X + a2 + 2 * b2 * X + c2 * Y) / 2
        pt = ptot(x)
        return 2 * mu * e11 + pt, 2 * mu * e12, 2 * mu * e22 + pt

    def traction(x, nrm, t):
        s11, s12, s22 = stress(x)
        return np.column_stack([s11 * nrm[:, 0] + s12 * nrm[:, 1], s12 * nrm[:, 0] + s22 * nrm[:, 1]])

    f = np.array([-2 * mu * b1, -(mu * (c1 + 2 * b2) + lam * c1 - a * e)])
    loads = LoadSpec.from_data(
        spaces,
        cfg,
        f_u=lambda x, t: np.broadcast_to(f, x.shape),
        g_u=traction,
        g_p=lambda x, nrm, t: k * e * nrm[:, 1],
        m0=mfun,
    )
    return SteadyProblem(system, loads, u, ptot, p, mfun)


def field_errors(problem: SteadyProblem, history: SolutionHistory) -> dict[str, float]:
    """Largest relative nodal deviation from the interpolated exact fields."""
    sp = problem.system.spaces
    exact = {
        "u": sp.U.interpolate(problem.u)[sp.U.free_dofs],
        "ptot": sp.D.interpolate(problem.ptot)[sp.D.free_dofs],
        "p": sp.P.interpolate(problem.p)[sp.P.free_dofs],
        "m": sp.P.interpolate(problem.m)[sp.P.free_dofs],
    }
    got = {"u": history.U, "ptot": history.Ptot, "p": history.P, "m": history.M}
    out = {}
    for name, ref in exact.items():
        scale = max(np.abs(ref).max(), 1e-300)
        out[name] = float(np.abs(got[name] - ref[None]).max() / scale)
    return out
