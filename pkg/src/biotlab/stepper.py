"""Backward Euler marching of the four-field system.

Unknowns per interval, on free dofs: displacement U, total pressure Ptot,
pressure P and fluid content M.  The step equations read

    A U + B^T Ptot                       = Lu
    lam B U - M_D Ptot - alpha C P       = 0
    alpha G U + sigma M_P P - M_P M      = 0
    M_P M / tau + K P                    = Lp + M_P M_prev / tau

with one Lagrange multiplier per mean-zero block (the multiplier column
relaxes the constant test function, the extra row fixes the mean).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .assembly import DiscreteSystem, boundary_load, load_vector
from .errors import ConfigError
from .fespace import Spaces
from .linalg import Factorization
from .params import BoundaryConfig
from .quadrature import gauss_interval


@dataclass(frozen=True)
class TimePartition:
    knots: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.knots, dtype=float)
        if t.ndim != 1 or len(t) < 2 or t[0] != 0 or np.any(np.diff(t) <= 0):
            raise ConfigError("time knots must start at 0 and increase strictly")
        object.__setattr__(self, "knots", t)

    @classmethod
    def uniform(cls, T: float, J: int) -> "TimePartition":
        if J < 1:
            raise ConfigError("J must be at least 1")
        return cls(np.linspace(0.0, T, J + 1))

    @classmethod
    def geometric(cls, T: float, J: int, ratio: float) -> "TimePartition":
        w = ratio ** np.arange(J)
        return cls(np.concatenate([[0.0], T * np.cumsum(w) / w.sum()]))

    @property
    def J(self) -> int:
        return len(self.knots) - 1

    @property
    def T(self) -> float:
        return float(self.knots[-1])

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.knots)

    @property
    def grading(self) -> float:
        """max_j |I_{j-1}| / |I_j| (1 for a single interval)."""
        h = self.lengths
        return float((h[:-1] / h[1:]).max()) if len(h) > 1 else 1.0


def restrict(fn: Callable[[float], np.ndarray], partition: TimePartition, npts: int = 5):
    """Interval averages (1/|I_j|) int_{I_j} fn(t) dt by Gauss quadrature."""
    x, w = gauss_interval(npts)
    out = []
    for a, b in zip(partition.knots[:-1], partition.knots[1:]):
        out.append(sum(wi * np.asarray(fn(a + (b - a) * xi), dtype=float) for xi, wi in zip(x, w)))
    return np.array(out)


@dataclass
class LoadSpec:
    """Data of the problem as pairings with the free basis functions.

    ``u(t)`` and ``p(t)`` return the load vectors for the displacement and the
    pressure equation, ``l0`` the initial fluid-content functional.  When
    ``constant`` is set the loads are evaluated once.
    """

    u: Callable[[float], np.ndarray]
    p: Callable[[float], np.ndarray]
    l0: np.ndarray
    constant: bool = True

    @classmethod
    def zero(cls, system: DiscreteSystem) -> "LoadSpec":
        zu, zp = np.zeros(system.nU), np.zeros(system.nP)
        return cls(lambda t: zu, lambda t: zp, zp.copy())

    @classmethod
    def from_data(
        cls,
        spaces: Spaces,
        config: BoundaryConfig,
        f_u=None,
        g_u=None,
        f_p=None,
        g_p=None,
        m0=None,
        constant: bool = True,
    ) -> "LoadSpec":
        """Build pairings from callables.

        ``f_u(x, t)``, ``f_p(x, t)`` are volume sources, ``g_u(x, n, t)`` and
        ``g_p(x, n, t)`` boundary data on the natural parts, ``m0(x)`` the
        initial fluid content.  For constant data the ``t`` argument is 0.
        """
        U, P = spaces.U, spaces.P
        fu, fp = U.free_dofs, P.free_dofs

        def u_load(t):
            v = np.zeros(U.ndofs)
            if f_u is not None:
                v += load_vector(U, lambda x: f_u(x, t))
            if g_u is not None and config.u_natural:
                v += boundary_load(U, config.u_natural, lambda x, n: g_u(x, n, t))
            return v[fu]

        def p_load(t):
            v = np.zeros(P.ndofs)
            if f_p is not None:
                v += load_vector(P, lambda x: f_p(x, t))
            if g_p is not None and config.p_natural:
                v += boundary_load(P, config.p_natural, lambda x, n: g_p(x, n, t))
            return v[fp]

        l0 = load_vector(P, m0)[fp] if m0 is not None else np.zeros(len(fp))
        if constant:
            lu, lp = u_load(0.0), p_load(0.0)
            return cls(lambda t: lu, lambda t: lp, l0, True)
        return cls(u_load, p_load, l0, False)


def restrict_loads(loads: LoadSpec, partition: TimePartition, npts: int = 5):
    """Per-interval load vectors (J, nU) and (J, nP)."""
    J = partition.J
    if loads.constant:
        lu, lp = loads.u(0.0), loads.p(0.0)
        return np.broadcast_to(lu, (J, len(lu))), np.broadcast_to(lp, (J, len(lp)))
    return restrict(loads.u, partition, npts), restrict(loads.p, partition, npts)


def dt(M: np.ndarray, M0: np.ndarray, partition: TimePartition) -> np.ndarray:
    """Backward differences (M_j - M_{j-1}) / |I_j|."""
    M = np.asarray(M)
    prev = np.concatenate([M0[None], M[:-1]], axis=0)
    return (M - prev) / partition.lengths.reshape((-1,) + (1,) * (M.ndim - 1))


@dataclass(eq=False)
class SolutionHistory:
    partition: TimePartition
    U: np.ndarray
    Ptot: np.ndarray
    P: np.ndarray
    M: np.ndarray
    M0: np.ndarray
    multipliers: np.ndarray | None = None

    @property
    def J(self) -> int:
        return self.partition.J


@dataclass(eq=False)
class StepOperator:
    """Block matrix of one backward Euler step for a fixed interval length."""

    system: DiscreteSystem
    tau: float
    matrix: sp.csr_matrix = field(init=False)
    factorization: Factorization = field(init=False, repr=False)

    def __post_init__(self):
        self.matrix = step_matrix(self.system, self.tau)
        self.factorization = Factorization(self.matrix)

    @property
    def offsets(self):
        s = self.system
        return np.cumsum([0, s.nU, s.nD, s.nP, s.nP])

    def rhs(self, Lu, Lp, M_prev):
        s = self.system
        n_extra = self.matrix.shape[0] - self.offsets[-1]
        return np.concatenate(
            [Lu, np.zeros(s.nD), np.zeros(s.nP), Lp + s.M_P @ M_prev / self.tau, np.zeros(n_extra)]
        )

    def split(self, x):
        o = self.offsets
        return x[o[0]:o[1]], x[o[1]:o[2]], x[o[2]:o[3]], x[o[3]:o[4]], x[o[4]:]

    def solve(self, Lu, Lp, M_prev):
        return self.split(self.factorization.solve(self.rhs(Lu, Lp, M_prev)))


def step_matrix(system: DiscreteSystem, tau: float) -> sp.csr_matrix:
    s, p = system, system.params
    nU, nD, nP = s.nU, s.nD, s.nP
    Z = None
    rows = [
        [s.A, s.B.T, Z, Z],
        [p.lam * s.B, -s.M_D, -p.alpha * s.C, Z],
        [p.alpha * s.G, Z, p.sigma * s.M_P if p.sigma else sp.csr_matrix((nP, nP)), -s.M_P],
        [sp.csr_matrix((nP, nU)), Z, s.K, s.M_P / tau],
    ]
    # multiplier columns and mean-value rows
    extra_cols = []
    extra_rows = []
    if s.c_D is not None:
        col = [sp.csr_matrix((nU, 1)), s.c_D[:, None], sp.csr_matrix((nP, 1)), sp.csr_matrix((nP, 1))]
        extra_cols.append(col)
        extra_rows.append([None, s.c_D[None, :], None, None])
    if s.c_P is not None:
        c = s.c_P[:, None]
        extra_cols.append([sp.csr_matrix((nU, 1)), sp.csr_matrix((nD, 1)), c, sp.csr_matrix((nP, 1))])
        extra_cols.append([sp.csr_matrix((nU, 1)), sp.csr_matrix((nD, 1)), sp.csr_matrix((nP, 1)), c])
        extra_rows.append([None, None, c.T, None])
        extra_rows.append([None, None, None, c.T])
    k = len(extra_cols)
    blocks = []
    for i in range(4):
        blocks.append(rows[i] + [extra_cols[e][i] for e in range(k)])
    for r in extra_rows:
        blocks.append(r + [None] * k)
    return sp.bmat(blocks, format="csr")


def initial_fluid_content(system: DiscreteSystem, l0: np.ndarray) -> np.ndarray:
    """M_0 with (M_0, N) = l0(N) for all N in P_s."""
    return system.project_P(l0)


def run(
    system: DiscreteSystem,
    partition: TimePartition,
    loads: LoadSpec,
    store: bool = True,
    callback=None,
) -> SolutionHistory:
    """March all intervals; one factorization per distinct interval length."""
    Lu, Lp = restrict_loads(loads, partition)
    M0 = initial_fluid_content(system, loads.l0)
    ops: dict[float, StepOperator] = {}
    J = partition.J
    s = system
    shape = (J if store else 0,)
    U = np.zeros(shape + (s.nU,))
    Ptot = np.zeros(shape + (s.nD,))
    P = np.zeros(shape + (s.nP,))
    M = np.zeros(shape + (s.nP,))
    mult = None
    M_prev = M0
    for j, tau in enumerate(partition.lengths):
        key = float(np.float64(tau).round(15))
        if key not in ops:
            ops[key] = StepOperator(system, float(tau))
        u, pt, p, m, r = ops[key].solve(Lu[j], Lp[j], M_prev)
        if store:
            U[j], Ptot[j], P[j], M[j] = u, pt, p, m
            if r.size:
                if mult is None:
                    mult = np.zeros((J, r.size))
                mult[j] = r
        if callback is not None:
            callback(j, u, pt, p, m)
        M_prev = m
    if not store:
        U, Ptot, P, M = (x.reshape(0, x.shape[1]) for x in (U, Ptot, P, M))
    return SolutionHistory(partition, U, Ptot, P, M, M0, mult)


def step_residuals(system: DiscreteSystem, U, Ptot, P, M, M_prev, tau, Lu, Lp):
    """Relative residuals of the four block equations (tested on the
    constrained spaces, i.e. after removing the multiplier direction)."""
    s, p = system, system.params
    r1 = s.A @ U + s.B.T @ Ptot - Lu
    r2 = p.lam * (s.B @ U) - s.M_D @ Ptot - p.alpha * (s.C @ P)
    r3 = p.alpha * (s.G @ U) + p.sigma * (s.M_P @ P) - s.M_P @ M
    r4 = s.M_P @ (M - M_prev) / tau + s.K @ P - Lp
    r2 = _drop_direction(r2, s.c_D)
    r3 = _drop_direction(r3, s.c_P)
    r4 = _drop_direction(r4, s.c_P)
    scale1 = np.linalg.norm(s.A @ U) + np.linalg.norm(s.B.T @ Ptot) + np.linalg.norm(Lu)
    scale2 = np.linalg.norm(p.lam * (s.B @ U)) + np.linalg.norm(s.M_D @ Ptot) + np.linalg.norm(p.alpha * (s.C @ P))
    scale3 = np.linalg.norm(p.alpha * (s.G @ U)) + np.linalg.norm(p.sigma * (s.M_P @ P)) + np.linalg.norm(s.M_P @ M)
    scale4 = np.linalg.norm(s.M_P @ (M - M_prev) / tau) + np.linalg.norm(s.K @ P) + np.linalg.norm(Lp)
    out = []
    for r, sc in zip((r1, r2, r3, r4), (scale1, scale2, scale3, scale4)):
        out.append(float(np.linalg.norm(r) / sc) if sc > 0 else float(np.linalg.norm(r)))
    return out


def _drop_direction(r, c):
    """Component of a residual vector that annihilates mean-zero test functions
    is removed: the equation only holds against mean-free tests."""
    if c is None:
        return r
    # r is tested against basis functions; mean-free tests are x with c.x = 0,
    # so r is admissible up to a multiple of c
    return r - (r @ c) / (c @ c) * c
