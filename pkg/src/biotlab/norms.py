"""Energy, dual, trial and test norms, and the Terzaghi error functional."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import terzaghi as tz
from .assembly import DiscreteSystem, MassSolver
from .fespace import Spaces, evaluation_matrix
from .params import gamma as gamma_of
from .quadrature import gauss_interval
from .stepper import LoadSpec, SolutionHistory, TimePartition, dt, restrict_loads

# ---------------------------------------------------------------------------
# dual norms


def _energy_solver(system: DiscreteSystem, which: str) -> MassSolver:
    key = "energy_" + which
    if key not in system._cache:
        if which == "P":
            system._cache[key] = MassSolver(system.K, system.c_P)
        else:
            system._cache[key] = MassSolver(system.A, None)
    return system._cache[key]


def dual_norm_sq(system: DiscreteSystem, ell, which: str = "P"):
    """<l, X^{-1} l> for X = K (pressure) or A (displacement).

    ``ell`` holds pairings with the free basis; a 2D array is read row-wise
    and gives one value per row.  On a mean-free space the bordered solve
    returns the minimiser in the constrained space, so the value does not
    depend on how the constant direction of ``ell`` is chosen.
    """
    ell = np.asarray(ell, dtype=float)
    if ell.ndim == 1:
        x = _energy_solver(system, which).solve(ell)
        return max(float(ell @ x), 0.0)
    if ell.shape[0] == 0:
        return np.zeros(0)
    x = _energy_solver(system, which).solve(ell.T).T
    return np.maximum(np.einsum("ij,ij->i", ell, x), 0.0)


def dual_norm_P(system: DiscreteSystem, ell) -> float:
    """Norm of a functional on P_s, dual to the energy norm sqrt(q^T K q)."""
    return float(np.sqrt(dual_norm_sq(system, np.asarray(ell, dtype=float).ravel(), "P")))


# ---------------------------------------------------------------------------
# trial norm of a discrete history


@dataclass
class NormReport:
    """Squared terms of the discrete trial norm plus the three extra terms
    of the norm equivalence.  Time integrals are exact sums over intervals."""

    u_energy: float
    ptot_l2: float
    dt_m_plus_lp: float
    m0_dual: float
    constitutive: float
    fluid_content: float
    lam_div: float
    p_l2: float
    m_linf: float

    @property
    def trial(self) -> float:
        """Squared trial norm."""
        return (self.u_energy + self.ptot_l2 + self.dt_m_plus_lp + self.m0_dual
                + self.constitutive + self.fluid_content)

    @property
    def extended(self) -> float:
        return self.trial + self.lam_div + self.p_l2 + self.m_linf

    def rows(self):
        return list(asdict(self).items()) + [("trial", self.trial), ("extended", self.extended)]


def trial_norm(history: SolutionHistory, system: DiscreteSystem) -> NormReport:
    s, prm = system, system.params
    tau = history.partition.lengths
    U, Pt, P, M = history.U, history.Ptot, history.P, history.M
    g = gamma_of(prm, s.spaces.selection)

    def wsum(values):
        return float(tau @ values)

    def quad(X, Y, Mat):
        # row-wise X_j^T Mat Y_j
        return np.einsum("ij,ij->i", X, (Mat @ Y.T).T)

    u_energy = wsum(quad(U, U, s.A))
    ptot = wsum(quad(Pt, Pt, s.M_D)) / prm.mu
    ell = (s.M_P @ dt(M, history.M0, history.partition).T).T + (s.K @ P.T).T
    dtm = wsum(dual_norm_sq(s, ell))
    m0 = dual_norm_sq(s, s.M_P @ history.M0)

    DsU = s.project_D(s.B @ U.T).T
    PdP = s.project_D(s.C @ P.T).T
    r2 = prm.lam * DsU - Pt - prm.alpha * PdP
    constitutive = wsum(quad(r2, r2, s.M_D)) / (prm.mu + prm.lam)
    PpDsU = s.project_P(s.C.T @ DsU.T).T
    r3 = prm.alpha * PpDsU + prm.sigma * P - M
    fluid = g * wsum(quad(r3, r3, s.M_P))

    lam_div = prm.lam * wsum(quad(DsU, DsU, s.M_D))
    p_l2 = wsum(quad(P, P, s.M_P)) / g
    m_sup = dual_norm_sq(s, (s.M_P @ M.T).T)
    m_linf = float(m_sup.max()) if m_sup.size else 0.0
    return NormReport(u_energy, ptot, dtm, m0, constitutive, fluid, lam_div, p_l2, m_linf)


def data_norm(system: DiscreteSystem, loads: LoadSpec, partition: TimePartition) -> float:
    """Squared data norm: int ||L_u||^2_{U*} + ||L_p||^2_{P*} plus ||L_0||^2_{P*}."""
    Lu, Lp = restrict_loads(loads, partition)
    tau = partition.lengths
    total = tau @ dual_norm_sq(system, np.asarray(Lu), "U")
    total += tau @ dual_norm_sq(system, np.asarray(Lp), "P")
    return float(total + dual_norm_sq(system, loads.l0, "P"))


def stability_ratio(history, system, loads) -> float:
    """Squared trial norm of a solution over its squared data norm."""
    return trial_norm(history, system).trial / data_norm(system, loads, history.partition)


# ---------------------------------------------------------------------------
# discrete integration by parts


def integration_by_parts(system: DiscreteSystem, M, M0):
    """Both sides of the telescoping identity, for every j:

        2 sum_{k<=j} <M_k - M_{k-1}, L^{-1} M_k>
            = |M_j|^2 + sum_{k<=j} |M_k - M_{k-1}|^2 - |M_0|^2

    with dual norms on P_s*.  Returns (lhs, rhs, scale) arrays.
    """
    s = system
    M = np.asarray(M, dtype=float)
    full = np.vstack([M0[None], M])
    ell = (s.M_P @ full.T).T
    x = _energy_solver(s, "P").solve(ell.T).T
    jumps = ell[1:] - ell[:-1]
    jump_x = x[1:] - x[:-1]
    lhs = np.cumsum(2 * np.einsum("ij,ij->i", jumps, x[1:]))
    sq = np.einsum("ij,ij->i", ell, x)
    jump_sq = np.cumsum(np.einsum("ij,ij->i", jumps, jump_x))
    rhs = sq[1:] + jump_sq - sq[0]
    scale = sq[1:] + jump_sq + sq[0]
    return lhs, rhs, scale


def integration_by_parts_defect(system: DiscreteSystem, M, M0) -> float:
    lhs, rhs, scale = integration_by_parts(system, M, M0)
    if not scale.size:
        return 0.0
    return float(np.max(np.abs(lhs - rhs) / np.where(scale > 0, scale, 1.0)))

# ---------------------------------------------------------------------------
# Terzaghi error


def _time_nodes(knots, points, first_points):
    """Gauss nodes and weights (including |I_j|) per interval."""
    nodes, weights, owner = [], [], []
    for j, (a, b) in enumerate(zip(knots[:-1], knots[1:])):
        x, w = gauss_interval(first_points if j == 0 else points)
        nodes.append(a + (b - a) * x)
        weights.append((b - a) * w)
        owner.append(np.full(len(x), j))
    return np.concatenate(nodes), np.concatenate(weights), np.concatenate(owner)


def _broken_fields(history: SolutionHistory, spaces: Spaces, lam):
    """Discrete u_z, P_tot, P at the barycentric points of every cell,
    as linear maps applied to the per-interval coefficient arrays."""
    U, D, P = spaces.U, spaces.D, spaces.P
    Eu = evaluation_matrix(U, lam, derivative=0)[:, U.free_dofs]
    Ed = evaluation_matrix(D, lam)[:, D.free_dofs]
    Ep = evaluation_matrix(P, lam)[:, P.free_dofs]
    return {"u_z": (Eu, history.U), "p_tot": (Ed, history.Ptot), "p": (Ep, history.P)}


def _weights(setup):
    p = setup.params
    return {"u_z": 2 * p.mu, "p_tot": 1 / p.mu, "p": p.sigma}


def terzaghi_error(
    history: SolutionHistory,
    spaces: Spaces,
    setup: tz.TerzaghiSetup,
    method: str = "quadrature",
    space_points: int = 2,
    time_points: int = 2,
    first_points: int = 2,
    squared: bool = False,
) -> float:
    """Space-time error in u (energy), p_tot (weighted L2) and p (weighted L2).

    ``method='quadrature'`` applies Gauss rules with ``space_points`` per cell
    and ``time_points`` per interval (``first_points`` on the first one, where
    the initial layer sits).  ``method='exact'`` integrates the truncated
    series in closed form.  The square root is returned unless ``squared``.
    """
    if method == "exact":
        e2 = _terzaghi_error_exact(history, spaces, setup)
    elif method == "quadrature":
        e2 = _terzaghi_error_quadrature(history, spaces, setup, space_points, time_points, first_points)
    else:
        raise ValueError(f"unknown method {method!r}")
    e2 = max(e2, 0.0)
    return e2 if squared else float(np.sqrt(e2))


def _terzaghi_error_quadrature(history, spaces, setup, space_points, time_points, first_points):
    mesh = spaces.mesh
    xq, wq = gauss_interval(space_points)
    lam = np.stack([1 - xq, xq], axis=1)
    z = (mesh.vertices[mesh.cells][:, :, 0] @ lam.T).ravel()
    W = (mesh.cell_measures()[:, None] * wq[None, :]).ravel()
    fields = _broken_fields(history, spaces, lam)
    weights = _weights(setup)
    affine = tz.affine_maps(setup)
    table = tz.PressureTable(setup, z)
    t, wt, owner = _time_nodes(history.partition.knots, time_points, first_points)
    chunk = max(1, int(4e6 // max(z.size, 1)))
    total = 0.0
    for s0 in range(0, t.size, chunk):
        sl = slice(s0, s0 + chunk)
        p = table(t[sl])
        rows = owner[sl]
        acc = np.zeros_like(p)
        for name, (E, coeffs) in fields.items():
            c, d = affine[name]
            discrete = (E @ coeffs[rows].T).T
            acc += weights[name] * (c * p + d - discrete) ** 2
        total += float(wt[sl] @ (acc @ W))
    return total


def _cell_linear_parts(history, spaces):
    """Midpoint values and slopes of the broken linear fields per interval."""
    mesh = spaces.mesh
    z = mesh.vertices[:, 0]
    h = np.diff(z)
    if mesh.dim != 1 or np.any(h <= 0):
        raise ValueError("closed-form error needs an ordered interval mesh")
    nv = len(z)
    U = spaces.U.expand(history.U)
    Pt = history.Ptot
    P = spaces.P.expand(history.P)
    U0, U1, Um = U[:, : nv - 1], U[:, 1:nv], U[:, nv:]
    mids = {
        "u_z": (U1 - U0) / h,
        "p_tot": (Pt[:, :-1] + Pt[:, 1:]) / 2,
        "p": (P[:, :-1] + P[:, 1:]) / 2,
    }
    slopes = {
        "u_z": 4 * (U0 - 2 * Um + U1) / h**2,
        "p_tot": (Pt[:, 1:] - Pt[:, :-1]) / h,
        "p": (P[:, 1:] - P[:, :-1]) / h,
    }
    return z, h, mids, slopes


def _terzaghi_error_exact(history, spaces, setup):
    """Closed-form integral: with e = c p - R per field,
    int int e^2 = c^2 int ||p||^2 - 2 c (int p, R) + |I| ||R||^2."""
    z, h, mids, slopes = _cell_linear_parts(history, spaces)
    weights = _weights(setup)
    affine = tz.affine_maps(setup)
    knots = history.partition.knots
    tau = np.diff(knots)
    cc = sum(weights[f] * affine[f][0] ** 2 for f in weights)
    first = cc * tz.squared_norm_integrals(setup, knots)
    R = {f: mids[f] - affine[f][1] for f in weights}
    last = tau * sum(
        weights[f] * (h * R[f] ** 2 + slopes[f] ** 2 * h**3 / 12) for f in weights
    ).sum(axis=1)
    Xm = sum(weights[f] * affine[f][0] * R[f] for f in weights)
    Xs = sum(weights[f] * affine[f][0] * slopes[f] for f in weights)
    E, _ = tz.time_integrals(setup, knots)
    b = setup.coefficients()
    cross = np.zeros(len(tau))
    step = 500
    for m0 in range(0, setup.n_terms, step):
        sl = slice(m0, m0 + step)
        S0, S1 = tz.space_moments(setup, z, sl)
        Y = S0 @ Xm.T + S1 @ Xs.T
        cross += np.einsum("m,mj,mj->j", b[sl], E[sl], Y)
    return float((first - 2 * cross + last).sum())
