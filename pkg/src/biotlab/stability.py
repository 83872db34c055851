"""Numerical checks of the structural assumptions behind the discretization.

Every constant is computed from a dense generalized eigenproblem on the
constrained (essential- and mean-value-reduced) spaces; sizes above the
dense limit are refused.
"""
from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from . import assembly
from .assembly import DiscreteSystem
from .errors import DegenerateGram, InteriorVertexViolation, TooLarge
from .fespace import FeSpace, Spaces, barycentric_gradients, build_spaces, evaluation_matrix, shape_functions
from .linalg import DENSE_LIMIT, generalized_symmetric_eig
from .mesh import Mesh, interval_mesh, locate, quality, refine_uniform
from .norms import stability_ratio
from .params import TERZAGHI_CONFIG, BiotParameters, select_spaces
from .params import gamma as gamma_of
from .quadrature import cell_rule
from .stepper import LoadSpec, TimePartition, run


def _dense(A):
    return A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)


def constraint_basis(n: int, c: np.ndarray | None) -> np.ndarray:
    """Orthonormal basis of {x : c.x = 0} (identity when c is None)."""
    if c is None:
        return np.eye(n)
    return sla.null_space(np.asarray(c, dtype=float)[None, :])


def _check_size(n, limit):
    if n > limit:
        raise TooLarge(f"dense problem of size {n} exceeds the limit {limit}")


def _quadrature(mesh: Mesh, degree: int):
    lam, w = cell_rule(mesh.dim, degree)
    scale = mesh.cell_measures() / w.sum()
    return lam, scale[:, None] * w[None, :]


# ---------------------------------------------------------------------------
# (H1): energy products agree with the quadratured energies


def check_h1(spaces: Spaces, system: DiscreteSystem, samples: int = 10, seed: int = 0,
             tol: float = 1e-12) -> tuple[bool, float]:
    """Compare U^T A U with 2 mu |sym grad U|^2 and P^T K P with kappa |grad P|^2
    evaluated pointwise on random coefficient vectors."""
    U, P, prm = spaces.U, spaces.P, system.params
    rng = np.random.default_rng(seed)
    lam, w = _quadrature(spaces.mesh, 2 * U.degree)
    worst = 0.0
    for _ in range(samples):
        u = U.expand(rng.standard_normal(U.n_free))
        g = U.gradient(u, lam)
        if U.components == 1:
            g = g[:, :, None, :]
        sym = (g + np.swapaxes(g, 2, 3)) / 2
        direct = 2 * prm.mu * float(np.sum(w * np.einsum("cqij,cqij->cq", sym, sym)))
        algebraic = float(u[U.free_dofs] @ (system.A @ u[U.free_dofs]))
        worst = max(worst, abs(direct - algebraic) / abs(direct))

        p = P.expand(rng.standard_normal(P.n_free))
        gp = P.gradient(p, lam)
        direct = prm.kappa * float(np.sum(w * np.einsum("cqd,cqd->cq", gp, gp)))
        algebraic = float(p[P.free_dofs] @ (system.K @ p[P.free_dofs]))
        worst = max(worst, abs(direct - algebraic) / abs(direct))
    return worst <= tol, worst


# ---------------------------------------------------------------------------
# (H2): discrete Stokes inf-sup pair


def lbb_constants(system: DiscreteSystem, limit: int = DENSE_LIMIT) -> tuple[float, float]:
    """(c, C) with c |q|^2 <= mu |D_s^* q|^2_{U*} <= C |q|^2 on D_s."""
    mesh = system.spaces.mesh
    if mesh.dim > 1 and not quality(mesh).interior_vertex_ok:
        raise InteriorVertexViolation("some cell has all its vertices on the boundary")
    _check_size(system.nD + system.nU, limit)
    A, B, MD = _dense(system.A), _dense(system.B), _dense(system.M_D)
    Z = constraint_basis(system.nD, system.c_D)
    BZ = Z.T @ B
    S = system.params.mu * BZ @ sla.cho_solve(sla.cho_factor(A), BZ.T)
    ev = generalized_symmetric_eig(S, Z.T @ MD @ Z, limit)
    return float(ev[0]), float(ev[-1])


# ---------------------------------------------------------------------------
# (H3): energy stability of the L2 projection


def same_space_on(space: FeSpace, mesh: Mesh) -> FeSpace:
    return FeSpace(mesh, space.degree, space.components, space.essential_tags, space.meanfree, space.name)


def refined(space: FeSpace, levels: int = 2) -> FeSpace:
    mesh = space.mesh
    for _ in range(levels):
        mesh = refine_uniform(mesh)
    return same_space_on(space, mesh)


def prolongation(coarse: FeSpace, fine: FeSpace) -> sp.csr_matrix:
    """Coefficients on ``fine`` of the coarse basis functions (nested meshes)."""
    pts = fine.node_coordinates()
    cells, bary = locate(coarse.mesh, pts)
    vals, _ = shape_functions(coarse.degree, coarse.mesh.dim, bary)
    cols = coarse.cell_dofs()[cells]
    rows = np.broadcast_to(np.arange(len(pts))[:, None], cols.shape)
    keep = np.abs(vals) > 1e-14
    return sp.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=(fine.ndofs, coarse.ndofs))


def projection_h1_stability(coarse: FeSpace, fine: FeSpace, limit: int = DENSE_LIMIT) -> float:
    """max over fine w of |Q w|_P / |w|_P, Q the L2 projection onto ``coarse``."""
    _check_size(fine.n_free, limit)
    R = prolongation(coarse, fine)[fine.free_dofs][:, coarse.free_dofs]
    Mf = assembly.mass(fine)[fine.free_dofs][:, fine.free_dofs]
    Kf = assembly.stiffness(fine)[fine.free_dofs][:, fine.free_dofs]
    Mc = _dense(R.T @ Mf @ R)
    Kc = _dense(R.T @ Kf @ R)
    Q = sla.solve(Mc, _dense(R.T @ Mf), assume_a="pos")
    c = assembly.integrals(fine)[fine.free_dofs] if fine.meanfree else None
    Z = constraint_basis(fine.n_free, c)
    S = Z.T @ Q.T @ Kc @ Q @ Z
    ev = generalized_symmetric_eig(S, Z.T @ _dense(Kf) @ Z, limit)
    return float(np.sqrt(max(ev[-1], 0.0)))


# ---------------------------------------------------------------------------
# (H4): P_s inside D_s


def check_inclusion(P: FeSpace, D: FeSpace, tol: float = 1e-12) -> tuple[bool, float]:
    """Project every constrained P basis function onto D (same mesh) and
    return (ok, max relative squared residual)."""
    mesh = P.mesh
    lam, w = _quadrature(mesh, 2 * max(P.degree, D.degree, 1))
    W = np.eye(P.ndofs)[:, P.free_dofs]
    if P.meanfree:
        ones = P.interpolate(lambda x: np.ones(len(x)))
        c = assembly.integrals(P)
        W = W - np.outer(ones, c[P.free_dofs]) / float(c @ ones)
    Md = assembly.mass(D)[D.free_dofs][:, D.free_dofs]
    cD = assembly.integrals(D)[D.free_dofs] if D.meanfree else None
    rhs = (assembly.mass(D, P) @ W)[D.free_dofs]
    X = np.zeros((D.ndofs, W.shape[1]))
    X[D.free_dofs] = assembly.MassSolver(Md, cD).solve(rhs)
    Ep, Ed = evaluation_matrix(P, lam), evaluation_matrix(D, lam)
    r = Ep @ W - Ed @ X
    v = Ep @ W
    wf = w.ravel()
    rel = (wf @ r**2) / (wf @ v**2)
    worst = float(rel.max()) if rel.size else 0.0
    return worst <= tol, worst


# ---------------------------------------------------------------------------
# discrete elliptic regularity


def jump_gram(P: FeSpace, config, kappa: float) -> sp.csr_matrix:
    """kappa * sum_F |F| / {h} * [grad N . n]^2 over interior faces and the
    natural pressure boundary (one-sided trace there), for P1 functions."""
    if P.degree != 1:
        raise ValueError("the face-jump Gram matrix is implemented for P1 only")
    mesh = P.mesh
    grads = barycentric_gradients(mesh)  # (nc, dim+1, dim)
    h = mesh.diameters()
    fc = mesh.face_cells
    natural = np.zeros(len(fc), dtype=bool)
    natural[mesh.faces_with_tags(config.p_natural)] = True
    faces = np.flatnonzero((fc[:, 1] >= 0) | natural)
    c0, c1 = fc[faces, 0], fc[faces, 1]
    inner = c1 >= 0
    n = mesh.normals[faces]
    rows = np.arange(len(faces))
    k = mesh.dim + 1
    g0 = np.einsum("fkd,fd->fk", grads[c0], n)
    g1 = -np.einsum("fkd,fd->fk", grads[np.where(inner, c1, c0)], n) * inner[:, None]
    G = sp.csr_matrix(
        (np.concatenate([g0.ravel(), g1.ravel()]),
         (np.tile(np.repeat(rows, k), 2),
          np.concatenate([mesh.cells[c0].ravel(), mesh.cells[np.where(inner, c1, c0)].ravel()]))),
        shape=(len(faces), P.ndofs),
    )
    havg = np.where(inner, (h[c0] + h[np.where(inner, c1, c0)]) / 2, h[c0])
    weights = kappa * mesh.face_measures()[faces] / havg
    return (G.T @ sp.diags(weights) @ G).tocsr()


def eps_s(system: DiscreteSystem, limit: int = DENSE_LIMIT) -> float:
    """inf over N of |L_s N|_L2 / |N|_{H2, broken}."""
    spaces, prm = system.spaces, system.params
    P = spaces.P
    n = system.nP
    _check_size(n, limit)
    Z = constraint_basis(n, system.c_P)
    if Z.shape[1] == 0:
        raise DegenerateGram("the pressure space is trivial")
    H = _dense(jump_gram(P, spaces.config, prm.kappa)[P.free_dofs][:, P.free_dofs])
    HZ = Z.T @ H @ Z
    if not np.any(np.abs(HZ) > 0):
        raise DegenerateGram("the broken H2 Gram matrix vanishes on the space")
    K, M = _dense(system.K), _dense(system.M_P)
    S = K @ sla.solve(M, K, assume_a="pos")
    ev = generalized_symmetric_eig(HZ, Z.T @ S @ Z, limit)
    top = ev[-1]
    if top <= 0:
        raise DegenerateGram("the broken H2 Gram matrix vanishes on the space")
    return float(1 / np.sqrt(top))


# ---------------------------------------------------------------------------
# inf-sup constant of the space-time form


@dataclass
class SpaceTimeOperators:
    """Dense space-time matrix of b_st (test rows, trial columns) and the Gram
    matrices of the trial and test norms, in constrained coordinates.

    Trial ordering per interval: U_j, Ptot_j, P_j, M_j; then M_0.
    Test ordering per interval:  V_j, Qtot_j, Q_j, N_j; then N_0.
    """

    b: np.ndarray
    trial_gram: np.ndarray
    test_gram: np.ndarray
    bases: tuple  # (Z_D, Z_P)
    sizes: tuple  # (nU, nD, nP) reduced


def space_time_operators(system: DiscreteSystem, partition: TimePartition,
                         limit: int = DENSE_LIMIT) -> SpaceTimeOperators:
    s, prm = system, system.params
    ZD = constraint_basis(s.nD, s.c_D)
    ZP = constraint_basis(s.nP, s.c_P)
    nU, nD, nP = s.nU, ZD.shape[1], ZP.shape[1]
    J = partition.J
    blk = nU + nD + 2 * nP
    N = J * blk + nP
    _check_size(N, limit)
    A = _dense(s.A)
    B = ZD.T @ _dense(s.B)
    G = ZP.T @ _dense(s.G)
    C = ZD.T @ _dense(s.C) @ ZP
    MD = ZD.T @ _dense(s.M_D) @ ZD
    MP = ZP.T @ _dense(s.M_P) @ ZP
    K = ZP.T @ _dense(s.K) @ ZP
    g = gamma_of(prm, s.spaces.selection)
    lam, alpha, sigma, mu = prm.lam, prm.alpha, prm.sigma, prm.mu

    def sl(j, k):
        o = j * blk + (0, nU, nU + nD, nU + nD + nP)[k]
        return slice(o, o + (nU, nD, nP, nP)[k])

    m0 = slice(J * blk, N)
    bmat = np.zeros((N, N))
    G2 = np.zeros((N, N))
    # rows of the trial-norm terms as linear maps of Y1
    rows_dual, rows_cons, rows_fluid = [], [], []
    G1 = np.zeros((N, N))
    for j, tau in enumerate(partition.lengths):
        u, pt, p, m = (sl(j, k) for k in range(4))
        prev = sl(j - 1, 3) if j else m0
        bmat[u, u] = tau * A
        bmat[u, pt] = tau * B.T
        bmat[pt, u] = tau * lam * B
        bmat[pt, pt] = -tau * MD
        bmat[pt, p] = -tau * alpha * C
        bmat[p, u] = tau * alpha * G
        bmat[p, p] = tau * sigma * MP
        bmat[p, m] = -tau * MP
        bmat[m, m] += MP
        bmat[m, prev] -= MP
        bmat[m, p] = tau * K
        G2[u, u] = tau * A
        G2[pt, pt] = tau * (mu + lam) * MD
        G2[p, p] = tau / g * MP
        G2[m, m] = tau * K

        G1[u, u] += tau * A
        G1[pt, pt] += tau / mu * MD
        L = np.zeros((nP, N))
        L[:, m] += MP / tau
        L[:, prev] -= MP / tau
        L[:, p] += K
        rows_dual.append((tau, L))
        R = np.zeros((nD, N))
        R[:, u] = lam * B
        R[:, pt] = -MD
        R[:, p] = -alpha * C
        rows_cons.append((tau / (mu + lam), R))
        F = np.zeros((nP, N))
        F[:, u] = alpha * G
        F[:, p] = sigma * MP
        F[:, m] = -MP
        rows_fluid.append((tau * g, F))
    bmat[m0, m0] = MP
    G2[m0, m0] = K
    L0 = np.zeros((nP, N))
    L0[:, m0] = MP
    rows_dual.append((1.0, L0))

    for weights, inner in ((rows_dual, K), (rows_cons, MD), (rows_fluid, MP)):
        fac = sla.cho_factor(inner)
        for wgt, L in weights:
            G1 += wgt * L.T @ sla.cho_solve(fac, L)
    G1 = (G1 + G1.T) / 2
    return SpaceTimeOperators(bmat, G1, G2, (ZD, ZP), (nU, nD, nP))


def bst_constants(system: DiscreteSystem, partition: TimePartition,
                  limit: int = DENSE_LIMIT) -> tuple[float, float]:
    """(inf-sup constant, boundedness constant) of b_st with respect to the
    trial norm on Y_1 and the test norm on Y_2."""
    ops = space_time_operators(system, partition, limit)
    try:
        fac = sla.cho_factor(ops.test_gram)
    except sla.LinAlgError:
        raise DegenerateGram("test Gram matrix is not positive definite") from None
    S = ops.b.T @ sla.cho_solve(fac, ops.b)
    try:
        ev = generalized_symmetric_eig(S, ops.trial_gram, limit)
    except Exception as exc:  # NotSPD
        raise DegenerateGram(str(exc)) from None
    return float(np.sqrt(max(ev[0], 0.0))), float(np.sqrt(max(ev[-1], 0.0)))


def bst_infsup(system: DiscreteSystem, partition: TimePartition, limit: int = DENSE_LIMIT) -> float:
    return bst_constants(system, partition, limit)[0]


# ---------------------------------------------------------------------------
# report


@dataclass
class AssumptionReport:
    h1_exact: bool
    h1_defect: float
    lbb_c: float
    lbb_C: float
    proj_h1_stability: float
    inclusion_ok: bool | None
    eps_s: float
    bst_infsup: float | None

    def rows(self):
        """(name, value, status) triples."""
        out = []
        for name, value in asdict(self).items():
            if value is None:
                out.append((name, "", "skipped"))
            elif isinstance(value, bool):
                out.append((name, int(value), "ok" if value else "fail"))
            else:
                ok = value > 0 or name == "h1_defect"
                out.append((name, value, "ok" if ok else "fail"))
        return out

    @property
    def passed(self) -> bool:
        return all(status != "fail" for _, _, status in self.rows())


def assumption_report(system: DiscreteSystem, refinements: int = 2, J: int = 1,
                      limit: int = DENSE_LIMIT) -> AssumptionReport:
    spaces, prm = system.spaces, system.params
    ok, defect = check_h1(spaces, system)
    c, C = lbb_constants(system, limit)
    proj = projection_h1_stability(spaces.P, refined(spaces.P, refinements), limit)
    incl = check_inclusion(spaces.P, spaces.D)[0] if prm.sigma == 0 else None
    eps = eps_s(system, limit)
    try:
        beta = bst_infsup(system, TimePartition.uniform(prm.T, J), limit)
    except TooLarge:
        beta = None
    return AssumptionReport(ok, defect, c, C, proj, incl, eps, beta)


SWEEP = {"lam": (1.0, 1e4, 1e8), "sigma": (0.0, 1e-6, 1.0), "kappa": (1e-8, 1.0)}


@dataclass
class SweepPoint:
    lam: float
    sigma: float
    kappa: float
    infsup: float
    ratio: float


def robustness_sweep(n: int = 4, J: int = 3, T: float = 1.0, limit: int = DENSE_LIMIT) -> list[SweepPoint]:
    """Discrete inf-sup constant and solved stability ratio on the column
    with n cells and J steps, over the product of the values in SWEEP
    (mu = alpha = 1).  The solve is driven by a unit top traction."""
    cfg = TERZAGHI_CONFIG
    base = BiotParameters(mu=1.0, lam=1.0, alpha=1.0, sigma=0.0, kappa=1.0, T=T)
    partition = TimePartition.uniform(T, J)
    out = []
    for lam, sigma, kappa in itertools.product(SWEEP["lam"], SWEEP["sigma"], SWEEP["kappa"]):
        prm = base.with_(lam=lam, sigma=sigma, kappa=kappa)
        spaces = build_spaces(interval_mesh(1.0, n), cfg, select_spaces(cfg, sigma))
        system = assembly.assemble(spaces, prm)
        loads = LoadSpec.from_data(spaces, cfg, g_u=lambda x, nrm, t: np.ones(len(x)))
        ratio = stability_ratio(run(system, partition, loads), system, loads)
        out.append(SweepPoint(lam, sigma, kappa, bst_infsup(system, partition, limit), ratio))
    return out
