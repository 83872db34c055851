"""Galerkin matrices, load vectors and L2 projections.

All matrices come in two flavours: ``full`` over every dof of a space, and
reduced to the free dofs (essential dofs removed).  Mean-zero spaces keep
their full free dof set and carry a constraint vector ``c`` with
``c @ x = integral of x``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .fespace import FeSpace, Spaces, barycentric_gradients, shape_functions
from .linalg import Factorization, csr
from .params import BiotParameters
from .quadrature import cell_rule, face_points


def _scatter(rows, cols, vals, shape):
    r = np.broadcast_to(rows[:, :, None], vals.shape).ravel()
    c = np.broadcast_to(cols[:, None, :], vals.shape).ravel()
    return csr(sp.coo_matrix((vals.ravel(), (r, c)), shape=shape))


def _weights(mesh, degree):
    lam, w = cell_rule(mesh.dim, degree)
    return lam, mesh.cell_measures()[:, None] * w[None, :] * (1 if mesh.dim == 1 else 2)


def _grads(space: FeSpace, lam):
    """(nc, q, nloc, dim) physical gradients of the local scalar basis."""
    _, dphi = shape_functions(space.degree, space.mesh.dim, lam)
    return np.einsum("qlk,ckd->cqld", dphi, barycentric_gradients(space.mesh))


def mass(X: FeSpace, Y: FeSpace | None = None) -> sp.csr_matrix:
    """Rows: basis of X, columns: basis of Y (scalar spaces)."""
    Y = X if Y is None else Y
    lam, wq = _weights(X.mesh, X.degree + Y.degree)
    px, _ = shape_functions(X.degree, X.mesh.dim, lam)
    py, _ = shape_functions(Y.degree, Y.mesh.dim, lam)
    loc = np.einsum("cq,qi,qj->cij", wq, px, py)
    return _scatter(X.cell_dofs(), Y.cell_dofs(), loc, (X.ndofs, Y.ndofs))


def stiffness(X: FeSpace, kappa: float = 1.0) -> sp.csr_matrix:
    lam, wq = _weights(X.mesh, max(2 * X.degree - 2, 0))
    G = _grads(X, lam)
    loc = kappa * np.einsum("cq,cqid,cqjd->cij", wq, G, G)
    return _scatter(X.cell_dofs(), X.cell_dofs(), loc, (X.ndofs, X.ndofs))


def elasticity(U: FeSpace, mu: float) -> sp.csr_matrix:
    """2 mu (sym grad u, sym grad v) on a vector space."""
    lam, wq = _weights(U.mesh, 2 * U.degree - 2)
    G = _grads(U, lam)
    d = U.components
    lap = np.einsum("cq,cqid,cqjd->cij", wq, G, G)
    blocks = []
    for c in range(d):
        row = []
        for e in range(d):
            cross = np.einsum("cq,cqi,cqj->cij", wq, G[..., e], G[..., c])
            row.append(mu * ((c == e) * lap + cross))
        blocks.append(row)
    out = None
    for c in range(d):
        for e in range(d):
            M = _scatter(U.cell_dofs(c), U.cell_dofs(e), blocks[c][e], (U.ndofs, U.ndofs))
            out = M if out is None else out + M
    return csr(out)


def divergence(Q: FeSpace, U: FeSpace) -> sp.csr_matrix:
    """Rows: scalar basis of Q, columns: vector basis of U, entries (div phi, q)."""
    lam, wq = _weights(U.mesh, U.degree - 1 + Q.degree)
    G = _grads(U, lam)
    pq, _ = shape_functions(Q.degree, Q.mesh.dim, lam)
    out = None
    for c in range(U.components):
        loc = np.einsum("cq,qi,cqj->cij", wq, pq, G[..., c])
        M = _scatter(Q.cell_dofs(), U.cell_dofs(c), loc, (Q.ndofs, U.ndofs))
        out = M if out is None else out + M
    return csr(out)


def integrals(X: FeSpace) -> np.ndarray:
    """Integral of every scalar basis function."""
    lam, wq = _weights(X.mesh, X.degree)
    phi, _ = shape_functions(X.degree, X.mesh.dim, lam)
    vals = np.einsum("cq,qi->ci", wq, phi)
    return np.bincount(X.cell_dofs().ravel(), vals.ravel(), minlength=X.ndofs)


def quadrature_points(mesh, degree):
    """Physical quadrature points (nc, q, dim) and weights (nc, q)."""
    lam, wq = _weights(mesh, degree)
    x = np.einsum("qk,ckd->cqd", lam, mesh.vertices[mesh.cells])
    return lam, x, wq


def load_vector(X: FeSpace, f, degree: int = 6) -> np.ndarray:
    """Pairings (f, phi_i) for f(x) -> (npts,) or (npts, components)."""
    lam, x, wq = quadrature_points(X.mesh, degree)
    phi, _ = shape_functions(X.degree, X.mesh.dim, lam)
    nc, q, d = x.shape
    vals = np.asarray(f(x.reshape(-1, d)), dtype=float).reshape(nc, q, -1)
    out = np.zeros(X.ndofs)
    for c in range(X.components):
        loc = np.einsum("cq,cq,qi->ci", wq, vals[..., c], phi)
        out += np.bincount(X.cell_dofs(c).ravel(), loc.ravel(), minlength=X.ndofs)
    return out


def boundary_load(X: FeSpace, tags, g, npts: int = 4) -> np.ndarray:
    """Pairings of g(x, n) on the faces with the given tags against the basis."""
    m = X.mesh
    out = np.zeros(X.ndofs)
    for f in m.faces_with_tags(tags):
        c = m.face_cells[f, 0]
        local = m.cells[c] if m.dim == 1 else m.cell_edges[c]
        i = int(np.flatnonzero(local == (f if m.dim == 2 else m.faces[f, 0]))[0])
        lam, w = face_points(m.dim, i, npts)
        x = lam @ m.vertices[m.cells[c]]
        phi, _ = shape_functions(X.degree, m.dim, lam)
        vals = np.asarray(g(x, np.broadcast_to(m.normals[f], x.shape)), dtype=float).reshape(len(w), -1)
        scale = m.face_measures()[f]
        for comp in range(X.components):
            np.add.at(out, X.cell_dofs(comp)[c], scale * np.einsum("q,q,qi->i", w, vals[:, comp], phi))
    return out


class MassSolver:
    """L2 projection onto a (possibly mean-zero) space, on free dofs."""

    def __init__(self, M: sp.csr_matrix, c: np.ndarray | None):
        self.M = M
        self.c = c
        n = M.shape[0]
        if c is None:
            self._fac = Factorization(M)
        else:
            self._fac = Factorization(sp.bmat([[M, c[:, None]], [c[None, :], None]]))
        self.n = n

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        if self.c is None:
            return self._fac.solve(rhs)
        if rhs.ndim == 1:
            return self._fac.solve(np.append(rhs, 0.0))[: self.n]
        pad = np.vstack([rhs, np.zeros((1,) + rhs.shape[1:])])
        return self._fac.solve(pad)[: self.n]


def _reduce(M, rows, cols):
    return csr(M[rows][:, cols])


@dataclass(eq=False)
class DiscreteSystem:
    """Block operators of one time step, on free dofs."""

    spaces: Spaces
    params: BiotParameters
    A: sp.csr_matrix
    B: sp.csr_matrix
    G: sp.csr_matrix
    C: sp.csr_matrix
    K: sp.csr_matrix
    M_D: sp.csr_matrix
    M_P: sp.csr_matrix
    c_D: np.ndarray | None
    c_P: np.ndarray | None
    full: dict = field(default_factory=dict, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def nU(self):
        return self.A.shape[0]

    @property
    def nD(self):
        return self.M_D.shape[0]

    @property
    def nP(self):
        return self.M_P.shape[0]

    def mass_solver(self, which: str) -> MassSolver:
        if which not in self._cache:
            if which == "D":
                self._cache[which] = MassSolver(self.M_D, self.c_D)
            else:
                self._cache[which] = MassSolver(self.M_P, self.c_P)
        return self._cache[which]

    def project_D(self, rhs: np.ndarray) -> np.ndarray:
        """L2 projection onto D_s from pairings with the D_s basis."""
        return self.mass_solver("D").solve(rhs)

    def project_P(self, rhs: np.ndarray) -> np.ndarray:
        """L2 projection onto P_s from pairings with the free P_s basis."""
        return self.mass_solver("P").solve(rhs)

    def apply_Ds(self, U: np.ndarray) -> np.ndarray:
        """Discrete divergence: L2 projection of div U onto D_s."""
        return self.project_D(self.B @ U)

    def expand_U(self, U):
        return self.spaces.U.expand(U)

    def expand_P(self, P):
        return self.spaces.P.expand(P)


def assemble(spaces: Spaces, params: BiotParameters) -> DiscreteSystem:
    U, D, P = spaces.U, spaces.D, spaces.P
    full = {
        "A": elasticity(U, params.mu),
        "B": divergence(D, U),
        "G": divergence(P, U),
        "C": mass(D, P),
        "K": stiffness(P, params.kappa),
        "M_D": mass(D),
        "M_P": mass(P),
    }
    fu, fd, fp = U.free_dofs, D.free_dofs, P.free_dofs
    c_D = integrals(D)[fd] if D.meanfree else None
    c_P = integrals(P)[fp] if P.meanfree else None
    return DiscreteSystem(
        spaces,
        params,
        A=_reduce(full["A"], fu, fu),
        B=_reduce(full["B"], fd, fu),
        G=_reduce(full["G"], fp, fu),
        C=_reduce(full["C"], fd, fp),
        K=_reduce(full["K"], fp, fp),
        M_D=_reduce(full["M_D"], fd, fd),
        M_P=_reduce(full["M_P"], fp, fp),
        c_D=c_D,
        c_P=c_P,
        full=full,
    )
