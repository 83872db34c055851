"""Lagrange finite element spaces on interval and triangle meshes.

Scalar nodes are numbered vertices first, then edge midpoints (degree 2).
Degree 0 (one constant per cell) exists only as a discontinuous comparison
space.  Vector spaces are component blocked: dof ``c * n_nodes + node``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import UnsupportedConfig
from .mesh import Mesh
from .params import BoundaryConfig, SpaceSelection


def shape_functions(degree: int, dim: int, lam: np.ndarray):
    """Values (q, nloc) and barycentric derivatives (q, nloc, dim+1)."""
    lam = np.atleast_2d(lam)
    q, k = lam.shape
    if degree == 0:
        return np.ones((q, 1)), np.zeros((q, 1, k))
    if degree == 1:
        return lam.copy(), np.broadcast_to(np.eye(k), (q, k, k)).copy()
    if degree != 2:
        raise UnsupportedConfig(f"degree {degree} is not implemented")
    pairs = [(0, 1)] if dim == 1 else [(1, 2), (2, 0), (0, 1)]
    nloc = k + len(pairs)
    val = np.empty((q, nloc))
    dval = np.zeros((q, nloc, k))
    for i in range(k):
        val[:, i] = lam[:, i] * (2 * lam[:, i] - 1)
        dval[:, i, i] = 4 * lam[:, i] - 1
    for e, (a, b) in enumerate(pairs):
        val[:, k + e] = 4 * lam[:, a] * lam[:, b]
        dval[:, k + e, a] = 4 * lam[:, b]
        dval[:, k + e, b] = 4 * lam[:, a]
    return val, dval


def barycentric_gradients(mesh: Mesh) -> np.ndarray:
    """(nc, dim+1, dim): physical gradient of each barycentric coordinate."""
    Jinv = np.linalg.inv(mesh.jacobians())
    tail = Jinv  # rows 1..dim
    head = -tail.sum(axis=1, keepdims=True)
    return np.concatenate([head, tail], axis=1)


@dataclass(eq=False)
class FeSpace:
    mesh: Mesh
    degree: int
    components: int = 1
    essential_tags: frozenset = frozenset()
    meanfree: bool = False
    name: str = ""
    cell_nodes: np.ndarray = field(init=False, repr=False)
    n_nodes: int = field(init=False)
    essential_nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        m = self.mesh
        self.essential_tags = frozenset(self.essential_tags)
        if self.degree == 0:
            self.cell_nodes = np.arange(m.n_cells)[:, None]
            self.n_nodes = m.n_cells
        elif self.degree == 1:
            self.cell_nodes = m.cells
            self.n_nodes = m.n_vertices
        elif self.degree == 2:
            self.cell_nodes = np.hstack([m.cells, m.n_vertices + m.cell_edges])
            self.n_nodes = m.n_vertices + m.n_edges
        else:
            raise UnsupportedConfig(f"degree {self.degree} is not implemented")
        faces = m.faces_with_tags(self.essential_tags)
        nodes = [m.faces[faces].ravel()] if self.degree >= 1 else []
        if self.degree == 2 and m.dim == 2:
            nodes.append(m.n_vertices + faces)
        self.essential_nodes = np.unique(np.concatenate(nodes)) if nodes else np.zeros(0, int)
        if self.degree == 0 and len(faces):
            raise UnsupportedConfig("discontinuous spaces cannot carry essential conditions")

    @property
    def ndofs(self) -> int:
        return self.components * self.n_nodes

    @property
    def n_local(self) -> int:
        return self.cell_nodes.shape[1]

    @property
    def essential_dofs(self) -> np.ndarray:
        return np.concatenate([c * self.n_nodes + self.essential_nodes for c in range(self.components)])

    @property
    def free_dofs(self) -> np.ndarray:
        mask = np.ones(self.ndofs, dtype=bool)
        mask[self.essential_dofs] = False
        return np.flatnonzero(mask)

    @property
    def n_free(self) -> int:
        return self.ndofs - self.components * len(self.essential_nodes)

    def cell_dofs(self, component: int = 0) -> np.ndarray:
        return component * self.n_nodes + self.cell_nodes

    def node_coordinates(self) -> np.ndarray:
        m = self.mesh
        if self.degree == 0:
            return m.vertices[m.cells].mean(axis=1)
        if self.degree == 1:
            return m.vertices
        return np.vstack([m.vertices, m.vertices[m.edges].mean(axis=1)])

    def expand(self, free_values: np.ndarray) -> np.ndarray:
        """Full coefficient vector with zeros on essential dofs."""
        full = np.zeros(free_values.shape[:-1] + (self.ndofs,))
        full[..., self.free_dofs] = free_values
        return full

    def interpolate(self, f) -> np.ndarray:
        """Nodal interpolant of f(x) -> (npts,) or (npts, components)."""
        vals = np.asarray(f(self.node_coordinates()), dtype=float)
        if self.components == 1:
            return vals.reshape(self.n_nodes)
        return vals.reshape(self.n_nodes, self.components).T.ravel()

    def evaluate(self, coeffs: np.ndarray, lam: np.ndarray, cells=None):
        """Values of a full coefficient vector at barycentric points.

        Returns (ncells, q) or (ncells, q, components) when ``lam`` is shared
        by all cells, or (npts,)/(npts, components) for per-point ``lam``
        with matching ``cells``.
        """
        coeffs = np.asarray(coeffs)
        phi, _ = shape_functions(self.degree, self.mesh.dim, lam)
        if cells is None:
            out = [np.einsum("cl,ql->cq", coeffs[self.cell_dofs(c)], phi) for c in range(self.components)]
        else:
            out = [
                np.einsum("pl,pl->p", coeffs[self.cell_dofs(c)[cells]], phi)
                for c in range(self.components)
            ]
        return out[0] if self.components == 1 else np.stack(out, axis=-1)

    def gradient(self, coeffs: np.ndarray, lam: np.ndarray):
        """Physical gradients at shared barycentric points: (nc, q, [comp,] dim)."""
        _, dphi = shape_functions(self.degree, self.mesh.dim, lam)
        G = np.einsum("qlk,ckd->cqld", dphi, barycentric_gradients(self.mesh))
        out = [np.einsum("cl,cqld->cqd", coeffs[self.cell_dofs(c)], G) for c in range(self.components)]
        return out[0] if self.components == 1 else np.stack(out, axis=2)


def build_U(mesh: Mesh, config: BoundaryConfig, degree: int = 2) -> FeSpace:
    if not config.u_essential:
        raise UnsupportedConfig("natural displacement conditions on the whole boundary are not supported")
    return FeSpace(mesh, degree, mesh.dim, config.u_essential, False, "U")


def build_D(mesh: Mesh, sel: SpaceSelection, degree: int = 1) -> FeSpace:
    return FeSpace(mesh, degree, 1, frozenset(), sel.d_meanfree, "D")


def build_P(mesh: Mesh, config: BoundaryConfig, sel: SpaceSelection, degree: int = 1) -> FeSpace:
    return FeSpace(mesh, degree, 1, config.p_essential, sel.p_meanfree, "P")


@dataclass(eq=False)
class Spaces:
    U: FeSpace
    D: FeSpace
    P: FeSpace
    config: BoundaryConfig | None = None
    selection: SpaceSelection | None = None

    @property
    def mesh(self) -> Mesh:
        return self.U.mesh


def build_spaces(mesh: Mesh, config: BoundaryConfig, sel: SpaceSelection, k: int = 1) -> Spaces:
    config.check_mesh(mesh.tags)
    return Spaces(
        build_U(mesh, config, k + 1), build_D(mesh, sel, k), build_P(mesh, config, sel, k), config, sel
    )


def count_reported_dofs(spaces: Spaces) -> int:
    """dim(U_s) + dim(D_s) + 2 dim(P_s), counting constrained dofs."""
    return spaces.U.ndofs + spaces.D.ndofs + 2 * spaces.P.ndofs


def evaluation_matrix(space: FeSpace, lam, component: int = 0, derivative: int | None = None):
    """Sparse map from full coefficients to values at the barycentric points
    ``lam`` of every cell (cell-major ordering).  With ``derivative = d`` the
    partial derivative along axis d is returned instead."""
    phi, dphi = shape_functions(space.degree, space.mesh.dim, lam)
    nc, q = space.mesh.n_cells, len(phi)
    if derivative is None:
        vals = np.broadcast_to(phi, (nc,) + phi.shape)
    else:
        grads = barycentric_gradients(space.mesh)[:, :, derivative]
        vals = np.einsum("qlk,ck->cql", dphi, grads)
    rows = np.broadcast_to(np.arange(nc * q).reshape(nc, q, 1), vals.shape)
    cols = np.broadcast_to(space.cell_dofs(component)[:, None, :], vals.shape)
    return sp.csr_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=(nc * q, space.ndofs))
