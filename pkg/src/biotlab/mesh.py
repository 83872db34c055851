"""Simplicial meshes in 1D and 2D with tagged boundary faces.

Conventions
-----------
* ``cells`` are oriented simplices (counterclockwise in 2D).
* ``edges`` carry the second-order Lagrange nodes.  In 1D every cell is its
  own edge; in 2D local edge ``i`` of a cell is the one opposite vertex ``i``.
* ``faces`` are the codimension-one entities: vertices in 1D, edges in 2D.
  ``face_cells[f] = (c0, c1)`` with ``c1 = -1`` on the boundary, and
  ``normals[f]`` points outward on the boundary and from ``c0`` into ``c1``
  elsewhere.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(eq=False)
class Mesh:
    dim: int
    vertices: np.ndarray
    cells: np.ndarray
    edges: np.ndarray
    cell_edges: np.ndarray
    faces: np.ndarray
    face_cells: np.ndarray
    face_tags: np.ndarray
    normals: np.ndarray
    family: tuple = ("custom",)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def boundary_faces(self) -> np.ndarray:
        return np.flatnonzero(self.face_cells[:, 1] < 0)

    @property
    def interior_faces(self) -> np.ndarray:
        return np.flatnonzero(self.face_cells[:, 1] >= 0)

    @property
    def tags(self) -> frozenset:
        return frozenset(self.face_tags[self.boundary_faces].tolist())

    def faces_with_tags(self, tags) -> np.ndarray:
        tags = set(tags)
        b = self.boundary_faces
        return b[np.isin(self.face_tags[b], list(tags))] if tags else b[:0]

    def jacobians(self) -> np.ndarray:
        """Cell Jacobians of the affine maps from the reference simplex."""
        v = self.vertices[self.cells]
        return np.stack([v[:, i + 1] - v[:, 0] for i in range(self.dim)], axis=-1)

    def cell_measures(self) -> np.ndarray:
        J = self.jacobians()
        return np.abs(np.linalg.det(J)) / (1 if self.dim == 1 else 2)

    def face_measures(self) -> np.ndarray:
        if self.dim == 1:
            return np.ones(len(self.faces))
        v = self.vertices[self.faces]
        return np.linalg.norm(v[:, 1] - v[:, 0], axis=1)

    def diameters(self) -> np.ndarray:
        v = self.vertices[self.cells]
        h = np.zeros(self.n_cells)
        k = self.dim + 1
        for a in range(k):
            for b in range(a + 1, k):
                h = np.maximum(h, np.linalg.norm(v[:, a] - v[:, b], axis=1))
        return h

    def boundary_vertices(self) -> np.ndarray:
        return np.unique(self.faces[self.boundary_faces])


def _finish(dim, vertices, cells, face_tagger, family) -> Mesh:
    """Derive edges, faces, adjacency, tags and normals from cells."""
    vertices = np.asarray(vertices, dtype=float).reshape(len(vertices), dim)
    cells = np.asarray(cells, dtype=np.int64)
    nc = len(cells)
    if dim == 1:
        edges = cells.copy()
        cell_edges = np.arange(nc, dtype=np.int64)[:, None]
        local = cells  # faces of a cell are its two vertices
        nf = len(vertices)
        faces = np.arange(nf, dtype=np.int64)[:, None]
        face_of_local = local
    else:
        loc = np.stack([cells[:, [1, 2]], cells[:, [2, 0]], cells[:, [0, 1]]], axis=1)
        keys = np.sort(loc.reshape(-1, 2), axis=1)
        edges, inv = np.unique(keys, axis=0, return_inverse=True)
        cell_edges = inv.reshape(nc, 3).astype(np.int64)
        faces = edges
        nf = len(edges)
        face_of_local = cell_edges
    face_cells = -np.ones((nf, 2), dtype=np.int64)
    for c in range(nc):
        for f in face_of_local[c]:
            slot = 0 if face_cells[f, 0] < 0 else 1
            if slot == 1 and face_cells[f, 1] >= 0:
                raise ConfigError(f"face {f} shared by more than two cells")
            face_cells[f, slot] = c
    used = np.unique(face_of_local)
    if dim == 1 and len(used) != nf:
        raise ConfigError("mesh has isolated vertices")

    centroids = vertices[cells].mean(axis=1)
    normals = np.zeros((nf, dim))
    if dim == 1:
        normals[:, 0] = np.sign(vertices[:, 0] - centroids[face_cells[:, 0], 0])
    else:
        t = vertices[faces[:, 1]] - vertices[faces[:, 0]]
        n = np.stack([t[:, 1], -t[:, 0]], axis=1)
        n /= np.linalg.norm(n, axis=1)[:, None]
        mid = vertices[faces].mean(axis=1)
        away = mid - centroids[face_cells[:, 0]]
        flip = np.einsum("ij,ij->i", n, away) < 0
        n[flip] *= -1
        normals = n

    tags = np.full(nf, "", dtype=object)
    for f in np.flatnonzero(face_cells[:, 1] < 0):
        tags[f] = face_tagger(vertices[faces[f]].mean(axis=0))
    tags = tags.astype(str)
    mesh = Mesh(dim, vertices, cells, edges, cell_edges, faces, face_cells, tags, normals, family)
    if np.any(mesh.cell_measures() <= 0):
        raise ConfigError("degenerate cell")
    return mesh


def interval_mesh(H: float, n: int) -> Mesh:
    """Uniform mesh of (0, H) with n cells; z=0 is tagged 'top', z=H 'bottom'."""
    if n < 1 or not H > 0:
        raise ConfigError("interval_mesh needs n >= 1 and H > 0")
    return _interval_from_points(np.linspace(0.0, H, n + 1))


def _interval_from_points(z) -> Mesh:
    z = np.asarray(z, dtype=float)
    n = len(z) - 1
    cells = np.stack([np.arange(n), np.arange(1, n + 1)], axis=1)
    H = z[-1]

    def tagger(p):
        return "top" if abs(p[0]) <= 1e-12 * H else "bottom"

    return _finish(1, z, cells, tagger, ("interval", H, n))


def crisscross_mesh(m: int) -> Mesh:
    """Unit square, m x m squares each split into four triangles through its centre."""
    if m < 1:
        raise ConfigError("crisscross_mesh needs m >= 1")
    s = np.linspace(0.0, 1.0, m + 1)
    X, Y = np.meshgrid(s, s)
    grid = np.stack([X.ravel(), Y.ravel()], axis=1)
    c = (s[:-1] + s[1:]) / 2
    CX, CY = np.meshgrid(c, c)
    centres = np.stack([CX.ravel(), CY.ravel()], axis=1)
    vertices = np.vstack([grid, centres])
    i, j = np.meshgrid(np.arange(m), np.arange(m))
    i, j = i.ravel(), j.ravel()
    sw = i + (m + 1) * j
    se, nw = sw + 1, sw + m + 1
    ne = nw + 1
    ctr = (m + 1) ** 2 + i + m * j
    cells = np.stack(
        [
            np.stack([ctr, sw, se], axis=1),
            np.stack([ctr, se, ne], axis=1),
            np.stack([ctr, ne, nw], axis=1),
            np.stack([ctr, nw, sw], axis=1),
        ],
        axis=1,
    ).reshape(-1, 3)

    def tagger(p):
        x, y = p
        if y < 1e-12:
            return "bottom"
        if x > 1 - 1e-12:
            return "right"
        if y > 1 - 1e-12:
            return "top"
        return "left"

    return _finish(2, vertices, cells, tagger, ("crisscross", m))


def refine_uniform(mesh: Mesh) -> Mesh:
    """Bisect every interval, or pass from crisscross m to crisscross 2m."""
    kind = mesh.family[0]
    if mesh.dim == 1:
        z = mesh.vertices[:, 0]
        mid = (z[:-1] + z[1:]) / 2
        out = np.empty(2 * len(z) - 1)
        out[0::2], out[1::2] = z, mid
        return _interval_from_points(out)
    if kind == "crisscross":
        return crisscross_mesh(2 * mesh.family[1])
    raise ConfigError("uniform refinement is only available for interval and crisscross meshes")


@dataclass(frozen=True)
class MeshQuality:
    shape_constant: float
    interior_vertex_ok: bool


def inscribed_diameters(mesh: Mesh) -> np.ndarray:
    if mesh.dim == 1:
        return mesh.cell_measures()
    v = mesh.vertices[mesh.cells]
    perim = sum(np.linalg.norm(v[:, a] - v[:, (a + 1) % 3], axis=1) for a in range(3))
    return 4 * mesh.cell_measures() / perim


def quality(mesh: Mesh) -> MeshQuality:
    ratio = mesh.diameters() / inscribed_diameters(mesh)
    on_boundary = np.zeros(mesh.n_vertices, dtype=bool)
    on_boundary[mesh.boundary_vertices()] = True
    interior = ~on_boundary[mesh.cells]
    return MeshQuality(float(ratio.max()), bool(interior.any(axis=1).all()))


def locate(mesh: Mesh, points, tol: float = 1e-10):
    """Containing cell and barycentric coordinates for each point.

    Points on shared faces go to the lowest-numbered containing cell.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, mesh.dim)
    v0 = mesh.vertices[mesh.cells[:, 0]]
    Jinv = np.linalg.inv(mesh.jacobians())
    cells = np.empty(len(pts), dtype=np.int64)
    bary = np.empty((len(pts), mesh.dim + 1))
    for start in range(0, len(pts), 256):
        chunk = pts[start:start + 256]
        ref = np.einsum("cij,pcj->pci", Jinv, chunk[:, None, :] - v0[None])
        lam = np.concatenate([1 - ref.sum(axis=2, keepdims=True), ref], axis=2)
        inside = (lam >= -tol).all(axis=2)
        if not inside.any(axis=1).all():
            bad = chunk[~inside.any(axis=1)][0]
            raise ConfigError(f"point {bad} lies outside the mesh")
        first = inside.argmax(axis=1)
        cells[start:start + len(chunk)] = first
        bary[start:start + len(chunk)] = lam[np.arange(len(chunk)), first]
    return cells, bary


def dump(mesh: Mesh, path) -> None:
    """Write a plain-text listing of the mesh.

    Grammar, one record per line::

        dim <d>
        v <x> [<y>]
        c <i0> <i1> [<i2>]
        f <i0> [<i1>] <tag>      (boundary faces only)
    """
    with open(path, "w") as fh:
        fh.write(f"dim {mesh.dim}\n")
        for p in mesh.vertices:
            fh.write("v " + " ".join(f"{x:.17g}" for x in p) + "\n")
        for c in mesh.cells:
            fh.write("c " + " ".join(str(i) for i in c) + "\n")
        for f in mesh.boundary_faces:
            fh.write("f " + " ".join(str(i) for i in mesh.faces[f]) + f" {mesh.face_tags[f]}\n")
