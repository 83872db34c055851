"""Independent brute-force routes used by several test modules."""
import numpy as np

from biotlab.stability import constraint_basis


def jump_gram_loop(system):
    """Face-by-face assembly of kappa sum_F |F|/{h} [grad N . n]^2 with hand
    computed P1 gradients (vertex coordinates solved cell by cell)."""
    sp_, kappa = system.spaces, system.params.kappa
    mesh, P, cfg = sp_.mesh, sp_.P, sp_.config
    d = mesh.dim
    grads = []
    for cell in mesh.cells:
        X = np.hstack([np.ones((d + 1, 1)), mesh.vertices[cell]])
        grads.append(np.linalg.inv(X)[1:].T)  # row k: gradient of the k-th hat
    h = np.array([max(np.linalg.norm(mesh.vertices[a] - mesh.vertices[b])
                      for a in cell for b in cell) for cell in mesh.cells])
    H = np.zeros((P.ndofs, P.ndofs))
    natural = set(mesh.faces_with_tags(cfg.p_natural).tolist())
    for f, (c0, c1) in enumerate(mesh.face_cells):
        if c1 < 0 and f not in natural:
            continue
        n = mesh.normals[f]
        j = np.zeros(P.ndofs)
        j[mesh.cells[c0]] += grads[c0] @ n
        if c1 >= 0:
            j[mesh.cells[c1]] -= grads[c1] @ n
            hf = (h[c0] + h[c1]) / 2
        else:
            hf = h[c0]
        area = 1.0 if d == 1 else np.linalg.norm(np.subtract(*mesh.vertices[mesh.faces[f]]))
        H += kappa * area / hf * np.outer(j, j)
    return H[np.ix_(P.free_dofs, P.free_dofs)]


def eps_oracle(system):
    H = jump_gram_loop(system)
    K, M = system.K.toarray(), system.M_P.toarray()
    S = K @ np.linalg.inv(M) @ K
    Z = constraint_basis(system.nP, system.c_P)
    # eigenvalues of (Z^T S Z)^{-1} Z^T H Z via a non-symmetric solver
    ev = np.linalg.eigvals(np.linalg.solve(Z.T @ S @ Z, Z.T @ H @ Z)).real
    return 1 / np.sqrt(ev.max())
