import numpy as np
import pytest

from biotlab import stability as stab
from biotlab.assembly import assemble
from biotlab.errors import InteriorVertexViolation, TooLarge
from biotlab.fespace import FeSpace, build_spaces, shape_functions
from biotlab.mesh import _finish, crisscross_mesh, locate
from biotlab.norms import trial_norm
from biotlab.params import CANTILEVER_CONFIG, CANTILEVER_PARAMS, BiotParameters, select_spaces
from biotlab.stepper import SolutionHistory, TimePartition

from conftest import column_system, square_system
from oracles import eps_oracle

UNIT = BiotParameters(mu=1.0, lam=1.0, alpha=1.0, sigma=1.0, kappa=1.0)


def inv_sqrt(G):
    w, V = np.linalg.eigh(G)
    return V @ np.diag(w**-0.5) @ V.T


# ---------------------------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_eps_s_matches_loop_oracle_1d(n):
    s = column_system(n)
    assert stab.eps_s(s) == pytest.approx(eps_oracle(s), rel=1e-8)


def test_eps_s_matches_loop_oracle_2d():
    s = square_system(2)
    assert stab.eps_s(s) > 0
    assert stab.eps_s(s) == pytest.approx(eps_oracle(s), rel=1e-8)


def test_eps_s_mesh_robustness():
    ratio = stab.eps_s(square_system(4)) / stab.eps_s(square_system(2))
    assert 0.5 <= ratio <= 2


def test_h1_identities():
    for s in (column_system(4), square_system(2)):
        for seed in range(3):
            ok, worst = stab.check_h1(s.spaces, s, seed=seed)
            assert ok and worst <= 1e-12


def test_lbb_constants_1d():
    c, C = stab.lbb_constants(column_system(2))
    # mu B A^{-1} B^T = M_D / 2 in one dimension
    assert c == pytest.approx(0.5) and C == pytest.approx(0.5)


def test_lbb_constants_2d():
    c2, C2 = stab.lbb_constants(square_system(2))
    c4, C4 = stab.lbb_constants(square_system(4))
    assert c2 > 0 and c4 / c2 >= 0.8
    assert C2 <= 2 and C4 <= 2


def test_projection_stability():
    P = column_system(4).spaces.P
    assert stab.projection_h1_stability(P, stab.refined(P, 0)) == pytest.approx(1.0)
    assert 1.0 <= stab.projection_h1_stability(P, stab.refined(P, 1)) <= 4.0
    assert np.isfinite(stab.projection_h1_stability(square_system(2).spaces.P,
                                                    stab.refined(square_system(2).spaces.P, 1)))


def test_prolongation_reproduces_coarse_functions(rng):
    P = square_system(2).spaces.P
    fine = stab.refined(P, 1)
    x = rng.standard_normal(P.ndofs)
    vals = stab.prolongation(P, fine) @ x
    cells, bary = locate(P.mesh, fine.node_coordinates())
    phi, _ = shape_functions(1, 2, bary)
    np.testing.assert_allclose(vals, np.einsum("pl,pl->p", phi, x[P.cell_dofs()[cells]]), atol=1e-13)


def test_inclusion():
    s = square_system(2)
    assert stab.check_inclusion(s.spaces.P, s.spaces.D)[0]
    mesh = crisscross_mesh(2)
    ok, worst = stab.check_inclusion(FeSpace(mesh, 1), FeSpace(mesh, 0))
    assert not ok and worst > 1e-3


def test_interior_vertex_guard():
    # two triangles filling the square: every vertex is on the boundary
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    cells = np.array([[0, 1, 2], [0, 2, 3]])

    def tag(p):
        x, y = p
        return "bottom" if y < 1e-12 else "right" if x > 1 - 1e-12 else "top" if y > 1 - 1e-12 else "left"

    mesh = _finish(2, verts, cells, tag, ("custom",))
    s = assemble(build_spaces(mesh, CANTILEVER_CONFIG, select_spaces(CANTILEVER_CONFIG, 0.0)), CANTILEVER_PARAMS)
    with pytest.raises(InteriorVertexViolation):
        stab.lbb_constants(s)


# ---------------------------------------------------------------------------
# space-time inf-sup


def history_from_vector(y, system, partition):
    nU, nD, nP = system.nU, system.nD, system.nP
    blk = nU + nD + 2 * nP
    J = partition.J
    per = y[: J * blk].reshape(J, blk)
    o = np.cumsum([0, nU, nD, nP, nP])
    return SolutionHistory(partition, per[:, o[0]:o[1]], per[:, o[1]:o[2]], per[:, o[2]:o[3]],
                           per[:, o[3]:o[4]], y[J * blk:])


def test_trial_gram_matches_trial_norm_by_polarization():
    s = column_system(1, UNIT.with_(lam=3.0, sigma=0.5, kappa=0.2))
    part = TimePartition(np.array([0.0, 0.3, 1.0]))
    ops = stab.space_time_operators(s, part)
    N = ops.b.shape[0]

    def q(y):
        return trial_norm(history_from_vector(y, s, part), s).trial

    E = np.eye(N)
    G = np.array([[(q(E[i] + E[j]) - q(E[i]) - q(E[j])) / 2 for j in range(N)] for i in range(N)])
    np.testing.assert_allclose(ops.trial_gram, G, rtol=1e-10, atol=1e-12 * np.abs(G).max())


def test_bst_matches_dense_svd():
    s = column_system(1, UNIT)
    part = TimePartition.uniform(1.0, 1)
    ops = stab.space_time_operators(s, part)
    sv = np.linalg.svd(inv_sqrt(ops.test_gram) @ ops.b @ inv_sqrt(ops.trial_gram), compute_uv=False)
    infsup, bound = stab.bst_constants(s, part)
    assert infsup > 0
    assert infsup == pytest.approx(sv.min(), rel=1e-8)
    assert bound == pytest.approx(sv.max(), rel=1e-8)


def test_bst_lambda_robustness():
    vals = [stab.bst_infsup(column_system(2, UNIT.with_(lam=lam)), TimePartition.uniform(1.0, 2))
            for lam in (1.0, 1e4, 1e8)]
    assert min(vals) > 0 and max(vals) / min(vals) <= 10


def test_bst_final_time_scaling():
    b1 = stab.bst_infsup(column_system(2, UNIT), TimePartition.uniform(1.0, 2))
    b4 = stab.bst_infsup(column_system(2, UNIT.with_(T=4.0)), TimePartition.uniform(4.0, 2))
    assert b4 >= 0.5 * b1 * np.sqrt(2 / 5)


def test_bst_meanfree_configuration():
    s = square_system(1)
    assert stab.bst_infsup(s, TimePartition.uniform(s.params.T, 1)) > 0


def test_dense_limit_refuses_large_problems():
    with pytest.raises(TooLarge):
        stab.eps_s(column_system(64), limit=16)
    with pytest.raises(TooLarge):
        stab.bst_infsup(column_system(8), TimePartition.uniform(1.0, 4), limit=32)


def test_assumption_report():
    rep = stab.assumption_report(square_system(2), refinements=1)
    rows = dict((name, status) for name, _, status in rep.rows())
    assert rep.passed and rows["inclusion_ok"] == "ok"
    rep = stab.assumption_report(column_system(2), refinements=1)
    assert dict((n, st) for n, _, st in rep.rows())["inclusion_ok"] == "skipped"


def test_constraint_basis():
    c = np.array([1.0, 2.0, 3.0])
    Z = stab.constraint_basis(3, c)
    assert Z.shape == (3, 2)
    np.testing.assert_allclose(c @ Z, 0.0, atol=1e-14)
    np.testing.assert_allclose(Z.T @ Z, np.eye(2), atol=1e-14)
    assert np.array_equal(stab.constraint_basis(2, None), np.eye(2))
