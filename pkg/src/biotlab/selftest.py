"""Fast internal consistency checks, run by ``biotlab selftest``."""
from __future__ import annotations

import numpy as np

from . import manufactured
from .bench import cantilever_problem, terzaghi_problem
from .fespace import count_reported_dofs
from .norms import dual_norm_sq, integration_by_parts_defect, terzaghi_error
from .params import TERZAGHI_PARAMS, BiotParameters
from .stability import check_inclusion
from .stepper import TimePartition, run
from .terzaghi import TerzaghiSetup
from .timeinterp import TimeFunction, commutation_defect, stability_factor


def _dofs():
    got = [count_reported_dofs(terzaghi_problem(2**k)[0].spaces) for k in range(4)]
    return float(got == [9, 14, 24, 44]), got == [9, 14, 24, 44]


def _manufactured(rng):
    prm = BiotParameters(mu=1.0, lam=10.0, alpha=0.8, sigma=0.3, kappa=0.5, T=1.0)
    worst = 0.0
    for problem in (manufactured.column(4, prm, e=rng.uniform(0.5, 2)), manufactured.square(2, prm)):
        hist = run(problem.system, TimePartition.uniform(prm.T, 3), problem.loads)
        worst = max(worst, *manufactured.field_errors(problem, hist).values())
    return worst, worst <= 1e-8


def _ibp(rng):
    system, _ = terzaghi_problem(8)
    worst = 0.0
    for _ in range(5):
        J = int(rng.integers(1, 12))
        M = rng.standard_normal((J, system.nP))
        worst = max(worst, integration_by_parts_defect(system, M, rng.standard_normal(system.nP)))
    return worst, worst <= 1e-9


def _dual_norm(rng):
    """<l, K^{-1} l> against the dense maximum of l(q)^2 / q^T K q."""
    system, _ = terzaghi_problem(4)
    ell = rng.standard_normal(system.nP)
    K = system.K.toarray()
    ref = ell @ np.linalg.solve(K, ell)
    got = dual_norm_sq(system, ell)
    return abs(got - ref) / ref, abs(got - ref) <= 1e-10 * ref


def _time_interp(rng):
    part = TimePartition.uniform(1.0, 6)
    c = rng.standard_normal(4)

    def y(t):
        return c[0] + c[1] * t + c[2] * np.sin(3 * t) + c[3] * t**3

    def dy(t):
        return c[1] + 3 * c[2] * np.cos(3 * t) + 3 * c[3] * t**2

    defect = commutation_defect(TimeFunction(y), TimeFunction(dy), part)
    factor = stability_factor(TimeFunction(y), part)
    return defect, defect <= 1e-10 and factor <= 4 * (1 + 1e-12)


def _inclusion():
    spaces = cantilever_problem(2)[0].spaces
    ok, worst = check_inclusion(spaces.P, spaces.D)
    return worst, ok


def _terzaghi_coarse():
    setup = TerzaghiSetup(params=TERZAGHI_PARAMS)
    system, loads = terzaghi_problem(1, setup)
    err = terzaghi_error(run(system, TimePartition.uniform(setup.params.T, 5000), loads), system.spaces, setup)
    return err, abs(err / 1.42e-2 - 1) <= 0.1


def run_selftest(seed: int = 0) -> list[tuple[str, float, bool]]:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    checks = [
        ("dof_counts", _dofs),
        ("manufactured_exact", lambda: _manufactured(rng)),
        ("integration_by_parts", lambda: _ibp(rng)),
        ("dual_norm", lambda: _dual_norm(rng)),
        ("time_interpolation", lambda: _time_interp(rng)),
        ("space_inclusion", _inclusion),
        ("terzaghi_coarse_error", _terzaghi_coarse),
    ]
    out = []
    for name, check in checks:
        value, ok = check()
        out.append((name, float(value), bool(ok)))
    return out
