"""The Terzaghi convergence studies and the cantilever bracket run."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import terzaghi as tz
from .assembly import DiscreteSystem, assemble
from .fespace import build_spaces, count_reported_dofs, shape_functions
from .mesh import crisscross_mesh, interval_mesh, locate
from .norms import integration_by_parts_defect, terzaghi_error
from .params import (
    CANTILEVER_CONFIG,
    CANTILEVER_PARAMS,
    TERZAGHI_CONFIG,
    BiotParameters,
    select_spaces,
)
from .stepper import LoadSpec, SolutionHistory, TimePartition, run

SPACE_LEVELS = tuple(range(11))
TIME_STEPS = (5, 10, 20, 40, 80, 160, 320)
TIME_STUDY_LEVEL = 13
ABSCISSAS = (0.26, 0.33, 0.4, 0.45)


def eoc(errors, sizes) -> list[float | None]:
    """log(e_{i-1}/e_i) / log(N_i/N_{i-1}); None for the first row."""
    e = np.asarray(errors, dtype=float)
    n = np.asarray(sizes, dtype=float)
    if np.any(e <= 0) or np.any(n <= 0):
        raise ValueError("errors and sizes must be positive")
    out: list[float | None] = [None] if len(e) else []
    out += list(np.log(e[:-1] / e[1:]) / np.log(n[1:] / n[:-1]))
    return [None if v is None else float(v) for v in out]


@dataclass
class ConvergenceRow:
    size: int
    error: float
    eoc: float | None = None
    ibp_defect: float | None = field(default=None, compare=False)
    seconds: float | None = field(default=None, compare=False)


def _attach_eoc(rows):
    for r, v in zip(rows, eoc([r.error for r in rows], [r.size for r in rows])):
        r.eoc = v
    return rows


# ---------------------------------------------------------------------------
# Terzaghi


def terzaghi_problem(n: int, setup: tz.TerzaghiSetup | None = None):
    """System and constant loads of the consolidation column on n cells."""
    setup = setup or tz.TerzaghiSetup()
    cfg, prm = TERZAGHI_CONFIG, setup.params
    spaces = build_spaces(interval_mesh(setup.H, n), cfg, select_spaces(cfg, prm.sigma))
    system = assemble(spaces, prm)
    F = setup.F
    loads = LoadSpec.from_data(spaces, cfg, g_u=lambda x, nrm, t: np.full(len(x), F))
    return system, loads


def _terzaghi_row(system, loads, partition, setup, size, squared, t0):
    history = run(system, partition, loads)
    err = terzaghi_error(history, system.spaces, setup, squared=squared)
    ibp = integration_by_parts_defect(system, history.M, history.M0)
    return ConvergenceRow(size, err, ibp_defect=ibp, seconds=time.perf_counter() - t0)


def run_terzaghi_space_study(levels=SPACE_LEVELS, J: int = 5000, setup: tz.TerzaghiSetup | None = None,
                             squared: bool = False, progress=None) -> list[ConvergenceRow]:
    """Refine the column (2^level cells) at fixed J; rows are (DOFs, error, EOC)."""
    setup = setup or tz.TerzaghiSetup()
    partition = TimePartition.uniform(setup.params.T, J)
    rows = []
    for level in levels:
        t0 = time.perf_counter()
        system, loads = terzaghi_problem(2**level, setup)
        rows.append(_terzaghi_row(system, loads, partition, setup,
                                  count_reported_dofs(system.spaces), squared, t0))
        if progress:
            progress(rows[-1])
    return _attach_eoc(rows)


def run_terzaghi_time_study(steps=TIME_STEPS, level: int = TIME_STUDY_LEVEL,
                            setup: tz.TerzaghiSetup | None = None, squared: bool = False,
                            progress=None) -> tuple[int, list[ConvergenceRow]]:
    """Refine in time on the fixed mesh with 2^level cells.

    Returns (mesh DOFs, rows keyed by J)."""
    setup = setup or tz.TerzaghiSetup()
    system, loads = terzaghi_problem(2**level, setup)
    rows = []
    for J in steps:
        t0 = time.perf_counter()
        partition = TimePartition.uniform(setup.params.T, J)
        rows.append(_terzaghi_row(system, loads, partition, setup, J, squared, t0))
        if progress:
            progress(rows[-1])
    return count_reported_dofs(system.spaces), _attach_eoc(rows)


# ---------------------------------------------------------------------------
# cantilever bracket


@dataclass
class ProfileSample:
    x: float
    y: float
    p: float


@dataclass
class CantileverResult:
    dofs: int
    profiles: list[ProfileSample]
    extrema: dict[float, int]
    ibp_defect: float
    seconds: float
    history: SolutionHistory = field(repr=False)
    system: DiscreteSystem = field(repr=False)


def count_extrema(values, deadband: float) -> int:
    """Interior extrema of a sampled curve.  A turn only counts once the curve
    has moved back by more than ``deadband`` from the running extreme."""
    v = np.asarray(values, dtype=float)
    count, direction, ext = 0, 0, v[0] if v.size else 0.0
    for x in v[1:]:
        if direction == 0:
            if abs(x - v[0]) > deadband:
                direction, ext = (1 if x > v[0] else -1), x
        elif direction * (x - ext) > 0:
            ext = x
        elif abs(x - ext) > deadband:
            count += 1
            direction, ext = -direction, x
    return count


def cantilever_problem(m: int = 16, params: BiotParameters = CANTILEVER_PARAMS, F: float = 1.0):
    cfg = CANTILEVER_CONFIG
    spaces = build_spaces(crisscross_mesh(m), cfg, select_spaces(cfg, params.sigma))
    system = assemble(spaces, params)

    def traction(x, nrm, t):
        out = np.zeros_like(x)
        out[:, 1] = np.where(nrm[:, 1] > 0.5, -F, 0.0)
        return out

    return system, LoadSpec.from_data(spaces, cfg, g_u=traction)


def sample_pressure(system: DiscreteSystem, P_free, xs, samples: int = 65):
    P = system.spaces.P
    coeffs = P.expand(P_free)
    out = []
    y = np.linspace(0.0, 1.0, samples)
    for x in xs:
        pts = np.column_stack([np.full(samples, x), y])
        cells, bary = locate(P.mesh, pts)
        phi, _ = shape_functions(P.degree, P.mesh.dim, bary)
        vals = np.einsum("pl,pl->p", phi, coeffs[P.cell_dofs()[cells]])
        out.extend(ProfileSample(float(x), float(yy), float(v)) for yy, v in zip(y, vals))
    return out


def run_cantilever(m: int = 16, J: int = 5, params: BiotParameters = CANTILEVER_PARAMS, F: float = 1.0,
                   abscissas=ABSCISSAS, samples: int = 65, deadband: float = 1e-3) -> CantileverResult:
    t0 = time.perf_counter()
    system, loads = cantilever_problem(m, params, F)
    history = run(system, TimePartition.uniform(params.T, J), loads)
    profiles = sample_pressure(system, history.P[-1], abscissas, samples)
    pmax = max(abs(s.p) for s in profiles) or 1.0
    extrema = {}
    for x in abscissas:
        line = [s.p for s in profiles if s.x == x]
        extrema[float(x)] = count_extrema(line, deadband * pmax)
    ibp = integration_by_parts_defect(system, history.M, history.M0)
    return CantileverResult(count_reported_dofs(system.spaces), profiles, extrema, ibp,
                            time.perf_counter() - t0, history, system)
