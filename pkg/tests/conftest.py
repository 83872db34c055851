import numpy as np
import pytest

from biotlab.assembly import assemble
from biotlab.fespace import build_spaces
from biotlab.mesh import crisscross_mesh, interval_mesh
from biotlab.params import (
    CANTILEVER_CONFIG,
    CANTILEVER_PARAMS,
    TERZAGHI_CONFIG,
    TERZAGHI_PARAMS,
    select_spaces,
)


def column_system(n, params=TERZAGHI_PARAMS):
    cfg = TERZAGHI_CONFIG
    return assemble(build_spaces(interval_mesh(1.0, n), cfg, select_spaces(cfg, params.sigma)), params)


def square_system(m, params=CANTILEVER_PARAMS):
    cfg = CANTILEVER_CONFIG
    return assemble(build_spaces(crisscross_mesh(m), cfg, select_spaces(cfg, params.sigma)), params)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion, with its key figures."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if "test_acceptance.py::test_criterion_" not in getattr(rep, "nodeid", "") or rep.when != "call" and outcome != "error":
                continue
            props = dict(rep.user_properties)
            name = rep.nodeid.split("::")[-1]
            number = int(name.split("_")[2])
            status = "PASS" if outcome == "passed" else "FAIL"
            lines.append((number, f"criterion {number}: {status}  {props.get('summary', name)}"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
