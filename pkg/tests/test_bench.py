import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biotlab import bench


def test_eoc_examples():
    assert bench.eoc([1.42e-2, 1.08e-2], [9, 14])[1] == pytest.approx(0.6195, abs=1e-3)
    assert bench.eoc([1.17e-4, 7.23e-5], [5, 10])[1] == pytest.approx(0.70, abs=0.01)
    assert bench.eoc([1.0, 0.5], [10, 20]) == [None, pytest.approx(1.0)]
    assert bench.eoc([], []) == []
    with pytest.raises(ValueError):
        bench.eoc([1.0, 0.0], [1, 2])


@settings(max_examples=50)
@given(e=st.lists(st.floats(1e-12, 1e3), min_size=2, max_size=6),
       scale=st.floats(1e-3, 1e3), nscale=st.floats(0.5, 100))
def test_eoc_scale_invariance(e, scale, nscale):
    n = np.cumprod(np.full(len(e), 2.0))
    a = bench.eoc(e, n)[1:]
    b = bench.eoc(np.array(e) * scale, n * nscale)[1:]
    np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-9)


def test_count_extrema():
    assert bench.count_extrema([0, 1, 2, 3], 0.1) == 0
    assert bench.count_extrema([0, 2, 0], 0.1) == 1
    assert bench.count_extrema([0, 2, 0, 2, 0], 0.1) == 3
    # wiggles inside the dead band are ignored
    assert bench.count_extrema([0, 1, 0.99, 1.01, 2], 0.1) == 0
    assert bench.count_extrema([], 0.1) == 0


def test_short_space_study():
    rows = bench.run_terzaghi_space_study(range(3), J=500)
    assert [r.size for r in rows] == [9, 14, 24]
    assert rows[0].eoc is None and all(r.eoc > 0 for r in rows[1:])
    assert all(r.ibp_defect < 1e-9 for r in rows)


def test_short_time_study():
    dofs, rows = bench.run_terzaghi_time_study((2, 4), level=4)
    assert dofs == 84
    assert rows[1].error < rows[0].error


def test_cantilever_small():
    res = bench.run_cantilever(m=4, J=2)
    assert res.dofs == 22 * 16 + 14 * 4 + 5
    assert len(res.profiles) == 4 * 65
    assert set(res.extrema) == set(bench.ABSCISSAS)
    assert res.ibp_defect < 1e-9
