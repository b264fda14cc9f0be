"""The compiled kernels against the numpy fallback."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eqmatch import _backend, _pycore

compiled = pytest.mark.skipif("compiled" not in _backend.available(), reason="extension not built")


def _core():
    from eqmatch import _core
    return _core


@compiled
@pytest.mark.parametrize("d", [1, 2, 3])
def test_coin_bits(d):
    rng = np.random.default_rng(d)
    axes = [np.sort(rng.integers(-1000, 1000, size=rng.integers(1, 9))) for _ in range(d)]
    key = int(rng.integers(0, 2**63))
    thr = 1 << 52
    assert np.array_equal(_core().coin_bits(key, thr, axes), _pycore.coin_bits(key, thr, axes))


@compiled
@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(st.integers(0, 1), min_size=7, max_size=7), min_size=1, max_size=5), st.booleans())
def test_meshalkin_rows(rows, cyclic):
    bits = np.array(rows, dtype=np.uint8)
    assert np.array_equal(_core().meshalkin_rows(bits, cyclic), _pycore.meshalkin_rows(bits, cyclic))


@compiled
def test_rasterize_faces():
    rng = np.random.default_rng(3)
    shape = (2, 17, 23)
    n = 200
    axis = rng.integers(0, 2, n)
    lo = np.stack([rng.integers(0, 17, n), rng.integers(0, 23, n)], 1)
    hi = lo + rng.integers(-1, 6, (n, 2))
    hi = np.minimum(hi, [16, 22])
    lev = rng.integers(2, 9, n)
    a = np.zeros(shape, dtype=np.int16)
    b = np.zeros(shape, dtype=np.int16)
    _core().rasterize_faces(a, axis, lo, hi, lev)
    _pycore.rasterize_faces(b, axis, lo, hi, lev)
    assert np.array_equal(a, b)


@compiled
def test_kruskal_and_representatives():
    rng = np.random.default_rng(5)
    n = 300
    u = rng.integers(0, n, 900)
    v = rng.integers(0, n, 900)
    lev = np.sort(rng.integers(1, 7, 900)).astype(np.int16)
    pa, la = _core().kruskal_forest(n, u, v, lev)
    pb, lb = _pycore.kruskal_forest(n, u, v, lev)
    assert np.array_equal(pa, pb) and np.array_equal(la, lb)
    sites = np.arange(n)
    for k in range(0, 8):
        assert np.array_equal(_core().representatives(pa, la, sites, k), _pycore.representatives(pb, lb, sites, k))


def test_use_backend_restores():
    before = _backend.name()
    with _backend.use_backend("python"):
        assert _backend.name() == "python"
    assert _backend.name() == before
    with pytest.raises(ValueError):
        _backend.set_backend("fortran")
