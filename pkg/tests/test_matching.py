import numpy as np
import pytest

from eqmatch.clumping import build_hierarchy, compute_edge_cutlevels
from eqmatch.errors import ArgumentError, ConsistencyError
from eqmatch.lattice import Configuration, Torus, Window, generate_configuration, translate_configuration
from eqmatch.matching import (BAD_INFINITY, Censored, build_matching, clump_discrepancies, clump_match,
                              displacement, k_bad, match)
from eqmatch.meshalkin import Matching


def _torus(seed, n=32, bias=0.5):
    return generate_configuration(2, Torus((n, n)), seed, bias)


def test_two_site_clump():
    m = clump_match(Configuration.from_string("10", periodic=True))
    assert m.partner.tolist() == [1, 0] and m.stage.tolist() == [1, 1]
    assert displacement(m, (0,)) == 1


def test_three_site_clump():
    c = Configuration.from_string("110", periodic=True)
    m = clump_match(c)
    assert m.n_pairs == 1
    assert int((m.bad_level > 1).sum()) == 1
    bad = int(np.flatnonzero(m.bad_level > 1)[0])
    assert c.array[bad] == 1 and m.partner[bad] == -1
    assert isinstance(displacement(m, (bad,)), Censored)
    [cd] = clump_discrepancies(c, build_hierarchy(compute_edge_cutlevels(c)), 1)
    assert (cd.size, cd.zeta) == (3, 1)


@pytest.mark.parametrize("text, zeta", [("1100", 0), ("111", 3), ("000", -3)])
def test_zeta_examples(text, zeta):
    c = Configuration.from_string(text, periodic=True)
    h = build_hierarchy(compute_edge_cutlevels(c))
    [cd] = clump_discrepancies(c, h, 1)
    assert cd.zeta == zeta and cd.size == len(text)


def _check_invariants(c, m, h):
    p = m.partner
    i = np.flatnonzero(p >= 0)
    assert np.array_equal(p[p[i]], i)
    assert np.all(m.bits[i] != m.bits[p[i]])
    assert np.array_equal(m.stage[i], m.stage[p[i]])
    # bad_level agrees with the stage map
    staged = (m.stage >= 1) & (m.stage <= m.k_max)
    assert np.array_equal(m.bad_level[staged], m.stage[staged])
    assert np.all(m.bad_level[~staged] == BAD_INFINITY)
    # maximality per stage on tori: no clump keeps a free head and a free tail
    for k in range(1, m.k_max + 1):
        part = h.partition(k)
        free = m.bad_level > k
        heads = np.bincount(part[free & (m.bits == 1)], minlength=part.max() + 1)
        tails = np.bincount(part[free & (m.bits == 0)], minlength=part.max() + 1)
        assert not np.any((heads > 0) & (tails > 0))
        # the free count of each clump equals |zeta|
        zeta = np.array([cd.zeta for cd in clump_discrepancies(c, h, k)])
        assert np.array_equal(heads + tails, np.abs(zeta))


@pytest.mark.parametrize("seed", range(5))
def test_torus_invariants(seed, backend):
    c = _torus(seed, 64)
    h = build_hierarchy(compute_edge_cutlevels(c))
    m = build_matching(c, h)
    _check_invariants(c, m, h)
    assert m.n_unmatched == abs(2 * c.ones() - c.n_sites)


def test_balanced_torus_has_no_unmatched():
    rng = np.random.default_rng(3)
    arr = np.zeros(32 * 32, dtype=np.uint8)
    arr[rng.permutation(arr.size)[: arr.size // 2]] = 1
    c = Configuration.from_array(arr.reshape(32, 32), Torus((32, 32)))
    m = clump_match(c)
    assert m.n_unmatched == 0


def test_equivariance(backend):
    c = _torus(11)
    m = clump_match(c)
    g = c.geometry
    rng = np.random.default_rng(0)
    for z in rng.integers(0, 32, size=(20, 2)):
        mz = clump_match(translate_configuration(c, tuple(z)))
        for i in rng.integers(0, g.n_sites, size=50).tolist():
            x = np.array(g.site(i))
            j = g.index(tuple((x + z) % 32))
            if m.partner[i] < 0:
                assert mz.partner[j] < 0
            else:
                y = np.array(g.site(int(m.partner[i])))
                assert mz.partner[j] == g.index(tuple((y + z) % 32))
            assert mz.stage[j] == m.stage[i]


def test_window_defers_boundary_clumps():
    c = generate_configuration(2, Window((0, 0), (64, 64)), 7)
    m = clump_match(c, 6)
    h = build_hierarchy(compute_edge_cutlevels(c, 6))
    ring = np.zeros((64, 64), dtype=bool)
    ring[0, :] = ring[-1, :] = ring[:, 0] = ring[:, -1] = True
    for k in range(1, 7):
        labels = h.partition(k)
        touching = np.isin(labels, np.unique(labels[ring.reshape(-1)]))
        assert not np.any(touching & (m.stage == k))
    ok = ~m.censored
    assert np.all(m.partner[ok] >= 0) and np.all(m.stage[ok] <= 6)
    assert np.all(m.stage[m.censored & (m.partner >= 0)] == 7)


def test_window_locality():
    """Uncensored pairs of a sub-window reappear in a larger window over the same field."""
    small = generate_configuration(2, Window((32, 32), (64, 64)), 21)
    big = generate_configuration(2, Window((0, 0), (128, 128)), 21)
    ms, mb = clump_match(small, 10), clump_match(big, 10)
    assert not compute_edge_cutlevels(big, 10).meta["sampled_levels"]
    gs, gb = small.geometry, big.geometry
    idx = np.flatnonzero(~ms.censored)
    assert idx.size > 0
    for i in idx.tolist():
        x, y = gs.site(i), gs.site(int(ms.partner[i]))
        assert mb.partner[gb.index(x)] == gb.index(y)
        assert mb.stage[gb.index(x)] == ms.stage[i]


def test_displacement_and_k_bad():
    c = _torus(2)
    m = clump_match(c)
    g = c.geometry
    first = int(m.stage[m.stage > 0].min())
    i = int(np.flatnonzero(m.stage == first)[0])
    assert all(not k_bad(m, g.site(i), k) for k in range(first, m.k_max + 1))
    later = np.flatnonzero((m.stage > 1) & (m.stage <= m.k_max))
    if later.size:
        j = int(later[0])
        k = int(m.stage[j])
        assert k_bad(m, g.site(j), k - 1) and not k_bad(m, g.site(j), k)
    with pytest.raises(ArgumentError):
        k_bad(m, g.site(0), m.k_max + 1)
    x = g.site(i)
    y = g.site(int(m.partner[i]))
    diff = np.abs(np.subtract(x, y))
    assert displacement(m, x) == int(np.minimum(diff, 32 - diff).max())


def test_displacement_consistency_error():
    g = Torus((4,))
    m = Matching(g, np.array([1, 0, 1, 0], np.uint8), np.array([-1, 0, -1, -1]), np.array([-1, 1, -1, -1]),
                 np.zeros(4, dtype=bool))
    with pytest.raises(ConsistencyError):
        displacement(m, (0,))


def test_discrepancy_sum_equals_bad_count():
    c = _torus(5, 64)
    h = build_hierarchy(compute_edge_cutlevels(c))
    m = build_matching(c, h)
    for k in range(1, h.k_max + 1):
        cds = clump_discrepancies(c, h, k)
        assert all(abs(cd.zeta) <= cd.size and (cd.zeta - cd.size) % 2 == 0 for cd in cds)
        assert sum(abs(cd.zeta) for cd in cds) == int((m.bad_level > k).sum())


def test_mismatched_hierarchy():
    c = _torus(1)
    h = build_hierarchy(compute_edge_cutlevels(_torus(1, 16)))
    with pytest.raises(ArgumentError):
        build_matching(c, h)


def test_match_dispatch():
    c = _torus(4)
    assert match(c, "meshalkin").meta.get("rule", "meshalkin") == "meshalkin"
    assert np.array_equal(match(c, "clump").partner, clump_match(c).partner)
    with pytest.raises(ArgumentError):
        match(c, "greedy")


def test_summary_and_csv():
    m = clump_match(_torus(9))
    s = m.summary()
    assert s["n_sites"] == 1024 and sum(s["pairs_per_stage"].values()) == s["n_pairs"]
    head = m.to_csv().splitlines()[0]
    assert "bad_level" in head
