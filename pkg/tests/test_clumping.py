import math

import numpy as np
import pytest

from eqmatch.clumping import (Cutter, _plan_levels, _sampled_centers, annulus_count,
                              build_hierarchy, compute_edge_cutlevels, cutter_reach, cutters_for_level,
                              default_k_max, edge_separated_by, find_seeds, halo_margin, k_max_for_margin,
                              radius_r, shift_s, torus_k_max, truncation_bias)
from eqmatch.errors import ArgumentError, RangeError, UnsupportedGeometryError
from eqmatch.lattice import BoxRegion, Configuration, Torus, Window, generate_configuration

from oracles import brute_cutlevels, brute_seeds, bfs_partition


@pytest.mark.parametrize("k, d, r", [(1, 1, 2.5), (2, 1, 16.5), (3, 1, 72.5), (2, 2, 4.5), (4, 2, 16.5),
                                     (6, 2, 48.5), (1, 2, math.sqrt(2) + 0.5)])
def test_radius_examples(k, d, r):
    assert radius_r(k, d) == pytest.approx(r, abs=1e-12)


@pytest.mark.parametrize("k, d, s", [(1, 2, (191, 0)), (2, 2, (450, 0)), (1, 1, (250,))])
def test_shift_examples(k, d, s):
    assert shift_s(k, d) == s


def test_radius_monotone_and_exact():
    for d in (1, 2, 3, 4):
        rs = [radius_r(k, d) for k in range(1, 60)]
        assert all(a < b for a, b in zip(rs, rs[1:]))
        for k in range(1, 28):
            assert cutter_reach(k, d) == math.floor(radius_r(k, d))
            assert shift_s(k, d)[0] == math.floor(100 * radius_r(k, d))
            # no site sits on a cutter
            assert radius_r(k, d) != cutter_reach(k, d)


def test_radius_errors():
    with pytest.raises(RangeError):
        radius_r(2000, 1)
    with pytest.raises(ArgumentError):
        radius_r(0, 2)


def test_seed_examples():
    c = Configuration.from_string("1000", periodic=False)
    assert [s.position for s in find_seeds(c, 4)] == [(0,)]
    c = generate_configuration(2, Torus((9, 11)), 5)
    ones = {tuple(int(v) for v in p) for p in np.argwhere(c.array == 1)}
    assert {s.position for s in find_seeds(c, 1)} == ones


def test_seeds_match_predicate_and_have_disjoint_shells():
    c = generate_configuration(2, Torus((40, 30)), 8)
    look = lambda x: c.bit(x)
    for k in (2, 3, 5):
        got = sorted(s.position for s in find_seeds(c, k))
        assert got == sorted(brute_seeds(look, k, (0, 0), (39, 29)))
        shells = [set(((p[0] + n) % 40, p[1]) for n in range(k)) for p in got]
        for i in range(len(shells) - 1):
            assert not shells[i] & shells[i + 1] or got[i][1] != got[i + 1][1]
        flat = [site for sh in shells for site in sh]
        assert len(flat) == len(set(flat))


def test_window_seed_shell_must_fit():
    c = Configuration.from_string("0001", periodic=False)
    assert find_seeds(c, 2) == []
    assert len(find_seeds(c, 1)) == 1


def test_cutter_example():
    arr = np.zeros((60, 60), dtype=np.uint8)
    arr[20, 30] = 1  # seed at (-450, 0)
    c = Configuration.from_array(arr, Window((-470, -30), (60, 60)))
    cuts = cutters_for_level(c, 2, BoxRegion((0, 0), 8))
    assert cuts == [Cutter((0, 0), 2, 4.5)]
    assert cuts[0].encloses((0, 0)) and cuts[0].seed == (-450, 0)
    empty = Configuration.from_array(np.zeros_like(arr), c.geometry)
    assert cutters_for_level(empty, 2, BoxRegion((0, 0), 8)) == []


def test_edge_separated_examples():
    cut = Cutter((0, 0), 2, 4.5)
    assert edge_separated_by(cut, (4, 0), (5, 0))
    assert not edge_separated_by(cut, (3, 0), (4, 0))
    assert not edge_separated_by(cut, (5, 0), (6, 0))
    with pytest.raises(ArgumentError):
        edge_separated_by(cut, (0, 0), (2, 0))


def _single_cutter_config():
    arr = np.zeros((520, 60), dtype=np.uint8)
    corner = (-490, -30)
    arr[-450 - corner[0], -corner[1]] = 1
    return Configuration.from_array(arr, Window(corner, arr.shape))


def test_single_cutter_cutlevels(backend):
    c = _single_cutter_config()
    core = Window((-16, -16), (32, 32))
    e = compute_edge_cutlevels(c, 2, core)
    assert np.array_equal(e.levels, brute_cutlevels(c, 2, core.lo, core.hi))
    assert int((e.levels == 2).sum()) == 4 * 9
    assert e.cutlevel((4, 0), (5, 0)) == 2 and e.cutlevel((5, 0), (4, 0)) == 2
    assert e.cutlevel((3, 0), (4, 0)) == 0
    h = build_hierarchy(e)
    assert h.n_clumps(1) == 2 and h.n_clumps(2) == 1
    assert sorted(h.clump((0, 0), 1).tolist()) == sorted(
        core.index((x, y)) for x in range(-4, 5) for y in range(-4, 5))


def test_no_seeds_no_cuts():
    c = Configuration.from_array(np.zeros((900, 40), dtype=np.uint8), Window((-850, -20), (900, 40)))
    e = compute_edge_cutlevels(c, 2, Window((-10, -10), (20, 20)))
    assert (e.levels[e.levels >= 0] == 0).all()
    assert build_hierarchy(e).n_clumps(1) == 1


def test_max_rule_two_levels():
    arr = np.zeros((1000, 60), dtype=np.uint8)
    corner = (-960, -30)
    arr[-450 - corner[0], -corner[1]] = 1          # 2-cutter at the origin, reach 4
    s3 = shift_s(3, 2)[0]
    arr[-s3 - corner[0], -4 - corner[1]] = 1       # 3-cutter at (0, -4), reach 8
    c = Configuration.from_array(arr, Window(corner, arr.shape))
    e = compute_edge_cutlevels(c, 3, Window((-16, -16), (32, 32)))
    assert e.cutlevel((4, 4), (4, 5)) == 3  # both cubes have a face between y=4 and y=5
    assert np.array_equal(e.levels, brute_cutlevels(c, 3, (-16, -16), (15, 15)))


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_random_cutlevels_against_brute_force(seed, backend):
    c = generate_configuration(2, Window((0, 0), (32, 32)), seed)
    e = compute_edge_cutlevels(c, 4)
    assert np.array_equal(e.levels, brute_cutlevels(c, 4, (0, 0), (31, 31)))


def test_torus_cutlevels_fold():
    c = generate_configuration(2, Torus((36, 36)), 4)
    k_max = torus_k_max(c.sides)
    e = compute_edge_cutlevels(c, k_max)
    # reference: every cutter tested against every edge in the torus metric
    d = 2
    n = 36
    grid = np.stack(np.meshgrid(np.arange(n), np.arange(n), indexing="ij"), axis=-1)
    ref = np.zeros((2, n, n), dtype=np.int16)
    for k in range(2, k_max + 1):
        r = radius_r(k, d)
        for seed in find_seeds(c, k):
            center = (np.add(seed.position, shift_s(k, d))) % n
            diff = np.abs(grid - center)
            inside = np.minimum(diff, n - diff).max(axis=-1) < r
            for i in range(2):
                sep = inside != np.roll(inside, -1, axis=i)
                ref[i] = np.where(sep, np.maximum(ref[i], k), ref[i])
    assert np.array_equal(e.levels, ref)


def test_torus_rejects_large_levels():
    c = generate_configuration(2, Torus((32, 32)), 1)
    assert torus_k_max(c.sides) == 3
    with pytest.raises(UnsupportedGeometryError):
        compute_edge_cutlevels(c, 4)


@pytest.mark.parametrize("seed", range(4))
def test_hierarchy_matches_bfs(seed, backend):
    c = generate_configuration(2, Window((0, 0), (64, 64)), 100 + seed)
    e = compute_edge_cutlevels(c, 4)
    h = build_hierarchy(e)
    prev = None
    for k in range(1, 6):
        part = h.partition(k)
        assert np.array_equal(part, bfs_partition(e.levels, k, False))
        if prev is not None:
            # coarsening: sites together at k-1 stay together at k
            for lab in np.unique(prev):
                assert np.unique(part[prev == lab]).size == 1
        prev = part
    assert h.n_clumps(4) == 1


def test_hierarchy_torus_bfs():
    c = generate_configuration(2, Torus((64, 64)), 3)
    e = compute_edge_cutlevels(c)
    h = build_hierarchy(e)
    for k in range(1, e.k_max + 1):
        assert np.array_equal(h.partition(k), bfs_partition(e.levels, k, True))


def test_truncation_bias_properties():
    assert truncation_bias(2, 5, 1e-9) == 0.0
    vals = [truncation_bias(2, k, 64) for k in range(2, 40)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    # shape check: the tail sum stays under a constant times s K^2 / r_K
    ratios = [truncation_bias(2, k, 64) / (64 * k * k / radius_r(k, 2)) for k in range(20, 40)]
    assert max(ratios) < 10 * min(ratios)
    assert annulus_count(2, 2, 4) == (2 * 8 + 1) ** 2 - 1


def test_default_k_max_residual():
    k = default_k_max(2, 512)
    assert truncation_bias(2, k, 512) < 1e-3 <= truncation_bias(2, k - 1, 512)
    assert k_max_for_margin(halo_margin(7, 2), 2) == 7


def test_sampled_levels_are_far_and_have_the_right_count():
    c = generate_configuration(2, Window((0, 0), (256, 256)), 5)
    plans = _plan_levels(c, 20, (0, 0), (255, 255), budget=1 << 18)
    sampled = [p for p in plans if not p.explicit]
    assert sampled and all(p.level >= 5 for p in sampled)
    p = sampled[0]
    counts = []
    for seed in range(200):
        c = generate_configuration(2, Window((0, 0), (256, 256)), seed)
        counts.append(len(_sampled_centers(c, p, (0, 0), (255, 255))))
    # centres whose cube holds the whole core cut nothing and are skipped
    inner = max(0, 2 * p.reach - 255 + 1)
    total = (p.center_hi[0] - p.center_lo[0] + 1) ** 2 - inner**2
    mean = total * 2.0 ** -p.level
    assert abs(np.mean(counts) - mean) < 4 * math.sqrt(mean / 200) + 0.05 * mean


def test_sampled_and_explicit_agree_in_distribution():
    # cut edge fraction with a small budget (sampling) vs the default budget
    a, b = [], []
    for seed in range(6):
        c = generate_configuration(2, Window((0, 0), (96, 96)), 40 + seed)
        a.append((compute_edge_cutlevels(c, 12, budget=1 << 15).levels >= 9).mean())
        b.append((compute_edge_cutlevels(c, 12).levels >= 9).mean())
    assert abs(np.mean(a) - np.mean(b)) < 0.1


def test_truncation_report_json():
    c = generate_configuration(2, Window((0, 0), (32, 32)), 1)
    h = build_hierarchy(compute_edge_cutlevels(c, 5))
    rep = h.truncation.to_dict()
    assert rep["k_max"] == 5 and rep["margin"] == halo_margin(5, 2)
    assert rep["residual_bound"] == truncation_bias(2, 5, 16)
