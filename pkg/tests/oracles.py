"""Slow reference computations used by several test modules."""

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from eqmatch.clumping import cutter_reach, radius_r, shift_s


def brute_seeds(bits_lookup, k, lo, hi):
    """Seed positions in ``[lo, hi]`` by direct evaluation of the predicate."""
    out = []
    for x in np.ndindex(*[b - a + 1 for a, b in zip(lo, hi)]):
        x = tuple(int(v) + a for v, a in zip(x, lo))
        if bits_lookup(x) != 1:
            continue
        if all(bits_lookup((x[0] + n,) + x[1:]) == 0 for n in range(1, k)):
            out.append(x)
    return out


def brute_cutlevels(c, k_max, lo, hi):
    """Cut level of every core edge by testing each cutter against each edge."""
    d = c.dimension
    sides = tuple(b - a + 1 for a, b in zip(lo, hi))
    cut = np.zeros((d,) + sides, dtype=np.int16)
    grid = np.stack(np.meshgrid(*[np.arange(a, b + 2) for a, b in zip(lo, hi)], indexing="ij"), axis=-1)
    for k in range(2, k_max + 1):
        reach = cutter_reach(k, d)
        r = radius_r(k, d)
        s = shift_s(k, d)
        clo = [a - reach - 1 for a in lo]
        chi = [b + reach + 1 for b in hi]
        slo = [a - sv for a, sv in zip(clo, s)]
        shi = [b - sv for b, sv in zip(chi, s)]
        box = c.box_bits(slo, [b - a + k for a, b in zip(slo, shi)][:1] + [b - a + 1 for a, b in zip(slo[1:], shi[1:])])
        lookup = lambda x: int(box[tuple(v - a for v, a in zip(x, slo))])
        for seed in brute_seeds(lookup, k, slo, shi):
            center = np.add(seed, s)
            inside = np.abs(grid - center).max(axis=-1) < r
            for i in range(d):
                a = inside[tuple(slice(0, n) for n in sides)]
                sl = tuple(slice(1, n + 1) if m == i else slice(0, n) for m, n in enumerate(sides))
                sep = a != inside[sl]
                cut[i] = np.where(sep, np.maximum(cut[i], k), cut[i])
    for i in range(d):
        sl = (i,) + tuple(slice(-1, None) if m == i else slice(None) for m in range(d))
        cut[sl] = -1
    return cut


def bfs_partition(levels, k, periodic):
    """Canonical clump labels at level ``k`` via scipy connected components."""
    d = levels.shape[0]
    sides = levels.shape[1:]
    n = int(np.prod(sides))
    idx = np.arange(n).reshape(sides)
    us, vs = [], []
    for i in range(d):
        nxt = np.roll(idx, -1, axis=i)
        lev = levels[i]
        ok = (np.maximum(lev, 1) <= k) & (lev >= 0)
        if not periodic:
            edge = np.ones(sides, dtype=bool)
            sl = tuple(slice(-1, None) if m == i else slice(None) for m in range(d))
            edge[sl] = False
            ok &= edge
        us.append(idx[ok])
        vs.append(nxt[ok])
    u = np.concatenate(us)
    v = np.concatenate(vs)
    g = coo_matrix((np.ones(u.size), (u, v)), shape=(n, n))
    _, labels = connected_components(g, directed=False)
    _, first, inv = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first)] = np.arange(first.size)
    return rank[inv]
