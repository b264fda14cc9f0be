"""The staged matching rule built on a clump hierarchy.

For ``k = 1, 2, ..., K_max`` every k-clump matches as many of its still
unmatched heads and tails as it can: both lists are sorted by the clump's
order key and paired i-th with i-th.  Pairs never change once formed.

Order keys
----------
On a window the key is plain lexicographic order, which is translation
invariant.  On a torus lexicographic order depends on where the coordinates
wrap, so each clump gets its own origin instead.  Along an axis where the
clump's projection leaves a unique longest gap, the origin is the first
coordinate after that gap.  Along the remaining axes it is the coordinate of an
*anchor*: the clump site whose surrounding bit pattern has the smallest hash.
Both choices move with the configuration, which is what makes the torus
matching exactly equivariant.

Finite windows
--------------
A clump that touches the boundary of the core window is not a clump of the
infinite configuration, so its sites are deferred.  After stage ``K_max`` a
cleanup stage ``K_max + 1`` pairs the survivors across the whole core; those
sites are flagged as censored and kept out of tail statistics.
"""

import json
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np

from .clumping import ClumpHierarchy, build_hierarchy, compute_edge_cutlevels
from .errors import ArgumentError, ConsistencyError
from .lattice import Configuration, Window, linf_distance
from .meshalkin import Matching, meshalkin_lift

BAD_INFINITY = np.iinfo(np.int32).max
_PATCH = 8


@dataclass(eq=False)
class StagedMatching:
    """A clump-rule matching together with the level at which each site was matched.

    ``bad_level[i]`` is the stage of site ``i``'s pair, or :data:`BAD_INFINITY`
    for sites matched only by the cleanup stage or left unmatched.
    """

    base: Matching
    bad_level: np.ndarray
    k_max: int
    meta: dict = field(default_factory=dict)

    @property
    def geometry(self):
        return self.base.geometry

    def __getattr__(self, name):
        # expose the Matching interface (partner, stage, censored, pairs, ...)
        if name == "base":
            raise AttributeError(name)
        return getattr(self.base, name)

    def stage_counts(self) -> dict:
        st = self.base.stage[(self.base.partner >= 0) & (self.base.bits == 0)]
        vals, counts = np.unique(st, return_counts=True)
        return {int(v): int(n) for v, n in zip(vals, counts)}

    def summary(self) -> dict:
        return {
            "n_sites": self.base.n_sites,
            "n_pairs": self.base.n_pairs,
            "pairs_per_stage": {str(k): v for k, v in sorted(self.stage_counts().items())},
            "censored": int(self.base.censored.sum()),
            "unmatched": self.base.n_unmatched,
            "k_max": self.k_max,
            **{k: v for k, v in self.meta.items() if k in ("residual_bound", "margin", "forced_merges")},
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True, indent=2)

    def to_csv(self, fh=None) -> str:
        bad = np.where(self.bad_level == BAD_INFINITY, -1, self.bad_level)
        return self.base.to_csv(fh, extra={"bad_level": bad})


@dataclass(frozen=True)
class Censored:
    """Displacement known only to be at least ``lower_bound``."""

    lower_bound: int


@dataclass(frozen=True)
class ClumpDiscrepancy:
    clump: int
    size: int
    zeta: int


# -- order keys ---------------------------------------------------------------

def _window_keys(sites: np.ndarray) -> np.ndarray:
    # flat row-major index is lexicographic order of the coordinates
    return sites


def _pattern_hash(bits: np.ndarray) -> np.ndarray:
    """64-bit hash of the ``8^d`` patch starting at every site (wrapping)."""
    d = bits.ndim
    rng = np.random.default_rng(0xC1A55)
    sizes = [min(_PATCH, n) for n in bits.shape]
    weights = rng.integers(1, 2**63, size=int(np.prod(sizes)), dtype=np.uint64)
    acc = np.zeros(bits.shape, dtype=np.uint64)
    for w, off in zip(weights, np.ndindex(*sizes)):
        shifted = bits
        for ax, o in enumerate(off):
            if o:
                shifted = np.roll(shifted, -o, axis=ax)
        with np.errstate(over="ignore"):
            acc += shifted.astype(np.uint64) * w
    return acc.reshape(-1) if d else acc


def _gap_offsets(group: np.ndarray, coord: np.ndarray, n: int, n_groups: int):
    """Per group: (offset, unique) where offset follows the unique longest gap."""
    offset = np.zeros(n_groups, dtype=np.int64)
    unique = np.zeros(n_groups, dtype=bool)
    pair = np.unique(group * n + coord)
    g = pair // n
    x = pair % n
    start = np.flatnonzero(np.r_[True, g[1:] != g[:-1]])
    end = np.r_[start[1:], g.size]
    # gap before each element: distance from previous element in the group (cyclic)
    prev = np.empty_like(x)
    prev[1:] = x[:-1]
    prev[start] = x[end - 1] - n
    gap = x - prev - 1
    order = np.lexsort((-gap, g))  # per group, largest gap first
    first = order[start]
    second_gap = np.full(start.size, -1, dtype=np.int64)
    has_two = (end - start) > 1
    second_gap[has_two] = gap[order[start[has_two] + 1]]
    grp = g[start]
    best = gap[first]
    offset[grp] = x[first]
    unique[grp] = (best > 0) & (best > second_gap)
    return offset, unique


def _anchor_sites(group: np.ndarray, idx: np.ndarray, phash: np.ndarray, arr: np.ndarray, n_groups: int):
    """Site of minimal pattern hash per group; ties broken by the rolled configuration."""
    h = phash[idx]
    order = np.lexsort((idx, h, group))
    g = group[order]
    start = np.flatnonzero(np.r_[True, g[1:] != g[:-1]])
    anchor = np.zeros(n_groups, dtype=np.int64)
    anchor[g[start]] = idx[order[start]]
    hs = h[order]
    tie = np.flatnonzero((start + 1 < g.size) & (np.r_[start[1:], g.size] - start > 1))
    for s in tie:
        s0 = start[s]
        if hs[s0 + 1] != hs[s0] or g[s0 + 1] != g[s0]:
            continue
        e = s0
        while e < g.size and g[e] == g[s0] and hs[e] == hs[s0]:
            e += 1
        cands = idx[order[s0:e]]
        best, best_bytes = None, None
        for cidx in cands:
            shift = np.unravel_index(cidx, arr.shape)
            rolled = np.roll(arr, tuple(-int(v) for v in shift), axis=tuple(range(arr.ndim))).tobytes()
            if best_bytes is None or rolled < best_bytes:
                best, best_bytes = cidx, rolled
        anchor[g[s0]] = best
    return anchor


def _torus_keys(sites: np.ndarray, reps: np.ndarray, sides, phash, arr) -> np.ndarray:
    """Flat key of each site relative to its clump's covariant origin."""
    d = len(sides)
    _, group = np.unique(reps, return_inverse=True)
    n_groups = int(group.max()) + 1 if group.size else 0
    coords = np.stack(np.unravel_index(sites, sides), axis=1)
    origins = np.zeros((n_groups, d), dtype=np.int64)
    need_anchor = np.zeros(n_groups, dtype=bool)
    offsets = []
    for i in range(d):
        off, uniq = _gap_offsets(group, coords[:, i], sides[i], n_groups)
        offsets.append((off, uniq))
        need_anchor |= ~uniq
    if need_anchor.any():
        sel = need_anchor[group]
        anchor = np.zeros(n_groups, dtype=np.int64)
        anchor_part = _anchor_sites(group[sel], sites[sel], phash, arr, n_groups)
        anchor[need_anchor] = anchor_part[need_anchor]
        anchor_coords = np.stack(np.unravel_index(anchor, sides), axis=1)
    for i, (off, uniq) in enumerate(offsets):
        origins[:, i] = np.where(uniq, off, anchor_coords[:, i] if need_anchor.any() else off)
    rel = (coords - origins[group]) % np.asarray(sides, dtype=np.int64)
    return np.ravel_multi_index(tuple(rel.T), sides)


# -- pairing ------------------------------------------------------------------

def _pair_within(sites: np.ndarray, bits: np.ndarray, reps: np.ndarray, keys: np.ndarray, n: int):
    """Pair heads and tails of equal ``reps`` i-th with i-th in key order."""
    order = np.lexsort((keys, bits, reps))
    s, b, r = sites[order], bits[order], reps[order]
    heads = b == 1
    nh = np.bincount(r[heads], minlength=n)
    nt = np.bincount(r[~heads], minlength=n)
    m = np.minimum(nh, nt)
    out = []
    for mask in (~heads, heads):
        rr = r[mask]
        ss = s[mask]
        start = np.flatnonzero(np.r_[True, rr[1:] != rr[:-1]]) if rr.size else np.zeros(0, dtype=np.int64)
        first = np.repeat(start, np.diff(np.r_[start, rr.size]))
        rank = np.arange(rr.size) - first
        keep = rank < m[rr]
        out.append(ss[keep])
    return out[0], out[1]


def _check_compatible(c: Configuration, h: ClumpHierarchy):
    g = h.geometry
    if c.periodic != g.periodic:
        raise ArgumentError("hierarchy and configuration disagree on the geometry")
    if g.periodic:
        if tuple(g.sides) != tuple(c.sides):
            raise ArgumentError("hierarchy torus does not match the configuration")
    elif not (c.geometry.contains(g.lo) and c.geometry.contains(g.hi)):
        raise ArgumentError("hierarchy core lies outside the configuration window")


def _boundary_sites(g: Window) -> np.ndarray:
    mask = np.zeros(g.sides, dtype=bool)
    for i in range(g.dimension):
        sl = [slice(None)] * g.dimension
        sl[i] = 0
        mask[tuple(sl)] = True
        sl[i] = -1
        mask[tuple(sl)] = True
    return np.flatnonzero(mask.reshape(-1))


def build_matching(c: Configuration, h: ClumpHierarchy) -> StagedMatching:
    """Stagewise maximal matching inside clumps, then the cleanup stage."""
    _check_compatible(c, h)
    g = h.geometry
    n = g.n_sites
    if g.periodic:
        arr = c.array
    else:
        arr = c.box_bits(g.corner, g.sides)
    bits = np.ascontiguousarray(arr).reshape(-1).astype(np.uint8)
    partner = np.full(n, -1, dtype=np.int64)
    stage = np.full(n, -1, dtype=np.int32)
    phash = _pattern_hash(arr) if g.periodic else None
    boundary = None if g.periodic else _boundary_sites(g)
    levels = set(h.merge_levels)
    k_max = h.k_max
    for k in range(1, k_max + 1):
        if k > 1 and k not in levels:
            continue
        free = np.flatnonzero(partner < 0)
        if free.size == 0:
            break
        reps = h.labels(k, free)
        if boundary is not None:
            outer = np.unique(h.labels(k, boundary))
            inner = ~np.isin(reps, outer)
            free, reps = free[inner], reps[inner]
        fb = bits[free]
        live = np.bincount(reps[fb == 1], minlength=n) > 0
        live &= np.bincount(reps[fb == 0], minlength=n) > 0
        sel = live[reps]
        free, reps, fb = free[sel], reps[sel], fb[sel]
        if free.size == 0:
            continue
        keys = _torus_keys(free, reps, g.sides, phash, arr) if g.periodic else _window_keys(free)
        tails, heads = _pair_within(free, fb, reps, keys, n)
        partner[tails] = heads
        partner[heads] = tails
        stage[tails] = k
        stage[heads] = k
    bad_level = np.where(stage > 0, stage, BAD_INFINITY).astype(np.int32)
    censored = np.zeros(n, dtype=bool)
    free = np.flatnonzero(partner < 0)
    if free.size:
        fb = bits[free]
        reps = np.zeros(free.size, dtype=np.int64)
        if g.periodic:
            keys = _torus_keys(free, reps, g.sides, phash, arr)
        else:
            keys = free
        tails, heads = _pair_within(free, fb, reps, keys, n)
        partner[tails] = heads
        partner[heads] = tails
        stage[tails] = k_max + 1
        stage[heads] = k_max + 1
        censored[tails] = True
        censored[heads] = True
    censored |= partner < 0
    meta = {"rule": "clump"}
    meta.update(h.truncation.to_dict())
    meta["margin"] = meta.get("margin", 0)
    base = Matching(g, bits, partner, stage, censored, meta)
    return StagedMatching(base, bad_level, k_max, meta)


def clump_match(c: Configuration, k_max: Optional[int] = None, core=None) -> StagedMatching:
    """Edge cut levels, hierarchy and matching in one call."""
    e = compute_edge_cutlevels(c, k_max, core)
    return build_matching(c, build_hierarchy(e))


def match(c: Configuration, rule: str = "clump", **kwargs) -> Union[Matching, StagedMatching]:
    """Dispatch to the Meshalkin lift or the clump rule."""
    rule = str(rule).lower()
    if rule == "meshalkin":
        return meshalkin_lift(c, kwargs.get("axis"))
    if rule == "clump":
        return clump_match(c, kwargs.get("k_max"), kwargs.get("core"))
    raise ArgumentError(f"unknown rule {rule!r}")


# -- queries -------------------------------------------------------------------

def _base(m) -> Matching:
    return m.base if isinstance(m, StagedMatching) else m


def boundary_distance(g, sites: Optional[np.ndarray] = None) -> np.ndarray:
    """l-infinity distance from each site to the outside of a window (large on a torus)."""
    if sites is None:
        sites = np.arange(g.n_sites)
    if g.periodic:
        return np.full(np.asarray(sites).size, np.iinfo(np.int64).max // 4, dtype=np.int64)
    local = np.stack(np.unravel_index(sites, g.sides), axis=1)
    sides = np.asarray(g.sides)
    return np.minimum(local, sides - 1 - local).min(axis=1) + 1


def displacement(m, x) -> Union[int, Censored]:
    """Partner distance of site ``x``, or :class:`Censored` when it is not determined."""
    b = _base(m)
    i = b.geometry.index(x)
    p = int(b.partner[i])
    if p >= 0 and b.partner[p] != i:
        raise ConsistencyError("partner map is not an involution")
    if not b.censored[i]:
        if p < 0:
            raise ConsistencyError(f"site {tuple(x)} is unmatched but not censored")
        sides = b.geometry.sides if b.geometry.periodic else None
        return linf_distance(b.geometry.site(i), b.geometry.site(p), sides)
    bound = int(boundary_distance(b.geometry, [i])[0]) if not b.geometry.periodic else 0
    if p >= 0:
        sides = b.geometry.sides if b.geometry.periodic else None
        dist = linf_distance(b.geometry.site(i), b.geometry.site(p), sides)
        bound = dist if b.geometry.periodic else min(bound, dist)
    return Censored(bound)


def k_bad(m: StagedMatching, x, k: int) -> bool:
    """True iff ``x`` is not matched within its k-clump."""
    if not 1 <= int(k) <= m.k_max:
        raise ArgumentError(f"level must lie in [1, {m.k_max}]")
    return bool(m.bad_level[m.geometry.index(x)] > int(k))


def discrepancy_arrays(bits: np.ndarray, labels: np.ndarray):
    """Per-site clump size and clump zeta for the clump labels ``labels``."""
    _, inv = np.unique(labels, return_inverse=True)
    size = np.bincount(inv)
    zeta = np.bincount(inv, weights=2 * bits.astype(np.int64) - 1).astype(np.int64)
    return size, zeta, inv


def clump_discrepancies(c: Configuration, h: ClumpHierarchy, k: int) -> List[ClumpDiscrepancy]:
    """Size and head-minus-tail count of every k-clump (numbered by first site)."""
    _check_compatible(c, h)
    if not 1 <= int(k) <= h.k_max + 1:
        raise ArgumentError("level out of range")
    g = h.geometry
    arr = c.array if g.periodic else c.box_bits(g.corner, g.sides)
    bits = np.ascontiguousarray(arr).reshape(-1)
    part = h.partition(int(k))
    size = np.bincount(part)
    zeta = np.bincount(part, weights=2 * bits.astype(np.int64) - 1).astype(np.int64)
    return [ClumpDiscrepancy(i, int(s), int(z)) for i, (s, z) in enumerate(zip(size, zeta))]
