"""Seeds, cutters, edge cut levels and the clump hierarchy.

A site ``x`` is a *k-seed* when its coin is 1 and the next ``k - 1`` sites
along the first axis are 0.  Every k-seed induces a *k-cutter*: the
l-infinity sphere of radius ``r_k = (2^k k^2)^(1/d) + 1/2`` centred at
``seed + s_k`` with ``s_k = floor(100 r_k) e_1``.  Because ``r_k`` is never an
integer no site lies on a cutter, so a cutter splits the lattice cleanly
into the sites strictly inside (``||x - c|| <= floor(r_k)``) and the rest.

A k-clump is a connected component of the lattice graph after deleting every
edge separated by a cutter of level ``> k``.  Each edge therefore carries a
*cut level* (the largest level of a separating cutter, 0 if none) and the
k-clumps are the components of the edges whose cut level is at most ``k``.
The hierarchy is built once with a Kruskal pass that records the merge
forest; clump queries at any level walk that forest.

Finite truncation
-----------------
Cutters of level above ``K_max`` are dropped.  :func:`truncation_bias` bounds
the probability that a dropped cutter touches the core window.  Seeds are read
from the configuration's coin field wherever they fall, so a window
configuration only needs to store its core.  For levels whose candidate-seed
box exceeds :data:`EXPLICIT_BUDGET` sites the seeds are drawn directly from
their law instead (binomial count, uniform positions over the annulus of
relevant centres); those boxes sit far from the core and from every other
level because of the ``s_k`` shift, which is checked before sampling.
"""

import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import _backend
from .errors import ArgumentError, RangeError, UndecidableError, UnsupportedGeometryError
from .lattice import BoxRegion, Configuration, Site, Torus, Window, as_site, linf_distance

EXPLICIT_BUDGET = 1 << 23
DEFAULT_RESIDUAL = 1e-3


# -- radii and shifts --------------------------------------------------------

def _iroot(n: int, d: int) -> int:
    """Largest integer ``q`` with ``q**d <= n``."""
    if n < 0:
        raise ArgumentError("negative radicand")
    if n < 2 or d == 1:
        return n
    x = 1 << ((n.bit_length() + d - 1) // d)
    while True:
        y = ((d - 1) * x + n // x ** (d - 1)) // d
        if y >= x:
            return x
        x = y


def _check_level(k, d):
    if int(k) < 1:
        raise ArgumentError(f"level must be >= 1, got {k}")
    if int(d) < 1:
        raise ArgumentError(f"dimension must be >= 1, got {d}")
    return int(k), int(d)


def radius_r(k: int, d: int) -> float:
    """Cutter radius ``(2^k k^2)^(1/d) + 1/2``."""
    k, d = _check_level(k, d)
    m = (1 << k) * k * k
    q = _iroot(m, d)
    if q.bit_length() > 1000:
        raise RangeError(f"r_k overflows a double for k={k}, d={d}")
    if q**d == m:
        return q + 0.5
    try:
        val = float(m) ** (1.0 / d) + 0.5
    except OverflowError:
        raise RangeError(f"r_k overflows a double for k={k}, d={d}") from None
    if not math.isfinite(val):
        raise RangeError(f"r_k overflows a double for k={k}, d={d}")
    return val


def cutter_reach(k: int, d: int) -> int:
    """``floor(r_k)`` computed exactly: sites with ``||x - c|| <= reach`` are inside."""
    k, d = _check_level(k, d)
    m = (1 << k) * k * k
    q = _iroot(m << d, d)  # floor(2 * m^(1/d))
    return (q + 1) // 2


def shift_s(k: int, d: int) -> Site:
    """``floor(100 r_k) e_1`` computed exactly."""
    k, d = _check_level(k, d)
    radius_r(k, d)  # range check
    m = (1 << k) * k * k
    first = _iroot(m * 100**d, d) + 50
    return (first,) + (0,) * (d - 1)


def halo_margin(k_max: int, d: int) -> int:
    """Dilation of the core that holds every seed of level <= ``k_max`` relevant to it."""
    return math.ceil(102 * radius_r(k_max, d)) + k_max


def _ball_count(rho, d: int) -> int:
    """Number of lattice points ``y`` with ``||y|| <= rho``."""
    if rho < 0:
        return 0
    return (2 * math.floor(rho) + 1) ** d


def annulus_count(k: int, d: int, s) -> int:
    """``|S(r_k + s)| - |S(r_k - s)|``: candidate seed sites for a level-k cutter to meet ``S(s)``."""
    k, d = _check_level(k, d)
    reach = cutter_reach(k, d)
    if float(s) == int(s):
        s = int(s)
        outer = (2 * (reach + s) + 1) ** d
        inner_floor = reach - s  # floor(r - s) with r = reach + frac, 0 < frac < 1
        inner = 0 if inner_floor < 0 else (2 * inner_floor + 1) ** d
        return outer - inner
    r = radius_r(k, d)
    return _ball_count(r + s, d) - _ball_count(r - s, d)


def truncation_bias(c, k_max: int, s) -> float:
    """Union bound on a cutter of level above ``k_max`` meeting ``S(s)``.

    ``c`` is a configuration or a bare dimension.  Terms are summed until they
    fall below 1e-15 past the point where ``r_j`` exceeds ``s`` (from there the
    terms decrease geometrically).
    """
    d = c.dimension if isinstance(c, Configuration) else int(c)
    if int(k_max) < 2:
        raise ArgumentError("k_max must be >= 2")
    if not s > 0:
        raise ArgumentError("s must be positive")
    total = 0.0
    j = int(k_max) + 1
    while True:
        term = annulus_count(j, d, s) * 2.0**-j
        total += term
        if term < 1e-15 and radius_r(j, d) > s:
            return total
        j += 1


def default_k_max(d: int, s, tol: float = DEFAULT_RESIDUAL) -> int:
    """Smallest ``K >= 2`` whose truncation residual over ``S(s)`` is below ``tol``."""
    k = 2
    while truncation_bias(d, k, s) >= tol:
        k += 1
    return k


def k_max_for_margin(margin: int, d: int) -> int:
    """Largest ``K >= 2`` whose halo fits in ``margin``."""
    if halo_margin(2, d) > margin:
        raise ArgumentError(f"margin {margin} is below the level-2 halo {halo_margin(2, d)}")
    k = 2
    while halo_margin(k + 1, d) <= margin:
        k += 1
    return k


def torus_k_max(sides: Sequence[int], d: Optional[int] = None) -> int:
    """Largest level whose cutter fits the torus (``r_k <= min(sides) / 2``); 1 if none."""
    d = len(sides) if d is None else d
    k = 1
    while radius_r(k + 1, d) <= min(sides) / 2:
        k += 1
    return k


# -- seeds and cutters ---------------------------------------------------------

@dataclass(frozen=True)
class SeedRecord:
    position: Site
    level: int


@dataclass(frozen=True)
class Cutter:
    center: Site
    level: int
    radius: float

    @property
    def reach(self) -> int:
        return cutter_reach(self.level, len(self.center))

    @property
    def seed(self) -> Site:
        s = shift_s(self.level, len(self.center))
        return tuple(a - b for a, b in zip(self.center, s))

    def encloses(self, x) -> bool:
        return linf_distance(x, self.center) < self.radius


def seed_mask(bits: np.ndarray, k: int, periodic: bool) -> np.ndarray:
    """Boolean mask of k-seeds in ``bits``.

    Periodic arrays wrap along axis 0.  Otherwise the result covers only the
    first ``n0 - (k - 1)`` positions along axis 0, whose shells fit.
    """
    bits = np.asarray(bits)
    if periodic:
        mask = bits == 1
        for n in range(1, k):
            mask &= np.roll(bits, -n, axis=0) == 0
        return mask
    n0 = bits.shape[0] - (k - 1)
    if n0 <= 0:
        return np.zeros((0,) + bits.shape[1:], dtype=bool)
    mask = bits[:n0] == 1
    for n in range(1, k):
        mask &= bits[n : n + n0] == 0
    return mask


def find_seeds(c: Configuration, k: int) -> List[SeedRecord]:
    """All k-seeds of ``c`` (on a window: those whose shell lies inside it)."""
    if int(k) < 1:
        raise ArgumentError("level must be >= 1")
    pos = seed_positions(c, k)
    return [SeedRecord(tuple(int(v) for v in p), int(k)) for p in pos]


def seed_positions(c: Configuration, k: int) -> np.ndarray:
    mask = seed_mask(c.array, int(k), c.periodic)
    local = np.argwhere(mask)
    return local + np.asarray(c.geometry.corner, dtype=np.int64)


def _sample_rng(c: Configuration, k: int, lo, hi) -> np.random.Generator:
    mask = (1 << 64) - 1
    entropy = [int(c.rng_seed), 0x5EED, int(k)] + [int(v) & mask for v in tuple(lo) + tuple(hi)]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def _annulus_boxes(outer_lo, outer_hi, inner_lo, inner_hi):
    """Disjoint boxes covering ``outer \\ inner`` (inner may be empty)."""
    d = len(outer_lo)
    if inner_lo is None or any(a > b for a, b in zip(inner_lo, inner_hi)):
        return [(tuple(outer_lo), tuple(outer_hi))]
    boxes = []
    for i in range(d):
        base_lo = [inner_lo[m] if m < i else outer_lo[m] for m in range(d)]
        base_hi = [inner_hi[m] if m < i else outer_hi[m] for m in range(d)]
        below_lo, below_hi = list(base_lo), list(base_hi)
        below_hi[i] = inner_lo[i] - 1
        above_lo, above_hi = list(base_lo), list(base_hi)
        above_lo[i] = inner_hi[i] + 1
        for blo, bhi in ((below_lo, below_hi), (above_lo, above_hi)):
            if all(a <= b for a, b in zip(blo, bhi)):
                boxes.append((tuple(blo), tuple(bhi)))
    return boxes


def _box_volume(lo, hi) -> int:
    return math.prod(max(0, b - a + 1) for a, b in zip(lo, hi))


@dataclass
class _LevelPlan:
    level: int
    reach: int
    shift: int
    center_lo: Tuple[int, ...]
    center_hi: Tuple[int, ...]
    explicit: bool

    def seed_region(self):
        lo = list(self.center_lo)
        hi = list(self.center_hi)
        lo[0] -= self.shift
        hi[0] += self.level - 1 - self.shift
        return tuple(lo), tuple(hi)


def _boxes_overlap(a, b) -> bool:
    return all(alo <= bhi and blo <= ahi for alo, ahi, blo, bhi in zip(a[0], a[1], b[0], b[1]))


def _plan_levels(c: Configuration, k_max: int, lo, hi, budget: int) -> List[_LevelPlan]:
    d = c.dimension
    plans = []
    for k in range(2, k_max + 1):
        reach = cutter_reach(k, d)
        clo = tuple(a - reach for a in lo)
        chi = tuple(b + reach for b in hi)
        plan = _LevelPlan(k, reach, shift_s(k, d)[0], clo, chi, True)
        region = plan.seed_region()
        if c.field is not None and _box_volume(*region) > budget:
            plan.explicit = False
        plans.append(plan)
    core = (tuple(lo), tuple(hi))
    for p in plans:
        if p.explicit:
            continue
        region = p.seed_region()
        clash = _boxes_overlap(region, core) or any(
            q is not p and _boxes_overlap(region, q.seed_region()) for q in plans
        )
        if clash:
            if _box_volume(*region) > 8 * budget:
                raise UndecidableError(
                    f"level {p.level} seed region overlaps another level and is too large to enumerate"
                )
            p.explicit = True
    return plans


def _explicit_centers(c: Configuration, plan: _LevelPlan) -> np.ndarray:
    rlo, rhi = plan.seed_region()
    shape = tuple(b - a + 1 for a, b in zip(rlo, rhi))
    bits = c.box_bits(rlo, shape)
    mask = seed_mask(bits, plan.level, periodic=False)
    pos = np.argwhere(mask) + np.asarray(rlo, dtype=np.int64)
    pos[:, 0] += plan.shift
    return pos


def _sampled_centers(c: Configuration, plan: _LevelPlan, lo, hi) -> np.ndarray:
    """Seeds of a far level drawn from their law over the annulus of relevant centres."""
    inner_lo = tuple(b - plan.reach for b in hi)
    inner_hi = tuple(a + plan.reach for a in lo)
    boxes = _annulus_boxes(plan.center_lo, plan.center_hi, inner_lo, inner_hi)
    vols = np.array([_box_volume(a, b) for a, b in boxes], dtype=float)
    total = int(sum(_box_volume(a, b) for a, b in boxes))
    rng = _sample_rng(c, plan.level, lo, hi)
    n = int(rng.binomial(total, 2.0**-plan.level)) if total else 0
    d = c.dimension
    if n == 0:
        return np.zeros((0, d), dtype=np.int64)
    which = rng.choice(len(boxes), size=n, p=vols / vols.sum())
    out = np.empty((n, d), dtype=np.int64)
    for b, (blo, bhi) in enumerate(boxes):
        sel = np.flatnonzero(which == b)
        for i in range(d):
            out[sel, i] = rng.integers(blo[i], bhi[i] + 1, size=sel.size)
    return np.unique(out, axis=0)


def _torus_centers(c: Configuration, k: int) -> np.ndarray:
    pos = seed_positions(c, k)
    s = np.asarray(shift_s(k, c.dimension), dtype=np.int64)
    return (pos + s) % np.asarray(c.sides, dtype=np.int64)


def _core_bounds(c: Configuration, core) -> Tuple[Site, Site]:
    if core is None:
        return c.geometry.lo, c.geometry.hi
    if isinstance(core, BoxRegion):
        return core.bounds()
    if isinstance(core, Window):
        return core.lo, core.hi
    raise ArgumentError(f"unsupported core {core!r}")


def _shell_meets_box(center: np.ndarray, radius: float, lo, hi) -> np.ndarray:
    lo = np.asarray(lo)
    hi = np.asarray(hi)
    dmin = np.maximum(np.maximum(lo - center, center - hi), 0).max(axis=1)
    dmax = np.maximum(np.abs(center - lo), np.abs(center - hi)).max(axis=1)
    return (dmin <= radius) & (radius <= dmax)


def cutters_for_level(c: Configuration, k: int, core=None) -> List[Cutter]:
    """Level-k cutters whose shell meets the core box (the whole torus on a torus)."""
    k = int(k)
    if k < 1:
        raise ArgumentError("level must be >= 1")
    d = c.dimension
    r = radius_r(k, d)
    if c.periodic:
        centers = _torus_centers(c, k)
    else:
        lo, hi = _core_bounds(c, core)
        plans = _plan_levels(c, max(k, 2), lo, hi, EXPLICIT_BUDGET)
        if k == 1:
            reach = cutter_reach(1, d)
            plan = _LevelPlan(1, reach, shift_s(1, d)[0], tuple(a - reach for a in lo), tuple(b + reach for b in hi), True)
        else:
            plan = plans[k - 2]
        centers = _explicit_centers(c, plan) if plan.explicit else _sampled_centers(c, plan, lo, hi)
        centers = centers[_shell_meets_box(centers, r, lo, hi)] if len(centers) else centers
    return [Cutter(tuple(int(v) for v in p), k, r) for p in centers]


def edge_separated_by(cut: Cutter, x, y) -> bool:
    """True iff exactly one endpoint of the unit edge ``x``-``y`` is inside ``cut``."""
    x = as_site(x, len(cut.center))
    y = as_site(y, len(cut.center))
    if sum(abs(a - b) for a, b in zip(x, y)) != 1:
        raise ArgumentError(f"{x} and {y} are not adjacent")
    return (linf_distance(x, cut.center) < cut.radius) != (linf_distance(y, cut.center) < cut.radius)


# -- edge cut levels -------------------------------------------------------------

@dataclass(eq=False)
class EdgeCutLevels:
    """Cut level of every lattice edge of a core box or torus.

    ``levels[i][x]`` belongs to the edge from local site ``x`` to ``x + e_i``.
    On a window the last slice along axis ``i`` has no edge and holds -1.
    """

    geometry: Union[Window, Torus]
    levels: np.ndarray
    k_max: int
    meta: dict = field(default_factory=dict)

    @property
    def periodic(self) -> bool:
        return self.geometry.periodic

    @property
    def dimension(self) -> int:
        return self.geometry.dimension

    def cutlevel(self, x, y) -> int:
        x = as_site(x, self.dimension)
        y = as_site(y, self.dimension)
        diff = [b - a for a, b in zip(x, y)]
        g = self.geometry
        if g.periodic:
            diff = [((v + n // 2) % n) - n // 2 if n > 2 else v % n for v, n in zip(diff, g.sides)]
        nz = [i for i, v in enumerate(diff) if v != 0]
        if len(nz) != 1 or abs(diff[nz[0]]) != 1 and not (g.periodic and g.sides[nz[0]] <= 2):
            raise ArgumentError(f"{x} and {y} are not adjacent")
        axis = nz[0]
        if diff[axis] < 0 or (g.periodic and g.sides[axis] == 2 and g.reduce(x)[axis] == 1):
            x, y = y, x
        if g.periodic:
            local = g.reduce(x)
        else:
            if not (g.contains(x) and g.contains(y)):
                raise ArgumentError("edge leaves the core")
            local = tuple(a - c for a, c in zip(x, g.corner))
        return int(self.levels[(axis,) + tuple(local)])

    def edge_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Flat ``(u, v, level, axis)`` arrays over every edge."""
        sides = self.geometry.sides
        n = math.prod(sides)
        idx = np.arange(n, dtype=np.int64).reshape(sides)
        us, vs, ls, axs = [], [], [], []
        for i in range(self.dimension):
            nxt = np.roll(idx, -1, axis=i)
            lev = self.levels[i]
            if self.periodic:
                if sides[i] == 1:
                    continue
                sl = (slice(None),) * self.dimension
            else:
                sl = tuple(slice(0, sides[i] - 1) if m == i else slice(None) for m in range(self.dimension))
            us.append(idx[sl].ravel())
            vs.append(nxt[sl].ravel())
            ls.append(lev[sl].ravel())
            axs.append(np.full(us[-1].size, i, dtype=np.int8))
        if not us:
            z = np.zeros(0, dtype=np.int64)
            return z, z, z.astype(np.int16), z.astype(np.int8)
        return np.concatenate(us), np.concatenate(vs), np.concatenate(ls), np.concatenate(axs)


def _face_boxes(centers: np.ndarray, reach: int, lo, hi):
    """Edge boxes (core-local, inclusive) where a cube of ``reach`` crosses the core."""
    d = centers.shape[1]
    lo = np.asarray(lo, dtype=np.int64)
    hi = np.asarray(hi, dtype=np.int64)
    axes, los, his = [], [], []
    if centers.shape[0] == 0:
        return np.zeros(0, dtype=np.int64), np.zeros((0, d), dtype=np.int64), np.zeros((0, d), dtype=np.int64)
    box_lo = np.maximum(centers - reach, lo)
    box_hi = np.minimum(centers + reach, hi)
    for i in range(d):
        for plane in (centers[:, i] + reach, centers[:, i] - reach - 1):
            flo = box_lo.copy()
            fhi = box_hi.copy()
            flo[:, i] = plane
            fhi[:, i] = plane
            ok = (plane >= lo[i]) & (plane <= hi[i] - 1) & np.all(flo <= fhi, axis=1)
            if ok.any():
                axes.append(np.full(int(ok.sum()), i, dtype=np.int64))
                los.append(flo[ok] - lo)
                his.append(fhi[ok] - lo)
    if not axes:
        return np.zeros(0, dtype=np.int64), np.zeros((0, d), dtype=np.int64), np.zeros((0, d), dtype=np.int64)
    return np.concatenate(axes), np.concatenate(los), np.concatenate(his)


def _fold_torus(padded: np.ndarray, pad: int, sides) -> np.ndarray:
    out = padded
    for t, side in enumerate(sides):
        ax = t + 1
        length = out.shape[ax]
        chunks = -(-length // side)
        extra = chunks * side - length
        if extra:
            widths = [(0, 0)] * out.ndim
            widths[ax] = (0, extra)
            out = np.pad(out, widths, constant_values=-1)
        shape = out.shape[:ax] + (chunks, side) + out.shape[ax + 1 :]
        out = out.reshape(shape).max(axis=ax)
        out = np.roll(out, -pad, axis=ax)
    return out


def compute_edge_cutlevels(c: Configuration, k_max: Optional[int] = None, core=None,
                           budget: int = EXPLICIT_BUDGET) -> EdgeCutLevels:
    """Cut level of every core edge from cutters of levels ``2..k_max``.

    ``core`` is a :class:`BoxRegion` or :class:`Window` inside ``c``'s window
    (default: the whole window).  On a torus the core is the torus and
    ``k_max`` defaults to (and may not exceed) :func:`torus_k_max`.  On a
    window ``k_max`` defaults to :func:`default_k_max` for the core radius.
    """
    d = c.dimension
    kernels = _backend.kernels()
    meta: Dict[str, object] = {"cutters": {}, "sampled_levels": []}
    if c.periodic:
        limit = torus_k_max(c.sides, d)
        k_max = limit if k_max is None else int(k_max)
        if k_max > limit:
            raise UnsupportedGeometryError(
                f"torus sides {c.sides} only fit cutters up to level {limit}, asked for {k_max}"
            )
        sides = c.sides
        reach_max = cutter_reach(k_max, d) if k_max >= 2 else 0
        pad = reach_max + 1
        lo = tuple(-pad for _ in sides)
        hi = tuple(s - 1 + pad for s in sides)
        cut = np.zeros((d,) + tuple(s + 2 * pad for s in sides), dtype=np.int16)
        for k in range(2, k_max + 1):
            centers = _torus_centers(c, k)
            meta["cutters"][k] = int(len(centers))
            fa, flo, fhi = _face_boxes(centers, cutter_reach(k, d), lo, hi)
            kernels.rasterize_faces(cut, fa, flo, fhi, np.full(fa.size, k, dtype=np.int64))
        levels = np.ascontiguousarray(_fold_torus(cut, pad, sides))
        levels = np.maximum(levels, 0).astype(np.int16)
        return EdgeCutLevels(c.geometry, levels, k_max, meta)

    lo, hi = _core_bounds(c, core)
    if not (c.geometry.contains(lo) and c.geometry.contains(hi)):
        raise ArgumentError("core must lie inside the configuration window")
    core_window = Window(lo, tuple(b - a + 1 for a, b in zip(lo, hi)))
    if k_max is None:
        k_max = default_k_max(d, max(core_window.sides) / 2)
    k_max = int(k_max)
    if k_max < 2:
        raise ArgumentError("k_max must be >= 2")
    cut = np.zeros((d,) + core_window.sides, dtype=np.int16)
    plans = _plan_levels(c, k_max, lo, hi, budget)
    for plan in plans:
        if plan.explicit:
            centers = _explicit_centers(c, plan)
        else:
            centers = _sampled_centers(c, plan, lo, hi)
            meta["sampled_levels"].append(plan.level)
        meta["cutters"][plan.level] = int(len(centers))
        fa, flo, fhi = _face_boxes(centers, plan.reach, lo, hi)
        kernels.rasterize_faces(cut, fa, flo, fhi, np.full(fa.size, plan.level, dtype=np.int64))
    for i in range(d):
        sl = (i,) + tuple(slice(-1, None) if m == i else slice(None) for m in range(d))
        cut[sl] = -1
    meta["approx_tv_bound"] = sum(
        _box_volume(p.center_lo, p.center_hi) * p.level * 4.0**-p.level for p in plans if not p.explicit
    )
    return EdgeCutLevels(core_window, cut, k_max, meta)


# -- hierarchy --------------------------------------------------------------------

@dataclass
class TruncationReport:
    k_max: int
    halo_margin: int
    residual_bound: float
    forced_merges: int = 0
    sampled_levels: List[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "k_max": self.k_max,
            "margin": self.halo_margin,
            "residual_bound": self.residual_bound,
            "forced_merges": self.forced_merges,
            "sampled_levels": list(self.sampled_levels),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(eq=False)
class ClumpHierarchy:
    """Merge forest of the clump hierarchy over a core window or torus.

    ``parent``/``link_level`` describe a union-by-size forest without path
    compression: following links whose level is at most ``k`` from a site
    ends at the representative of its k-clump.
    """

    geometry: Union[Window, Torus]
    parent: np.ndarray
    link_level: np.ndarray
    k_max: int
    truncation: TruncationReport

    @property
    def n_sites(self) -> int:
        return int(self.parent.size)

    @property
    def periodic(self) -> bool:
        return self.geometry.periodic

    @property
    def merge_levels(self) -> List[int]:
        links = self.link_level[self.parent != np.arange(self.n_sites)]
        return sorted(int(v) for v in np.unique(links))

    def labels(self, k: int, sites=None) -> np.ndarray:
        """Representative of each site's k-clump (all sites by default)."""
        if sites is None:
            sites = np.arange(self.n_sites, dtype=np.int64)
        return _backend.kernels().representatives(self.parent, self.link_level, np.asarray(sites, dtype=np.int64), int(k))

    def partition(self, k: int) -> np.ndarray:
        """Clump labels ``0..m-1`` numbered by first appearance in row-major order."""
        reps = self.labels(k)
        _, first, inverse = np.unique(reps, return_index=True, return_inverse=True)
        order = np.argsort(first)
        rank = np.empty_like(order)
        rank[order] = np.arange(order.size)
        return rank[inverse]

    def n_clumps(self, k: int) -> int:
        return int(np.unique(self.labels(k)).size)

    def clump(self, x, k: int) -> np.ndarray:
        """Flat indices of the k-clump containing site ``x``."""
        i = self.geometry.index(x)
        reps = self.labels(k)
        return np.flatnonzero(reps == reps[i])

    def sizes(self, k: int) -> np.ndarray:
        reps = self.labels(k)
        _, inverse, counts = np.unique(reps, return_inverse=True, return_counts=True)
        return counts[inverse]


def build_hierarchy(e: EdgeCutLevels, residual_s: Optional[float] = None) -> ClumpHierarchy:
    """Kruskal pass over edges in increasing cut level (uncut edges join at level 1)."""
    n = e.geometry.n_sites
    u, v, lev, _ = e.edge_arrays()
    eff = np.maximum(lev, 1).astype(np.int16)
    order = np.argsort(eff, kind="stable")
    parent, link = _backend.kernels().kruskal_forest(n, u[order], v[order], eff[order])
    roots = np.flatnonzero(parent == np.arange(n))
    forced = 0
    if roots.size > 1:
        parent = parent.copy()
        link = link.copy()
        parent[roots[1:]] = roots[0]
        link[roots[1:]] = e.k_max + 1
        forced = int(roots.size - 1)
    d = e.dimension
    if e.periodic:
        residual, margin = 0.0, 0
    else:
        s = residual_s if residual_s is not None else max(e.geometry.sides) / 2
        residual = truncation_bias(d, e.k_max, s) if e.k_max >= 2 else float("inf")
        margin = halo_margin(e.k_max, d)
    report = TruncationReport(e.k_max, margin, residual, forced, list(e.meta.get("sampled_levels", [])))
    return ClumpHierarchy(e.geometry, parent, link, e.k_max, report)
