"""Meshalkin bracket matching on lines and cycles, lifted to ``Z^d``.

In one dimension a zero immediately to the left of a one is matched to it,
the pair is removed, and the procedure repeats.  The fixed point is the usual
bracket matching (zeros open, ones close) and does not depend on the order in
which adjacent pairs are removed.  In higher dimensions every line parallel to
a chosen axis is matched independently.

Sites that the finite rule leaves without a partner are flagged as censored;
no pairing is invented for them.

The tail law targeted by the statistics harness for this rule is
``P(Z > r) ~ c r^(-1/2)``, which follows from reading the bracket walk as a
simple symmetric random walk and looking at its first return to zero.
"""

import csv
import enum
import io
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Tuple

import numpy as np

from . import _backend
from .errors import ArgumentError, ConsistencyError
from .lattice import Configuration, Geometry, Torus, Window


class Topology(enum.Enum):
    LINE = "line"
    CYCLE = "cycle"


def _as_bits(bits) -> np.ndarray:
    if isinstance(bits, str):
        bits = [int(ch) for ch in bits if not ch.isspace()]
    arr = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits, dtype=np.int64).reshape(-1)
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ArgumentError("bit sequences may only contain 0 and 1")
    return arr.astype(np.uint8)


def _topology(topology) -> Topology:
    if isinstance(topology, Topology):
        return topology
    try:
        return Topology(str(topology).lower())
    except ValueError:
        raise ArgumentError(f"unknown topology {topology!r}") from None


@dataclass(eq=False)
class Matching:
    """Partial involution on the sites of a finite geometry.

    All per-site arrays are flat in row-major order of ``geometry``.
    ``partner[i]`` is the flat index of the partner of site ``i`` or -1,
    ``stage[i]`` the level at which the pair was formed (-1 if unmatched) and
    ``censored[i]`` marks sites whose partner is not determined by the finite
    data (left unmatched, or paired only by a truncation cleanup).
    """

    geometry: Optional[Geometry]
    bits: np.ndarray
    partner: np.ndarray
    stage: np.ndarray
    censored: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return self.geometry.dimension if self.geometry is not None else 1

    @property
    def n_sites(self) -> int:
        return int(self.partner.size)

    @property
    def matched(self) -> np.ndarray:
        return self.partner >= 0

    @property
    def n_pairs(self) -> int:
        return int(self.matched.sum()) // 2

    @property
    def n_unmatched(self) -> int:
        return int((~self.matched).sum())

    def partner_of(self, x):
        p = self.partner[self.geometry.index(x)]
        return None if p < 0 else self.geometry.site(p)

    def pair_set(self) -> set:
        """Pairs as ``(tail_index, head_index)`` flat-index tuples."""
        idx = np.flatnonzero((self.partner >= 0) & (self.bits == 0))
        return {(int(i), int(self.partner[i])) for i in idx}

    def pairs(self) -> np.ndarray:
        idx = np.flatnonzero((self.partner >= 0) & (self.bits == 0))
        return np.stack([idx, self.partner[idx]], axis=1) if idx.size else np.zeros((0, 2), dtype=np.int64)

    def coordinates(self) -> np.ndarray:
        """``(n_sites, d)`` array of site coordinates."""
        g = self.geometry
        local = np.stack(np.unravel_index(np.arange(self.n_sites), g.sides), axis=1)
        return local + np.asarray(g.corner, dtype=np.int64)

    def distances(self) -> np.ndarray:
        """l-infinity distance to the partner; -1 where unmatched."""
        g = self.geometry
        out = np.full(self.n_sites, -1, dtype=np.int64)
        idx = np.flatnonzero(self.partner >= 0)
        if idx.size == 0:
            return out
        a = np.stack(np.unravel_index(idx, g.sides), axis=1)
        b = np.stack(np.unravel_index(self.partner[idx], g.sides), axis=1)
        diff = np.abs(a - b)
        if g.periodic:
            sides = np.asarray(g.sides)
            diff = np.minimum(diff, sides - diff)
        out[idx] = diff.max(axis=1)
        return out

    def check(self) -> None:
        """Raise :class:`ConsistencyError` unless the matching invariants hold."""
        p = self.partner
        idx = np.flatnonzero(p >= 0)
        if np.any(p[p[idx]] != idx):
            raise ConsistencyError("partner map is not an involution")
        if np.any(p[idx] == idx):
            raise ConsistencyError("a site is matched to itself")
        if np.any(self.bits[idx] == self.bits[p[idx]]):
            raise ConsistencyError("a pair joins equal bits")
        if np.any(self.stage[idx] != self.stage[p[idx]]):
            raise ConsistencyError("the two ends of a pair disagree on the stage")
        if np.any((p < 0) & ~self.censored):
            raise ConsistencyError("an unmatched site is not flagged as censored")

    def csv_rows(self, extra: Optional[dict] = None) -> Iterable[list]:
        d = self.dimension
        coords = self.coordinates()
        header = [f"x{i + 1}" for i in range(d)] + [f"p{i + 1}" for i in range(d)] + ["stage", "censored"]
        extra = extra or {}
        header += list(extra)
        yield header
        cols = [np.asarray(v) for v in extra.values()]
        for i in range(self.n_sites):
            p = self.partner[i]
            row = coords[i].tolist()
            row += coords[p].tolist() if p >= 0 else [""] * d
            row += [int(self.stage[i]), int(self.censored[i])]
            row += [c[i].item() for c in cols]
            yield row

    def to_csv(self, fh=None, extra: Optional[dict] = None) -> str:
        buf = fh if fh is not None else io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        for row in self.csv_rows(extra):
            writer.writerow(row)
        return buf.getvalue() if fh is None else ""


def _line_matching(bits: np.ndarray, partner: np.ndarray, cyclic: bool) -> Matching:
    n = bits.size
    geom = None if n == 0 else (Torus((n,)) if cyclic else Window((0,), (n,)))
    matched = partner >= 0
    stage = np.where(matched, 0, -1).astype(np.int32)
    return Matching(geom, bits, partner, stage, ~matched, {"rule": "meshalkin"})


def meshalkin_match_line(bits, topology=Topology.LINE) -> Matching:
    """Bracket matching of one finite 0/1 sequence (a string or an array)."""
    arr = _as_bits(bits)
    if arr.size == 0:
        raise ArgumentError("the sequence must be nonempty")
    cyclic = _topology(topology) is Topology.CYCLE
    partner = _backend.kernels().meshalkin_rows(arr.reshape(1, -1), cyclic).reshape(-1)
    return _line_matching(arr, partner, cyclic)


def naive_bracket_oracle(bits, topology=Topology.LINE) -> Matching:
    """Reference matching by literal repeated removal of adjacent ``01`` pairs.

    Quadratic; every round matches all adjacent ``01`` pairs of the current
    remaining sequence at once (they are disjoint), then deletes them.
    """
    arr = _as_bits(bits)
    cyclic = _topology(topology) is Topology.CYCLE
    n = arr.size
    partner = np.full(n, -1, dtype=np.int64)
    remaining: List[int] = list(range(n))
    b = arr.tolist()
    while True:
        m = len(remaining)
        found: List[Tuple[int, int]] = []
        for pos in range(m if cyclic else m - 1):
            i = remaining[pos]
            j = remaining[(pos + 1) % m]
            if i != j and b[i] == 0 and b[j] == 1:
                found.append((i, j))
        if not found:
            break
        gone = set()
        for i, j in found:
            partner[i] = j
            partner[j] = i
            gone.update((i, j))
        remaining = [x for x in remaining if x not in gone]
    return _line_matching(arr, partner, cyclic)


def meshalkin_lift(c: Configuration, axis: Optional[int] = None) -> Matching:
    """Match every line parallel to coordinate ``axis`` (1-based, default ``d``).

    Lines are cycles on a torus and segments on a window.
    """
    d = c.dimension
    if axis is None:
        axis = d
    if not 1 <= int(axis) <= d:
        raise ArgumentError(f"axis must lie in [1, {d}], got {axis}")
    axis = int(axis) - 1
    n = c.sides[axis]
    rows = np.moveaxis(c.array, axis, -1).reshape(-1, n)
    local = _backend.kernels().meshalkin_rows(rows, c.periodic)
    index = np.moveaxis(np.arange(c.n_sites).reshape(c.sides), axis, -1).reshape(-1, n)
    partner = np.full(c.n_sites, -1, dtype=np.int64)
    has = local >= 0
    r, i = np.nonzero(has)
    partner[index[r, i]] = index[r, local[r, i]]
    matched = partner >= 0
    stage = np.where(matched, 0, -1).astype(np.int32)
    bits = np.ascontiguousarray(c.array).reshape(-1)
    return Matching(c.geometry, bits, partner, stage, ~matched, {"rule": "meshalkin", "axis": axis + 1})
