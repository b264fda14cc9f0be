"""Detectors for the enclosure and cutter-hit events, K(r) and reference curves.

``E_k(x)``
    some k-cutter encloses ``x``: a centre ``x0`` with ``||x - x0|| < r_k``.
``U_k(s)``
    some k-cutter crosses the cube ``S(x, s)``; equivalently a k-seed lies in
    the annulus ``r_k - s < ||x0 - x|| <= r_k + s`` of cutter centres.
``C_k(s)``
    the union of ``U_j(s)`` over ``k <= j <= K_max``.

All detectors read seeds straight from the configuration (its stored bits or
its coin field), so they are exact; they raise :class:`UndecidableError` when
the needed bits are not available.
"""

import enum
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from ._trials import run_trials, trial_seed
from .clumping import (EXPLICIT_BUDGET, Cutter, _annulus_boxes, annulus_count,
                       cutter_reach, radius_r, seed_mask, shift_s, truncation_bias)
from .errors import ArgumentError, RangeError, UndecidableError
from .lattice import Configuration, Window, as_site, generate_configuration


class EventKind(enum.Enum):
    ENCLOSED = "enclosed"
    CUTTER_HITS = "cutter_hits"
    CUTTER_HITS_TAIL = "cutter_hits_tail"


@dataclass(frozen=True)
class EventReport:
    kind: EventKind
    level: int
    scale: float
    occurred: bool
    witness: Optional[Cutter] = None
    residual: float = 0.0


def _centers_in_box(c: Configuration, k: int, lo, hi) -> np.ndarray:
    """Centres of k-cutters lying in the box ``[lo, hi]`` (inclusive)."""
    d = c.dimension
    s = shift_s(k, d)[0]
    shape = [b - a + 1 for a, b in zip(lo, hi)]
    if any(n <= 0 for n in shape):
        return np.zeros((0, d), dtype=np.int64)
    seed_lo = list(lo)
    seed_lo[0] -= s
    shape[0] += k - 1
    if math.prod(shape) > 4 * EXPLICIT_BUDGET:
        raise UndecidableError(f"level {k} needs {math.prod(shape)} sites; too many to enumerate")
    bits = c.box_bits(seed_lo, shape)
    mask = seed_mask(bits, k, periodic=False)
    return np.argwhere(mask) + np.asarray(lo, dtype=np.int64)


def _witness(centers: np.ndarray, k: int, d: int) -> Optional[Cutter]:
    if centers.shape[0] == 0:
        return None
    first = centers[np.lexsort(centers.T[::-1])[0]]
    return Cutter(tuple(int(v) for v in first), k, radius_r(k, d))


def _origin(c: Configuration, x):
    return (0,) * c.dimension if x is None else as_site(x, c.dimension)


def detect_enclosed(c: Configuration, k: int, x=None) -> EventReport:
    """``E_k(x)`` (``x`` defaults to the origin)."""
    if int(k) < 1:
        raise ArgumentError("level must be >= 1")
    k = int(k)
    x = _origin(c, x)
    reach = cutter_reach(k, c.dimension)
    centers = _centers_in_box(c, k, [v - reach for v in x], [v + reach for v in x])
    w = _witness(centers, k, c.dimension)
    return EventReport(EventKind.ENCLOSED, k, radius_r(k, c.dimension), w is not None, w)


def _hit_centers(c: Configuration, k: int, s: float, x) -> np.ndarray:
    d = c.dimension
    r = radius_r(k, d)
    if float(s) == int(s):
        outer = cutter_reach(k, d) + int(s)
        inner = cutter_reach(k, d) - int(s)
    else:
        outer = math.floor(r + s)
        inner = math.floor(r - s)
    olo = [v - outer for v in x]
    ohi = [v + outer for v in x]
    if inner >= 0:
        boxes = _annulus_boxes(olo, ohi, [v - inner for v in x], [v + inner for v in x])
    else:
        boxes = [(tuple(olo), tuple(ohi))]
    found = [_centers_in_box(c, k, blo, bhi) for blo, bhi in boxes]
    return np.concatenate(found) if found else np.zeros((0, d), dtype=np.int64)


def detect_cutter_hits(c: Configuration, k: int, s: float, x=None) -> EventReport:
    """``U_k(s)``: some k-cutter crosses the cube of radius ``s`` around ``x``."""
    if int(k) < 1:
        raise ArgumentError("level must be >= 1")
    if not s > 0:
        raise ArgumentError("s must be positive")
    k = int(k)
    x = _origin(c, x)
    w = _witness(_hit_centers(c, k, s, x), k, c.dimension)
    return EventReport(EventKind.CUTTER_HITS, k, float(s), w is not None, w)


def tail_k_max(d: int, s: float, budget: int = EXPLICIT_BUDGET) -> int:
    """Largest level whose annulus of centres can still be enumerated."""
    k = 2
    while annulus_count(k + 1, d, s) <= 4 * budget:
        k += 1
    return k


def detect_cutter_tail(c: Configuration, k: int, s: float, k_max: Optional[int] = None, x=None) -> EventReport:
    """``C_k(s)``, truncated at ``k_max``; the witness is the lowest hitting level."""
    d = c.dimension
    k_max = tail_k_max(d, s) if k_max is None else int(k_max)
    if k_max < k:
        raise ArgumentError("k_max must be >= k")
    residual = truncation_bias(d, max(k_max, 2), s)
    x = _origin(c, x)
    for j in range(int(k), k_max + 1):
        w = _witness(_hit_centers(c, j, s, x), j, d)
        if w is not None:
            return EventReport(EventKind.CUTTER_HITS_TAIL, int(k), float(s), True, w, residual)
    return EventReport(EventKind.CUTTER_HITS_TAIL, int(k), float(s), False, None, residual)


# -- K(r) and theory curves -------------------------------------------------------

def K_of_r(r: float, d: int) -> int:
    """The level ``K`` with ``r_{K+1} < r <= r_{K+2}``."""
    if not r > radius_r(2, d):
        raise RangeError(f"r must exceed r_2 = {radius_r(2, d)}")
    k = 1
    while radius_r(k + 2, d) < r:
        k += 1
    return k


@dataclass(frozen=True)
class TheoryParams:
    """Exponents of the main tail bound for dimension ``d``."""

    d: int
    log_power: int = 4

    @property
    def alpha(self) -> float:
        return 1.0 / (1.0 + self.d / 4.0)

    @property
    def beta(self) -> float:
        return self.d * self.alpha / 2.0

    @property
    def beta_prelim(self) -> float:
        return 1.0 / (1.0 + 2.0 / self.d)

    @property
    def ceiling(self) -> float:
        # no equivariant rule has a finite moment of order d/2
        return self.d / 2.0


def theoretical_bound(r, d: int, c: float = 1.0, variant: str = "main"):
    """Reference tail curve.

    ``main``: ``c (ln r)^4 r^-beta``; ``preliminary``: ``c (ln r)^2 r^-beta'``;
    ``ceiling``: ``c r^-(d/2)``.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 1):
        raise ArgumentError("r must exceed 1")
    if not c > 0:
        raise ArgumentError("c must be positive")
    p = TheoryParams(int(d))
    if variant == "main":
        out = c * np.log(r) ** p.log_power * r ** -p.beta
    elif variant == "preliminary":
        out = c * np.log(r) ** 2 * r ** -p.beta_prelim
    elif variant == "ceiling":
        out = c * r ** -p.ceiling
    else:
        raise ArgumentError(f"unknown variant {variant!r}")
    return float(out) if out.ndim == 0 else out


# -- frequency harness --------------------------------------------------------------

@dataclass
class EventRow:
    kind: str
    k: int
    s: float
    trials: int
    count: int
    bound: float

    @property
    def p_hat(self) -> float:
        return self.count / self.trials

    @property
    def stderr(self) -> float:
        p = self.p_hat
        return math.sqrt(p * (1 - p) / self.trials)

    @property
    def ok(self) -> bool:
        return self.p_hat <= self.bound + 3 * self.stderr

    def to_dict(self) -> dict:
        return {"event": self.kind, "k": self.k, "s": self.s, "trials": self.trials, "count": self.count,
                "p_hat": self.p_hat, "stderr": self.stderr, "bound": self.bound, "ok": self.ok}


def event_frequencies(d: int, trials: int, rng_seed: int, enclosed_levels: Sequence[int] = (),
                      hit_levels: Sequence[int] = (), scales: Sequence[float] = (), bias: float = 0.5,
                      threads: Optional[int] = None) -> List[EventRow]:
    """Frequencies of ``E_k^c`` and ``U_k(s)`` at the origin over independent fields.

    Each trial draws a fresh coin field; bits are generated only where the
    detectors look.
    """
    if trials < 1:
        raise ArgumentError("trials must be >= 1")
    enclosed_levels = [int(k) for k in enclosed_levels]
    pairs = [(int(k), s) for k in hit_levels for s in scales]

    def one(t):
        c = generate_configuration(d, Window((0,) * d, (1,) * d), trial_seed(rng_seed, t), bias)
        miss = [not detect_enclosed(c, k).occurred for k in enclosed_levels]
        hits = [detect_cutter_hits(c, k, s).occurred for k, s in pairs]
        return miss, hits

    results = run_trials(one, trials, threads)
    rows = []
    for i, k in enumerate(enclosed_levels):
        n = sum(r[0][i] for r in results)
        rows.append(EventRow("enclosed_complement", k, radius_r(k, d), trials, int(n), math.exp(-k)))
    for i, (k, s) in enumerate(pairs):
        n = sum(r[1][i] for r in results)
        rows.append(EventRow("cutter_hits", k, float(s), trials, int(n), annulus_count(k, d, s) * 2.0**-k))
    return rows
