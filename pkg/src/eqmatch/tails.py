"""Empirical survival curves of the displacement ``Z`` and exponent fits.

``Z`` is sampled at every eligible site of every trial configuration rather
than only at the origin; sites are exchangeable by translation invariance.
Sites are eligible when they are not censored and, on a window, lie at least
``guard`` (default: the largest radius) away from the boundary.  The
denominator is fixed across radii, so the curve is non-increasing.
"""

import csv
import io
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import stats

from ._trials import run_trials, trial_seed
from .errors import ArgumentError, DegenerateFitError, DegenerateSampleError
from .lattice import Torus, Window, generate_configuration
from .matching import boundary_distance, clump_match
from .meshalkin import meshalkin_lift

RULES = ("meshalkin", "clump")


def parse_radii(text) -> np.ndarray:
    """``"a..b"`` (geometric, 8 per octave, rounded and deduplicated) or ``"r1,r2,..."``."""
    if not isinstance(text, str):
        radii = np.asarray(list(text), dtype=np.int64)
    elif ".." in text:
        a, b = (float(v) for v in text.split(".."))
        if not 0 < a < b:
            raise ArgumentError(f"bad radius range {text!r}")
        n = int(math.floor(8 * math.log2(b / a) + 1e-9))
        radii = np.unique(np.round(a * 2.0 ** (np.arange(n + 1) / 8)).astype(np.int64))
        if radii[-1] != int(round(b)):
            radii = np.append(radii, int(round(b)))
    else:
        radii = np.asarray([int(v) for v in text.split(",") if v.strip()], dtype=np.int64)
    if radii.size == 0 or np.any(np.diff(radii) <= 0) or radii[0] < 0:
        raise ArgumentError("radii must be a non-empty increasing list of non-negative integers")
    return radii


def wilson_interval(successes, n, confidence: float = 0.95) -> Tuple[np.ndarray, np.ndarray]:
    lo, hi = [], []
    for k, m in zip(np.atleast_1d(successes).tolist(), np.atleast_1d(n).tolist()):
        ci = stats.binomtest(int(k), int(m)).proportion_ci(confidence, method="wilson")
        lo.append(ci.low)
        hi.append(ci.high)
    return np.array(lo), np.array(hi)


@dataclass
class SurvivalCurve:
    radii: np.ndarray
    survivors: np.ndarray
    at_risk: np.ndarray
    trials: int
    meta: dict = field(default_factory=dict)

    @property
    def p_hat(self) -> np.ndarray:
        return self.survivors / self.at_risk

    def intervals(self, confidence: float = 0.95):
        return wilson_interval(self.survivors, self.at_risk, confidence)

    def rows(self) -> List[list]:
        lo, hi = self.intervals()
        return [[int(r), int(s), int(n), float(p), float(a), float(b)]
                for r, s, n, p, a, b in zip(self.radii, self.survivors, self.at_risk, self.p_hat, lo, hi)]

    def to_csv(self, fh=None) -> str:
        buf = fh if fh is not None else io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "survivors", "at_risk", "p_hat", "ci_lo", "ci_hi"])
        for row in self.rows():
            w.writerow([row[0], row[1], row[2]] + [repr(v) for v in row[3:]])
        return buf.getvalue() if fh is None else ""

    @classmethod
    def from_csv(cls, text: str, trials: int = 0) -> "SurvivalCurve":
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls(np.array([int(r["r"]) for r in rows]), np.array([int(r["survivors"]) for r in rows]),
                   np.array([int(r["at_risk"]) for r in rows]), trials)


def survival_counts(dist: np.ndarray, eligible: np.ndarray, radii: np.ndarray, always: Optional[np.ndarray] = None):
    """Counts of eligible sites with ``dist > r`` for each radius.

    ``always`` marks eligible sites counted as survivors at every radius.
    """
    keep = eligible if always is None else eligible & ~always
    d = np.sort(dist[keep])
    surv = d.size - np.searchsorted(d, radii, side="right")
    if always is not None:
        surv = surv + int((eligible & always).sum())
    return surv.astype(np.int64), int(eligible.sum())


def _geometry(geometry: str, sides):
    if geometry == "torus":
        return Torus(sides)
    if geometry == "window":
        return Window((0,) * len(sides), sides)
    raise ArgumentError(f"unknown geometry {geometry!r}")


def estimate_tail(rule: str, d: int, sides, trials: int, rng_seed: int, radii, geometry: str = "torus",
                  k_max: Optional[int] = None, bias: float = 0.5, axis: Optional[int] = None,
                  censored: str = "exclude", guard: Optional[int] = None,
                  threads: Optional[int] = None) -> SurvivalCurve:
    """Pooled survival curve of ``Z`` over ``trials`` independent configurations.

    ``censored="exclude"`` drops censored sites; ``"survive"`` counts them as
    exceeding every radius (an upper envelope).
    """
    if rule not in RULES:
        raise ArgumentError(f"rule must be one of {RULES}")
    if trials < 1:
        raise ArgumentError("trials must be >= 1")
    if censored not in ("exclude", "survive"):
        raise ArgumentError("censored policy must be 'exclude' or 'survive'")
    radii = parse_radii(radii)
    sides = tuple(int(v) for v in (sides if np.ndim(sides) else (sides,) * d))
    if len(sides) != d:
        raise ArgumentError("sides must have one entry per dimension")
    guard = int(radii[-1]) if guard is None else int(guard)

    def one(t):
        g = _geometry(geometry, sides)
        c = generate_configuration(d, g, trial_seed(rng_seed, t), bias)
        if rule == "meshalkin":
            m = meshalkin_lift(c, axis)
        else:
            m = clump_match(c, k_max)
        dist = m.distances()
        eligible = boundary_distance(m.geometry) >= guard
        if censored == "exclude":
            eligible &= ~m.censored
            surv, n = survival_counts(dist, eligible, radii)
        else:
            surv, n = survival_counts(dist, eligible, radii, always=m.censored)
        return surv, n, int(m.censored.sum())

    results = run_trials(one, trials, threads)
    survivors = np.sum([r[0] for r in results], axis=0)
    n = sum(r[1] for r in results)
    if n == 0:
        raise DegenerateSampleError("no eligible sites; enlarge the geometry or lower the radii")
    meta = {"rule": rule, "d": d, "sides": list(sides), "geometry": geometry, "bias": bias,
            "rng_seed": int(rng_seed), "censored_policy": censored, "guard": guard,
            "censored_sites": sum(r[2] for r in results)}
    return SurvivalCurve(radii, survivors, np.full(radii.size, n, dtype=np.int64), trials, meta)


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    stderr: float
    intercept: float
    n_points: int


def fit_exponent(curve: SurvivalCurve, r_lo: float, r_hi: float) -> ExponentFit:
    """Least-squares slope of ``log P(Z > r)`` against ``log r`` on ``[r_lo, r_hi]``."""
    r = np.asarray(curve.radii, dtype=float)
    p = np.asarray(curve.p_hat, dtype=float)
    sel = (r >= r_lo) & (r <= r_hi) & (p > 0) & (r > 0)
    if sel.sum() < 3:
        raise DegenerateFitError(f"need at least 3 radii with survivors in [{r_lo}, {r_hi}], have {int(sel.sum())}")
    x = np.log(r[sel])
    y = np.log(p[sel])
    if np.ptp(y) == 0:
        return ExponentFit(0.0, 0.0, float(y[0]), int(sel.sum()))
    res = stats.linregress(x, y)
    return ExponentFit(float(res.slope), float(res.stderr), float(res.intercept), int(sel.sum()))


def check_domination(curve: SurvivalCurve, d: int, r_lo: float, r_hi: float) -> dict:
    """Fit ``C`` of the main reference curve at ``r_lo`` and test it dominates on ``[r_lo, r_hi]``."""
    from .events import theoretical_bound

    r = np.asarray(curve.radii, dtype=float)
    sel = (r >= r_lo) & (r <= r_hi)
    if not sel.any() or r[sel][0] <= 1:
        raise DegenerateFitError("no radii above 1 in the requested range")
    p = curve.p_hat[sel]
    ref = theoretical_bound(r[sel], d, 1.0, "main")
    C = float(p[0] / ref[0])
    if C <= 0:
        raise DegenerateFitError("zero survival at the reference radius")
    excess = p - C * ref
    return {"C": C, "r_ref": float(r[sel][0]), "dominated": bool(np.all(excess <= 1e-15)),
            "max_excess": float(excess.max())}
