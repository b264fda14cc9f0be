"""Exact mass-transport bookkeeping on tori.

On a finite torus the mass sent out by all sites equals the mass received by
all sites, and for an equivariant transport both equal ``N`` times the
expected mass sent from (or received at) the origin.  Everything here is
integer or rational arithmetic.

A transport is either a callable ``T(x, y, c)`` (evaluated on all ``N^2``
ordered pairs, so only for small tori) or a :class:`SparseTransport` listing
its non-zero entries.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Tuple, Union

import numpy as np

from ._trials import run_trials, trial_seed
from .clumping import ClumpHierarchy
from .errors import ArgumentError, ContractViolation, UnsupportedGeometryError
from .lattice import Configuration, Torus, generate_configuration
from .matching import StagedMatching, clump_match, discrepancy_arrays
from .meshalkin import meshalkin_lift


@dataclass
class SparseTransport:
    """Non-zero entries ``T(src, dst) = num / den`` as flat-index integer arrays."""

    src: np.ndarray
    dst: np.ndarray
    num: np.ndarray
    den: np.ndarray

    def __call__(self, c: Configuration) -> "SparseTransport":
        return self


def _fraction_sum(num: np.ndarray, den: np.ndarray) -> Fraction:
    total = Fraction(0)
    for q in np.unique(den).tolist():
        total += Fraction(int(num[den == q].sum()), int(q))
    return total


def _require_torus(c: Configuration):
    if not c.periodic:
        raise UnsupportedGeometryError("the identity needs a torus (translation invariance of the finite model)")


def matching_transport(m) -> SparseTransport:
    """Every site sends one unit to the head among itself and its partner.

    Heads send to themselves, matched tails to their partner; unmatched tails
    have nowhere to send.  A head then receives 2 when matched.
    """
    base = m.base if isinstance(m, StagedMatching) else m
    n = base.n_sites
    idx = np.arange(n, dtype=np.int64)
    heads = base.bits == 1
    dst = np.where(heads, idx, base.partner)
    ok = dst >= 0
    return SparseTransport(idx[ok], dst[ok], np.ones(int(ok.sum()), dtype=np.int64),
                           np.ones(int(ok.sum()), dtype=np.int64))


def kbad_transport(m: StagedMatching, h: ClumpHierarchy, k: int) -> SparseTransport:
    """Each k-bad site spreads one unit uniformly over its k-clump."""
    labels = h.labels(k)
    bad = np.flatnonzero(m.bad_level > k)
    order = np.argsort(labels, kind="stable")
    sorted_labels = labels[order]
    srcs, dsts, dens = [], [], []
    for x in bad.tolist():
        lab = labels[x]
        a = np.searchsorted(sorted_labels, lab, side="left")
        b = np.searchsorted(sorted_labels, lab, side="right")
        members = order[a:b]
        srcs.append(np.full(members.size, x, dtype=np.int64))
        dsts.append(members)
        dens.append(np.full(members.size, members.size, dtype=np.int64))
    if not srcs:
        z = np.zeros(0, dtype=np.int64)
        return SparseTransport(z, z, z, z)
    src = np.concatenate(srcs)
    return SparseTransport(src, np.concatenate(dsts), np.ones(src.size, dtype=np.int64), np.concatenate(dens))


def verify_mass_transport(c: Configuration, T: Union[SparseTransport, Callable]) -> Tuple[Fraction, Fraction]:
    """Total mass sent out and total mass received, as exact rationals.

    The two totals are accumulated separately (grouped by source and by
    destination).  Negative masses raise :class:`ContractViolation`.
    """
    _require_torus(c)
    g = c.geometry
    n = g.n_sites
    if isinstance(T, SparseTransport):
        src, dst, num, den = T.src, T.dst, T.num, T.den
        if np.any(num < 0) or np.any(den <= 0):
            raise ContractViolation("transport masses must be non-negative")
        out_mass = Fraction(0)
        in_mass = Fraction(0)
        for q in np.unique(den).tolist():
            sel = den == q
            sent = np.zeros(n, dtype=np.int64)
            recv = np.zeros(n, dtype=np.int64)
            np.add.at(sent, src[sel], num[sel])
            np.add.at(recv, dst[sel], num[sel])
            out_mass += Fraction(int(sent.sum()), int(q))
            in_mass += Fraction(int(recv.sum()), int(q))
        return out_mass, in_mass
    sites = [g.site(i) for i in range(n)]
    out_mass = Fraction(0)
    recv = [Fraction(0)] * n
    for i, x in enumerate(sites):
        for j, y in enumerate(sites):
            v = T(x, y, c)
            v = Fraction(v) if not isinstance(v, Fraction) else v
            if v < 0:
                raise ContractViolation(f"negative mass {v} from {x} to {y}")
            out_mass += v
            recv[j] += v
    return out_mass, sum(recv, Fraction(0))


def verify_kbad_identity(c: Configuration, h: ClumpHierarchy, m: StagedMatching, k: int) -> Tuple[Fraction, Fraction]:
    """``(1/N) #{k-bad sites}`` and ``(1/N) sum_x |zeta(L_k(x))| / #L_k(x)`` as exact rationals."""
    _require_torus(c)
    if not 1 <= int(k) <= h.k_max:
        raise ArgumentError(f"level must lie in [1, {h.k_max}]")
    n = c.n_sites
    lhs = Fraction(int((m.bad_level > int(k)).sum()), n)
    bits = np.ascontiguousarray(c.array).reshape(-1)
    size, zeta, inv = discrepancy_arrays(bits, h.partition(int(k)))
    # per-site terms |zeta| / size, summed exactly grouped by clump size
    rhs = _fraction_sum(np.abs(zeta[inv]), size[inv]) / n
    return lhs, rhs


def biased_unmatched_fraction(p: float, d: int, sides, trials: int, rng_seed: int = 0,
                              rule: str = "clump", threads=None) -> float:
    """Mean fraction of sites left unmatched by the full rule (cleanup included) on tori."""
    if not 0 < p <= 1:
        raise ArgumentError("p must lie in (0, 1]")
    sides = tuple(int(v) for v in (sides if np.ndim(sides) else (sides,) * d))

    def one(t):
        c = generate_configuration(d, Torus(sides), trial_seed(rng_seed, t), p)
        m = clump_match(c) if rule == "clump" else meshalkin_lift(c)
        return m.n_unmatched / c.n_sites

    return float(np.mean(run_trials(one, trials, threads)))
