from fractions import Fraction

import numpy as np
import pytest

from eqmatch.clumping import build_hierarchy, compute_edge_cutlevels
from eqmatch.errors import ArgumentError, ContractViolation, UnsupportedGeometryError
from eqmatch.lattice import Configuration, Torus, Window, generate_configuration
from eqmatch.matching import build_matching
from eqmatch.transport import (SparseTransport, biased_unmatched_fraction, kbad_transport, matching_transport,
                               verify_kbad_identity, verify_mass_transport)


def _build(c):
    h = build_hierarchy(compute_edge_cutlevels(c))
    return h, build_matching(c, h)


def test_kbad_identity_examples():
    c = Configuration.from_string("1110", periodic=True)
    h, m = _build(c)
    assert verify_kbad_identity(c, h, m, 1) == (Fraction(1, 2), Fraction(1, 2))
    c = Configuration.from_string("1010", periodic=True)
    h, m = _build(c)
    assert verify_kbad_identity(c, h, m, 1) == (0, 0)


@pytest.mark.parametrize("seed", range(3))
def test_kbad_identity_random(seed):
    c = generate_configuration(2, Torus((64, 64)), seed)
    h, m = _build(c)
    for k in range(1, h.k_max + 1):
        lhs, rhs = verify_kbad_identity(c, h, m, k)
        assert lhs == rhs
        out, inn = verify_mass_transport(c, kbad_transport(m, h, k))
        assert out == inn == lhs * c.n_sites
    with pytest.raises(ArgumentError):
        verify_kbad_identity(c, h, m, h.k_max + 1)


def test_matching_transport_totals():
    c = generate_configuration(2, Torus((32, 32)), 4)
    h, m = _build(c)
    out, inn = verify_mass_transport(c, matching_transport(m))
    assert out == inn
    # out: every site except unmatched tails; in: two per matched head plus one per unmatched head
    ones = c.ones()
    assert inn == 2 * m.n_pairs + int(((m.partner < 0) & (m.bits == 1)).sum())
    if ones * 2 == c.n_sites:
        assert out == c.n_sites


def test_callable_transport():
    c = Configuration.from_string("1100", periodic=True)
    assert verify_mass_transport(c, lambda x, y, cfg: 0) == (0, 0)
    t = lambda x, y, cfg: Fraction(1, 4)
    assert verify_mass_transport(c, t) == (4, 4)
    with pytest.raises(ContractViolation):
        verify_mass_transport(c, lambda x, y, cfg: -1 if x == y else 0)


def test_negative_sparse_mass_and_window():
    c = Configuration.from_string("10", periodic=True)
    bad = SparseTransport(np.array([0]), np.array([1]), np.array([-1]), np.array([1]))
    with pytest.raises(ContractViolation):
        verify_mass_transport(c, bad)
    w = generate_configuration(2, Window((0, 0), (8, 8)), 0)
    with pytest.raises(UnsupportedGeometryError):
        verify_mass_transport(w, lambda x, y, cfg: 0)


def test_biased_unmatched_fraction():
    assert biased_unmatched_fraction(1.0, 2, 16, 2) == 1.0
    f = biased_unmatched_fraction(0.5, 2, 32, 10)
    assert f < 0.1
    with pytest.raises(ArgumentError):
        biased_unmatched_fraction(0.0, 2, 16, 1)
