import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bubblequad.errors import PointOutsideBox
from bubblequad.geometry import Box3
from bubblequad.polybasis import ChebBasis, cheb_vandermonde, chebyshev_table, dim_poly, graded_lex


@pytest.mark.parametrize("n, dim", [(0, 1), (3, 20), (6, 84), (9, 220), (12, 455), (15, 816)])
def test_dim_poly(n, dim):
    assert dim_poly(n) == dim


def brute_graded_lex(n):
    trip = [t for t in itertools.product(range(n + 1), repeat=3) if sum(t) <= n]
    return sorted(trip, key=lambda t: (sum(t), t))


def test_graded_lex_small():
    assert graded_lex(0).tolist() == [[0, 0, 0]]
    assert graded_lex(1).tolist() == [[0, 0, 0], [0, 0, 1], [0, 1, 0], [1, 0, 0]]
    assert len(graded_lex(5)) == 56


@given(st.integers(0, 12))
def test_graded_lex_matches_bruteforce(n):
    assert [tuple(r) for r in graded_lex(n).tolist()] == brute_graded_lex(n)
    assert len(graded_lex(n)) == dim_poly(n)


def test_chebyshev_recurrence_matches_cosine():
    rng = np.random.default_rng(0)
    theta = rng.uniform(0, np.pi, 100)
    T = chebyshev_table(np.cos(theta), 30)
    m = np.arange(31)
    np.testing.assert_allclose(T, np.cos(np.outer(theta, m)), rtol=0, atol=1e-10)


CUBE = Box3((-1, -1, -1), (1, 1, 1))


def test_vandermonde_degree_zero_is_ones():
    pts = np.random.default_rng(1).uniform(-1, 1, (10, 3))
    V = cheb_vandermonde(ChebBasis.full(CUBE, 0), pts)
    assert V.shape == (10, 1) and np.all(V == 1.0)


def test_vandermonde_entries():
    basis = ChebBasis.full(CUBE, 3)
    col = {tuple(a): j for j, a in enumerate(basis.exponents.tolist())}
    V = cheb_vandermonde(basis, [[1.0, 1.0, 1.0]])
    assert V[0, col[(1, 1, 1)]] == 1.0
    box02 = Box3((0, 0, 0), (2, 2, 2))
    V = cheb_vandermonde(ChebBasis.full(box02, 3), [[1.0, 1.0, 1.0]])
    assert V[0, col[(1, 0, 0)]] == 0.0
    assert np.all(np.isin(V, [-1.0, 0.0, 1.0]))


def test_vandermonde_against_numpy_chebval():
    box = Box3((-1.4, -1.4, -1.4), (3.5, 2.2, 2.0))
    rng = np.random.default_rng(2)
    pts = rng.uniform(box.lo, box.hi, (50, 3))
    basis = ChebBasis.full(box, 6)
    V = cheb_vandermonde(basis, pts)
    sig = (2 * pts - np.asarray(box.hi) - np.asarray(box.lo)) / box.widths
    for j, (a, b, c) in enumerate(basis.exponents):
        expected = (np.polynomial.chebyshev.chebval(sig[:, 0], np.eye(7)[a])
                    * np.polynomial.chebyshev.chebval(sig[:, 1], np.eye(7)[b])
                    * np.polynomial.chebyshev.chebval(sig[:, 2], np.eye(7)[c]))
        np.testing.assert_allclose(V[:, j], expected, rtol=0, atol=1e-12)
    assert np.all(np.abs(V) <= 1.0)


def test_vandermonde_mask_and_nesting():
    rng = np.random.default_rng(3)
    pts = rng.uniform(-1, 1, (40, 3))
    full = ChebBasis.full(CUBE, 4)
    mask = np.array([0, 3, 7, 20, 34])
    Vm = cheb_vandermonde(full.with_mask(mask), pts)
    Vf = cheb_vandermonde(full, pts)
    assert Vm.shape == (40, 5)
    assert np.array_equal(Vm, Vf[:, mask])
    assert np.array_equal(cheb_vandermonde(full, pts[:17]), Vf[:17])


def test_boundary_slack_and_outside():
    basis = ChebBasis.full(CUBE, 2)
    V = cheb_vandermonde(basis, [[1.0 + 1e-13, -1.0 - 1e-13, 0.0]])
    assert np.all(np.abs(V) <= 1.0)
    with pytest.raises(PointOutsideBox):
        cheb_vandermonde(basis, [[1.0 + 1e-9, 0.0, 0.0]])


def test_mask_validation():
    full = ChebBasis.full(CUBE, 2)
    with pytest.raises(ValueError):
        full.with_mask([3, 1])
    with pytest.raises(ValueError):
        full.with_mask([0, 10])
