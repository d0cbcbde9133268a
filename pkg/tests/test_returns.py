from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spreadpc import kernels as K
from spreadpc import returns as R

from conftest import synthetic


def test_axis_counts_l1():
    assert R.axis_return_counts(1, 5) == [1, 1, 3, 7, 19, 51]


def test_axis_counts_against_brute_force():
    # closed j-step walks on Z with steps in {-2..2}, counted by enumeration
    for j in range(5):
        brute = sum(1 for w in np.ndindex(*[5] * j) if sum(s - 2 for s in w) == 0)
        assert R.axis_return_counts(2, 4)[j] == brute


def test_integer_counts_examples():
    W = R.return_counts_integer(1, 1, 2)
    assert W[2] == 2
    assert R.return_counts_integer(2, 1, 2)[2] == 8


def test_d1_series_exact():
    s = R.return_series(K.make_uniform(1, 1), 4)
    assert s.method == R.INTEGER_EXACT
    assert s.exact == [1, 0, Fraction(1, 2), 0, Fraction(3, 8)]
    # +-1 walk: r_2n = C(2n, n) / 4^n
    s = R.return_series(K.make_uniform(1, 1), 20)
    for n in range(11):
        assert s.exact[2 * n] == Fraction(comb(2 * n, n), 4**n)


def test_dense_examples():
    s = R.return_series_dense(K.make_uniform(1, 1), 4)
    assert np.allclose(s.values, [1, 0, 0.5, 0, 0.375], atol=1e-15)
    assert R.return_series_dense(K.make_uniform(2, 1), 2).values[2] == pytest.approx(1 / 8)
    k = K.make_explicit(2, 2, {(1, 2): 0.4, (0, 1): 0.6})
    assert R.return_series_dense(k, 1).values[1] == 0


def test_dense_budget():
    with pytest.raises(R.SeriesSizeError):
        R.return_series_dense(K.make_uniform(5, 4), 40, budget=10**6)


def test_dispatch():
    assert R.return_series(K.make_uniform(5, 4), 40).method == R.INTEGER_EXACT
    k = K.make_explicit(1, 2, {(1,): 0.3, (2,): 0.7})
    assert R.return_series(k, 10).method == R.DENSE


def test_routes_agree_d2_l2():
    k = K.make_uniform(2, 2)
    a = R.return_series(k, 12).values
    b = R.return_series_dense(k, 12).values
    assert np.max(np.abs(a - b)) <= 1e-12


@pytest.mark.parametrize("d,L", [(1, 2), (2, 1), (2, 3)])
def test_fourier_quadrature(d, L):
    k = K.make_uniform(d, L)
    s = R.return_series(k, 10)
    for n in range(1, 11):
        assert R.fourier_return(k, n) == pytest.approx(s.values[n], abs=1e-8)


def test_explicit_kernel_fourier_quadrature():
    k = K.make_explicit(2, 2, {(1, 2): 0.4, (0, 1): 0.6})
    s = R.return_series(k, 8)
    for n in range(1, 9):
        assert R.fourier_return(k, n) == pytest.approx(s.values[n], abs=1e-10)


@pytest.mark.parametrize("d,L", [(1, 1), (2, 2), (3, 1), (5, 4), (7, 2)])
def test_series_invariants(d, L):
    s = R.return_series(K.make_uniform(d, L), 60)
    assert all(R.even_invariants(s).values())
    n = np.arange(1, s.N + 1)
    assert np.all(s.values[1:] <= s.gauss_constant * s.beta / n ** (d / 2) * (1 + 1e-12))


def test_d7_exact_at_n40():
    # big-integer route stays exact where floats would cancel
    s = R.return_series(K.make_uniform(7, 2), 40)
    assert s.exact[40] > 0
    assert float(s.exact[40]) == s.values[40]


def test_gauss_constant_stable_across_L():
    consts = [R.gauss_constant(R.return_series(K.make_uniform(5, L), 30), (2, 30))
              for L in (4, 8, 16)]
    assert max(consts) / min(consts) < 2


def test_adaptive_truncation():
    s = R.return_series(K.make_uniform(5, 4))
    assert s.N % 2 == 0 and s.N <= R.N_MAX
    assert s.tail.valid


def test_tail_synthetic_geometric():
    a, lam, m0 = 0.3, 0.6, 3
    vals = np.zeros(2 * m0 + 1)
    for m in range(1, m0 + 1):
        vals[2 * m] = a * lam**m
    vals[0] = 1
    t = R.tail_bound(synthetic(vals), 2 * m0, "unit")
    assert t.value == pytest.approx(a * lam ** (m0 + 1) / (1 - lam), rel=1e-12)
    assert t.valid and t.ratio == pytest.approx(lam)


def test_tail_recurrent_is_invalid():
    s = R.return_series(K.make_uniform(1, 1), 40)
    assert not s.tail.valid


def test_tail_d5_l4_n40():
    # the extrapolated tail is valid and tracks the tail of a much longer series
    s = R.return_series(K.make_uniform(5, 4), 200)
    t = R.tail_bound(s.truncate(40), 40, "unit")
    assert t.valid and t.value > 0
    true_tail = s.values[41:].sum()
    assert 0.5 < t.value / true_tail < 2


def test_tail_preconditions():
    s = R.return_series(K.make_uniform(5, 2), 10)
    with pytest.raises(ValueError):
        R.tail_bound(s, 5)


def test_continuum_density_examples():
    assert R.continuum_center_density(1) == Fraction(1, 2)
    assert R.continuum_center_density(2) == Fraction(1, 2)
    assert R.continuum_center_density(3) == Fraction(3, 8)
    assert R.continuum_center_density(4) == Fraction(1, 3)


@pytest.mark.parametrize("n", range(2, 11))
def test_continuum_density_against_grid(n):
    assert float(R.continuum_center_density(n)) == pytest.approx(
        R.grid_center_density(n), abs=1e-4)


def test_continuum_sqrt_scaling():
    c = R.continuum_returns(1, 200)
    scaled = [c.v[n] * np.sqrt(n) for n in (50, 100, 200)]
    # v_n ~ sqrt(3 / (2 pi n))
    assert np.allclose(scaled, np.sqrt(3 / (2 * np.pi)), rtol=2e-2)


def test_discretized_examples():
    s = R.return_series(K.make_uniform(1, 1), 6)
    for eps in (0.1, 0.5, 0.9):
        assert R.discretized_return(s, eps, 1) == pytest.approx(1 - eps)
        assert R.discretized_return(s, eps, 2) == pytest.approx((1 - eps) ** 2 + eps**2 / 2)
    assert R.discretized_return(s, 1.0, 4) == s.values[4]
    with pytest.raises(IndexError):
        R.discretized_return(s, 0.5, 7)


def test_discretized_gaussian_bound():
    s = R.return_series(K.make_uniform(5, 4), 120)
    for eps in (1.0, 0.5, 0.25):
        n = np.arange(1, 121)
        q = np.array([R.discretized_return(s, eps, int(m)) for m in n]) - (1 - eps) ** n
        C = np.max(q * np.maximum(1, n * eps) ** 2.5) / s.beta
        assert 0.5 < C / s.gauss_constant < 2


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(2, 12))
def test_integer_route_matches_dense(d, L, N):
    k = K.make_uniform(d, L)
    a = R.return_series(k, N).values
    b = R.return_series_dense(k, N).values
    assert np.max(np.abs(a - b)) <= 1e-12
