import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spreadpc import kernels as K


def test_uniform_d1():
    k = K.make_uniform(1, 1)
    assert k.mass((1,)) == k.mass((-1,)) == 0.5
    assert k.mass((0,)) == 0
    assert k.M == 3 and k.beta == 1.0


def test_uniform_d2_has_eight_offsets():
    offsets, masses = K.make_uniform(2, 1).support()
    assert len(offsets) == 8
    assert np.allclose(masses, 1 / 8)


def test_uniform_d5_sup_constant():
    k = K.make_uniform(5, 4)
    assert k.exact_mass((1, 0, 0, 0, -4)) == Fraction(1, 9**5 - 1)
    assert k.sup_mass == pytest.approx(1 / (9**5 - 1))
    assert k.sup_constant == pytest.approx(4**5 / (9**5 - 1))


def test_uniform_large_is_implicit():
    k = K.make_uniform(7, 10)
    assert k.M == 21**7
    assert k.offsets is None


def test_range_error():
    with pytest.raises(K.KernelRangeError):
        K.make_uniform(60, 10)


@pytest.mark.parametrize("d,L", [(0, 1), (1, 0), (-1, 2)])
def test_bad_dimensions(d, L):
    with pytest.raises(K.KernelError):
        K.make_uniform(d, L)


def test_explicit_symmetric_table():
    k = K.make_explicit(1, 2, {(1,): 0.3, (-1,): 0.3, (2,): 0.2, (-2,): 0.2})
    assert k.symmetric_input
    assert math.isclose(k.masses.sum(), 1, abs_tol=1e-12)
    assert k.mass((2,)) == pytest.approx(0.2)


def test_explicit_symmetrizes_and_flags():
    k = K.make_explicit(1, 1, {(1,): 1.0})
    assert not k.symmetric_input
    assert k.mass((1,)) == k.mass((-1,)) == 0.5


def test_explicit_errors():
    with pytest.raises(K.KernelError):
        K.make_explicit(1, 1, {(0,): 1.0})
    with pytest.raises(K.KernelError):
        K.make_explicit(1, 1, {(1,): 0.0})
    with pytest.raises(K.KernelError):
        K.make_explicit(1, 1, {(2,): 1.0})
    with pytest.raises(K.KernelError):
        K.make_explicit(1, 1, {(1,): -1.0, (-1,): 2.0})


def test_explicit_hyperoctahedral_symmetry_exhaustive():
    k = K.make_explicit(3, 2, {(1, 0, 2): 0.7, (0, -1, 1): 0.3})
    offsets, _ = k.support()
    for x in offsets:
        for perm in itertools.permutations(range(3)):
            for signs in itertools.product((1, -1), repeat=3):
                y = tuple(s * x[i] for s, i in zip(signs, perm))
                assert k.mass(y) == pytest.approx(k.mass(tuple(x)), abs=1e-15)


def test_uniform_symmetry_and_normalization():
    for d, L in [(1, 3), (2, 2), (3, 1)]:
        k = K.make_uniform(d, L)
        dense = k.dense()
        assert dense.sum() == pytest.approx(1, abs=1e-12)
        assert np.allclose(dense, dense[::-1, ...])
        if d > 1:
            assert np.allclose(dense, np.swapaxes(dense, 0, 1))


def test_fourier_examples():
    assert K.fourier_eval(K.make_uniform(3, 2), np.zeros(3)) == pytest.approx(1)
    assert K.fourier_eval(K.make_uniform(1, 1), [np.pi]) == pytest.approx(-1, abs=1e-15)
    k = K.make_uniform(2, 1)
    point = np.array([np.pi / 2, 0])
    assert K.fourier_eval(k, point) == pytest.approx(K.direct_fourier(k, point), abs=1e-14)


def test_continuum_fourier_examples():
    assert K.continuum_fourier(np.zeros(3)) == 1
    assert K.continuum_fourier([np.pi]) == pytest.approx(0, abs=1e-15)
    assert K.continuum_fourier([np.pi / 2, np.pi / 2]) == pytest.approx((2 / np.pi) ** 2)


@pytest.mark.parametrize("d,L", [(1, 1), (1, 4), (2, 1), (2, 4)])
def test_fourier_bound_on_grid(d, L):
    g = np.linspace(-np.pi, np.pi, 101)
    grid = np.stack(np.meshgrid(*[g] * d, indexing="ij"), axis=-1)
    vals = K.fourier_eval(K.make_uniform(d, L), grid)
    assert np.min(1 - vals) >= 0


@pytest.mark.parametrize("d,L", [(1, 1), (1, 3), (2, 2), (2, 3)])
def test_factorization_matches_direct_sum(d, L):
    rng = np.random.default_rng(d * 10 + L)
    k = K.make_uniform(d, L)
    pts = rng.uniform(-np.pi, np.pi, size=(100, d))
    assert np.allclose(K.fourier_eval(k, pts), K.direct_fourier(k, pts), atol=1e-12)


def test_sinc_branches_agree():
    x = np.array([0.99e-4, 1.01e-4])
    ref = np.sin(x) / x
    assert np.allclose(K.sinc(1.0, x), ref, rtol=0, atol=1e-15)


def test_axis_factorization_rational():
    ax = K.make_uniform(2, 3).axis
    assert sum(ax.u) == 1
    assert ax.beta_o == pytest.approx(3.5**-2)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 2), st.integers(1, 3),
       st.lists(st.floats(-np.pi, np.pi), min_size=2, max_size=2))
def test_fourier_even_and_bounded(d, L, k):
    kern = K.make_uniform(d, L)
    k = np.array(k[:d])
    v = K.fourier_eval(kern, k)
    assert -1 <= v <= 1
    assert v == pytest.approx(K.fourier_eval(kern, -k), abs=1e-15)
