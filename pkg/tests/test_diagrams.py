from fractions import Fraction

import pytest

from spreadpc import diagrams as G
from spreadpc import kernels as K
from spreadpc import returns as R

from conftest import synthetic


def test_set_partitions_are_bell_numbers():
    assert [sum(1 for _ in G.set_partitions(n)) for n in range(1, 7)] == [1, 2, 5, 15, 52, 203]


def test_d1_l1_pi1():
    enum = G.saw_loop_sum(K.make_uniform(1, 1), 4)
    assert enum.pi1_truncated == pytest.approx(0.5)
    assert enum.saw_loops[4] == 0


@pytest.mark.parametrize("d,L", [(1, 1), (2, 1), (1, 3), (3, 1)])
def test_short_loops_all_self_avoiding(d, L):
    k = K.make_uniform(d, L)
    enum = G.saw_loop_sum(k, 3)
    r = R.return_series(k, 3).exact
    assert enum.saw_loops[2] == r[2]
    assert enum.saw_loops[3] == r[3]
    assert enum.pi1_truncated == pytest.approx(float(r[2] + r[3]))


def test_short_loops_explicit_kernel():
    k = K.make_explicit(2, 2, {(1, 2): 0.4, (0, 1): 0.6})
    enum = G.saw_loop_sum(k, 3)
    s = R.return_series(k, 3)
    assert enum.pi1_truncated == pytest.approx(s.values[2] + s.values[3], abs=1e-15)


@pytest.mark.parametrize("n,d,L", [(6, 2, 1), (8, 1, 2), (4, 1, 1), (5, 3, 1), (5, 2, 2)])
def test_partition_count_matches_dfs(n, d, L):
    k = K.make_uniform(d, L)
    part = G.saw_loop_sum(k, n, method="partition")
    dfs = G.saw_loop_sum(k, n, method="dfs")
    for a, b in zip(part.saw_loops, dfs.saw_loops):
        assert float(a) == pytest.approx(b, rel=1e-12, abs=1e-18)
    for a, b in zip(part.all_loops, dfs.all_loops):
        assert float(a) == pytest.approx(b, rel=1e-12, abs=1e-18)


def test_hand_count_d1_l2():
    # steps in {+-1, +-2}: 3-step loops o->a->b->o need a, b, b-a nonzero and
    # within 2: (1,-1), (1,2), (2,1) and their mirror images
    assert G.self_avoiding_loop_count(3, 1, 2) == 6
    assert G.self_avoiding_loop_count(2, 1, 2) == 4


def test_king_graph_count():
    count = G.self_avoiding_loop_count(4, 2, 1)
    dfs = G.saw_loop_sum(K.make_uniform(2, 1), 4, method="dfs").saw_loops[4] * 8**4
    assert count == round(dfs)


def test_saw_weights_bounded_by_returns():
    enum = G.saw_loop_sum(K.make_uniform(2, 2), 6)
    for n in range(enum.nmax + 1):
        assert enum.saw_loops[n] <= enum.all_loops[n]


def test_pi1_monotone_in_nmax():
    k = K.make_uniform(2, 1)
    vals = [G.saw_loop_sum(k, n).pi1_truncated for n in range(2, 8)]
    assert vals == sorted(vals)


def test_budget():
    with pytest.raises(G.EnumerationSizeError):
        G.saw_loop_sum(K.make_uniform(5, 4), 8, method="dfs")


def test_partition_requires_uniform():
    k = K.make_explicit(1, 1, {(1,): 1.0})
    with pytest.raises(ValueError):
        G.saw_loop_sum(k, 4, method="partition")


def test_correction_bound_synthetic():
    a = 0.1
    assert G.saw_correction_bound(synthetic([1, 0, a, 0, 0, 0, 0])).value == pytest.approx(2 * a * a)
    assert G.saw_correction_bound(synthetic([1, 0, 0.1, 0.05, 0, 0, 0])).value == \
        pytest.approx(0.0525)


def test_correction_bound_order_beta_squared():
    k = K.make_uniform(5, 4)
    b = G.saw_correction_bound(R.return_series(k))
    assert b.valid
    assert b.value / k.beta**2 < 1


@pytest.mark.parametrize("L", [1, 2])
def test_defect_within_bound(L):
    k = K.make_uniform(5, L)
    enum = G.saw_loop_sum(k, 8)
    bound = G.saw_correction_bound(R.return_series(k))
    assert 0 <= enum.defect <= bound.value


def test_exact_rational_output():
    enum = G.saw_loop_sum(K.make_uniform(2, 1), 4)
    assert isinstance(enum.saw_loops[4], Fraction)
