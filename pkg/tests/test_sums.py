import numpy as np
import pytest

from spreadpc import kernels as K
from spreadpc import returns as R
from spreadpc import sums as U

from conftest import synthetic


def test_loop_sums_synthetic(toy):
    ls = U.loop_sums(toy)
    assert ls.S_all == pytest.approx(0.17)
    assert ls.S_even == pytest.approx(0.02)
    assert ls.S_weighted == pytest.approx(0.25)


def test_loop_sums_zero():
    ls = U.loop_sums(synthetic([1, 0, 0, 0, 0, 0, 0]))
    assert ls.S_all == ls.S_even == ls.S_weighted == 0


def test_loop_sums_d5_l4():
    s = R.return_series(K.make_uniform(5, 4))
    ls = U.loop_sums(s)
    cap = 10 * s.gauss_constant * s.beta
    assert ls.S_all > ls.S_even > 0
    assert ls.S_all <= cap and ls.S_even <= cap
    assert ls.triangle is None


def test_validity_gates():
    ls = U.loop_sums(R.return_series(K.make_uniform(4, 2), 100))
    assert ls.valid["S_all"] and not ls.valid["S_weighted"]
    ls = U.loop_sums(R.return_series(K.make_uniform(7, 2)))
    assert all(ls.valid.values()) and ls.triangle > 0


def test_predictions_synthetic(toy):
    s = synthetic(toy.values, d=7)
    assert U.predict_pc("SAW", s).p_c_leading == pytest.approx(1.17)
    assert U.predict_pc("cp", s).p_c_leading == pytest.approx(1.17)
    assert U.predict_pc("OP", s).p_c_leading == pytest.approx(1.01)
    assert U.predict_pc("perc", s).p_c_leading == pytest.approx(1.25)


def test_op_mean_field_when_even_returns_vanish():
    s = synthetic([1, 0, 0.2, 0.1, 0, 0.05, 0, 0, 0])
    assert U.predict_pc("OP", s).p_c_leading == 1.0


def test_prediction_d5_l4():
    k = K.make_uniform(5, 4)
    pred = U.predict_pc("SAW", k)
    s = R.return_series(k)
    assert 1 < pred.p_c_leading <= 1 + 10 * s.gauss_constant * s.beta
    assert pred.p_c_leading == 1 + pred.correction_term
    assert pred.error_scale == pytest.approx(s.beta**2)
    assert pred.tail_valid and pred.source == "Discrete"


def test_prediction_frozen_values():
    # frozen from the exact integer route (d=5, L=4, N=200 with geometric tail)
    k = K.make_uniform(5, 4)
    assert U.predict_pc("SAW", k).correction_term == pytest.approx(2.8832793638741684e-05, rel=1e-9)
    assert U.predict_pc("OP", K.make_uniform(5, 2)).correction_term == pytest.approx(
        4.683453551567612e-05, rel=1e-9)


def test_op_below_saw():
    for L in (1, 2, 4):
        k = K.make_uniform(5, L)
        assert U.predict_pc("OP", k).correction_term <= U.predict_pc("SAW", k).correction_term


def test_gates():
    with pytest.raises(U.DimensionGateError):
        U.predict_pc("perc", K.make_uniform(3, 4))
    with pytest.raises(U.DimensionGateError):
        U.predict_pc("saw", K.make_uniform(4, 2))
    pred = U.predict_pc("perc", K.make_uniform(5, 2), override_gate=True)
    assert pred.gate_overridden
    with pytest.raises(ValueError):
        U.predict_pc("ising", K.make_uniform(5, 2))


def test_prediction_roundtrip():
    pred = U.predict_pc("OP", K.make_uniform(5, 2))
    assert U.Prediction.from_dict(pred.to_dict()) == pred
    assert pred.to_dict()["schema"] == 1


def test_prediction_deterministic():
    k = K.make_uniform(6, 3)
    assert U.predict_pc("SAW", k) == U.predict_pc("SAW", k)


def test_continuum_prediction():
    d, L = 7, 3
    pred = U.predict_pc_continuum("perc", d, L)
    assert pred.components["U2"] == 2.0**-d
    assert pred.error_scale == pytest.approx(L**-d / L)
    saw = U.predict_pc_continuum("saw", 5, 4)
    v = [float(R.continuum_center_density(n)) ** 5 for n in range(2, 201)]
    assert saw.correction_term == pytest.approx(4**-5 * sum(v), rel=1e-3)
    assert saw.tail_valid


def test_continuum_zero_returns():
    s = synthetic([1, 0, 0, 0, 0, 0, 0])
    assert U.predict_pc("SAW", s).p_c_leading == 1.0


def test_discrete_minus_continuum_over_beta_scales_like_inverse_L():
    vals = []
    for L in (4, 8, 16):
        dis = U.predict_pc("SAW", K.make_uniform(5, L)).correction_term
        con = U.predict_pc_continuum("SAW", 5, L).correction_term
        vals.append(L * abs(dis - con) / L**-5)
    assert max(vals) / min(vals) < 2


def test_cp_closed_forms():
    a = 0.1
    s = synthetic([1, 0, a, 0, 0, 0, 0])
    for eps in (1.0, 0.5, 0.1, 0.01):
        assert U.cp_epsilon_sum(s, eps).value == pytest.approx(2 * a / (2 - eps), rel=1e-12)


def test_cp_epsilon_one_is_twice_even_sum():
    s = R.return_series(K.make_uniform(5, 4))
    ls = U.loop_sums(s)
    f = U.cp_epsilon_sum(s, 1.0)
    assert f.valid
    assert f.value == pytest.approx(2 * (s.values[2] + ls.S_even), rel=1e-9)


def test_cp_routes_agree():
    s = R.return_series(K.make_uniform(5, 2))
    for eps in (0.7, 0.3):
        a = U.cp_epsilon_sum(s, eps, method="resummed").value
        b = U.cp_epsilon_sum(s, eps, method="direct").value
        assert a == pytest.approx(b, rel=1e-9)


def test_cp_limit_decreasing_gap():
    s = R.return_series(K.make_uniform(5, 4))
    s_all = U.loop_sums(s).S_all
    gaps = [abs(U.cp_epsilon_sum(s, e).value - s_all) for e in (0.2, 0.1, 0.05)]
    assert gaps[0] > gaps[1] > gaps[2]
    C = max(gaps[0] / 0.2, gaps[1] / 0.1)
    assert gaps[2] <= C * 0.05


def test_cp_bad_epsilon():
    s = R.return_series(K.make_uniform(5, 2))
    with pytest.raises(ValueError):
        U.cp_epsilon_sum(s, 0.0)
    with pytest.raises(ValueError):
        U.cp_epsilon_sum(s, 1.5)


def test_compare_single_L():
    rows = U.compare_discrete_continuum(5, 4, 0)
    assert len(rows) == 1 and rows[0].valid and rows[0].ratio > 0


@pytest.mark.parametrize("variant", ["weighted", "even"])
def test_compare_bounded_ratio(variant):
    rows = U.compare_discrete_continuum(5, [4, 8, 16], 0, variant=variant)
    r = [row.ratio for row in rows]
    assert max(r) / min(r) < 2


def test_compare_gates():
    with pytest.raises(U.DimensionGateError):
        U.compare_discrete_continuum(4, [4], 0)
    with pytest.raises(U.DimensionGateError):
        U.compare_discrete_continuum(6, [4], 1)
    assert U.compare_discrete_continuum(7, [2], 1)[0].valid


def test_triangle_scaling_d7():
    scaled = [U.triangle(R.return_series(K.make_uniform(7, L))).value * L**7
              for L in (2, 3, 4)]
    assert max(scaled) / min(scaled) <= 2


def test_triangle_matches_quadrature_below_one():
    k = K.make_uniform(2, 1)
    s = R.return_series(k, 400)
    for p in (0.5, 0.9):
        assert U.triangle(s, p).value == pytest.approx(U.triangle_quadrature(k, p), abs=1e-6)


def test_triangle_divergent_at_d2():
    t = U.triangle(R.return_series(K.make_uniform(2, 1), 200))
    assert not t.valid
    assert U.triangle_quadrature(K.make_uniform(2, 1), 1.0) == np.inf
