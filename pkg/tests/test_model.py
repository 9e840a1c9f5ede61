import numpy as np
import pytest
from scipy.special import gamma as _gamma

from phasepredict import RationalMatrix
from phasepredict.model import FarimaModel, gamma_reflect
from phasepredict.ratmat import convolve_series, spectral_norm


def test_gamma_reflect():
    assert gamma_reflect(0.75) == pytest.approx(float(_gamma(0.75)), rel=1e-14)
    assert gamma_reflect(-0.25) == pytest.approx(-4 * float(_gamma(0.75)), rel=1e-12)


def test_scalar_ma_ar_coeffs(model_of):
    m = model_of(0.4, None)
    c = m.ma_coeffs(3).coeffs[:, 0, 0]
    assert c[0] == pytest.approx(1.0)
    assert c[1] == pytest.approx(0.4)
    a = m.ar_coeffs(3).coeffs[:, 0, 0]
    assert a[0] == pytest.approx(-1.0)
    assert a[1] == pytest.approx(0.4)
    m25 = model_of(0.25, None)
    a = m25.ar_coeffs(3).coeffs[:, 0, 0]
    assert a[2] == pytest.approx(0.25 * 0.75 / 2)     # = 0.09375
    phi, _ = m25.infinite_predictor_coeffs(2)
    assert phi.coeffs[0, 0, 0] == pytest.approx(0.25)


def test_c0_a0_identity(example_c05_d03):
    m = example_c05_d03
    a0 = m.ar_coeffs(1).coeffs[0]
    at0 = m.ar_coeffs_backward(1).coeffs[0]
    assert np.abs(m.c0 @ a0 + np.eye(2)).max() < 1e-12
    assert np.abs(m.c0_tilde @ at0 + np.eye(2)).max() < 1e-10
    assert np.allclose(m.ma_coeffs(0).coeffs[0], m.c0)
    assert np.allclose(m.ma_coeffs_backward(0).coeffs[0], m.c0_tilde)


def test_ma_example_values(example_c05_d03):
    # c_1 = d g(0) + g_1 for the example model
    m = example_c05_d03
    c1 = m.ma_coeffs(1).coeffs[1]
    expect = 0.3 * m.c0 + np.array([[0, 0], [0.5, 0]])
    assert np.abs(c1 - expect).max() < 1e-12


def test_series_inverse_identity(example_c05_d03):
    m = example_c05_d03
    K = 500
    c = m.ma_coeffs(K).coeffs
    a = m.ar_coeffs(K).coeffs
    conv = convolve_series(c, -a, K)
    target = np.zeros_like(conv)
    target[0] = np.eye(2)
    assert np.abs(conv - target).max() < 1e-9


def test_decay_slopes(example_c05_d03):
    m = example_c05_d03
    K = 1000
    c = np.linalg.norm(m.ma_coeffs(K).coeffs, 2, axis=(1, 2))
    a = np.linalg.norm(m.ar_coeffs(K).coeffs, 2, axis=(1, 2))
    ks = np.arange(100, 1001)
    slope_c = np.polyfit(np.log(ks), np.log(c[100:]), 1)[0]
    slope_a = np.polyfit(np.log(ks), np.log(a[100:]), 1)[0]
    assert slope_c == pytest.approx(m.d - 1, abs=0.05)
    assert slope_a == pytest.approx(-1 - m.d, abs=0.05)


def test_ar_asymptotics(model_of, example_c05_d03):
    # scalar: n^{1+d} |a_n| -> 1/|Gamma(-d)|
    m = model_of(0.25, None)
    K = 4000
    a = m.ar_coeffs(K).coeffs[:, 0, 0]
    lim = abs(a[K]) * K ** 1.25
    assert lim == pytest.approx(1 / abs(gamma_reflect(-0.25)), rel=1e-3)
    assert 1 / abs(gamma_reflect(-0.25)) == pytest.approx(0.204012, abs=1e-5)
    rows = example_c05_d03.ar_asymptotics_check([50, 200, 800, 2000])
    vals_f = [r["fwd"] for r in rows]
    vals_b = [r["bwd"] for r in rows]
    assert max(vals_f) < 10 * (vals_f[-1] + 1)
    assert max(vals_b) < 10 * (vals_b[-1] + 1)


def test_phi_tail_sum(model_of, example_c05_d03):
    m = model_of(0.25, None)
    part, beyond = m.phi_tail_sum(400, K=20000)
    total = part + beyond
    lim = 1 / _gamma(0.75)
    assert lim == pytest.approx(0.816049, abs=1e-5)
    assert 400 ** 0.25 * total == pytest.approx(lim, rel=0.02)
    # stabilizes within 5% between n = 200 and n = 400
    m2 = example_c05_d03
    t200 = sum(m2.phi_tail_sum(200, K=8192))
    t400 = sum(m2.phi_tail_sum(400, K=8192))
    assert 200 ** 0.3 * t200 == pytest.approx(400 ** 0.3 * t400, rel=0.05)
    with pytest.raises(ValueError):
        model_of(-0.25, None).phi_tail_sum(10)


def test_backward_equals_reversed_forward(example_c05_d03):
    m = example_c05_d03
    mr = m.reversed_model()
    K = 40
    at = m.ar_coeffs_backward(K).coeffs
    a_rev = mr.ar_coeffs(K).coeffs
    assert np.abs(at - a_rev).max() < 1e-7
    ct = m.ma_coeffs_backward(K).coeffs
    c_rev = mr.ma_coeffs(K).coeffs
    assert np.abs(ct - c_rev).max() < 1e-7


def test_invertibility_invariants(example_c05_d03):
    m = example_c05_d03
    assert np.linalg.cond(m.c0) < 1e6
    g0t = m.c0_tilde
    assert np.abs(g0t - g0t.conj().T).max() < 1e-10
    assert np.linalg.eigvalsh((g0t + g0t.conj().T) / 2).min() > 0
