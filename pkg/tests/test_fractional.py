import numpy as np
import pytest
from scipy.special import gammaln

from phasepredict import frac_binomial, gamma_d_autocov, psi_nn, rho, tau_coeffs, u_n
from phasepredict.fractional import (
    FracOrderWarning,
    check_frac_order,
    gamma_d_seq,
    tau_envelope_tail,
    u_n_product,
)


def test_rho_values():
    # direct high-precision evaluation of sin(pi d)/(pi (n - d))
    assert rho(0.3, 1) == pytest.approx(0.36788301, abs=1e-7)
    assert rho(0.3, 0) == pytest.approx(-np.sin(0.3 * np.pi) / (0.3 * np.pi), rel=1e-12)
    ns = np.arange(1, 2000)
    vals = np.abs(rho(0.3, ns))
    assert np.all(np.diff(vals) < 0)          # decays monotonically in n
    assert np.all(np.diff(np.abs(rho(0.3, -ns))) < 0)


def test_rho_parseval():
    # analytic identity: sum_{n in Z} 1/(n-d)^2 = pi^2/sin^2(pi d)
    d = 0.3
    N = 10 ** 5
    ns = np.arange(-N, N + 1)
    total = (rho(d, ns) ** 2).sum()
    assert abs(total - 1.0) <= 1e-3


def test_frac_binomial():
    assert np.allclose(frac_binomial(0.4, 2), [1.0, 0.4, 0.28])
    assert np.allclose(frac_binomial(0.1, 0), [1.0])
    assert np.allclose(frac_binomial(-0.25, 1), [1.0, -0.25])


def test_u_n_closed_form_and_product():
    u0 = u_n(0.25, 0)
    assert u0 == pytest.approx(np.exp(gammaln(0.5) - 2 * gammaln(0.75)), rel=1e-13)
    assert u0 == pytest.approx(1.1803406, abs=1e-6)
    assert u_n(0.25, 1) == pytest.approx(1.04919164, abs=1e-7)   # = u_0 (1 - (1/3)^2)
    for d in (0.25, 0.4, -0.3):
        for n in (0, 1, 5, 50, 1000):
            assert u_n(d, n) == pytest.approx(u_n_product(d, n), rel=1e-12)


def test_u_n_monotone_limit():
    d = 0.3
    ns = np.arange(0, 3000)
    u = u_n(d, ns)
    assert np.all(np.diff(u) < 0)
    assert np.all(u > 1)
    # u_n = 1 + d^2/n + O(n^-2)
    n = 10 ** 4
    assert abs(n * (u_n(d, n) - 1) - d ** 2) < 1e-3


def test_psi_nn():
    assert psi_nn(0.4, 2) == pytest.approx(0.25)
    assert psi_nn(0.25, 1) == pytest.approx(1 / 3)
    for n in (1, 3, 10):
        v = psi_nn(-0.3, n)
        assert v < 0 and abs(v) < 1
        # exact identity |n psi_nn - d| = d^2/(n-d)
        assert abs(n * psi_nn(-0.3, n) - (-0.3)) == pytest.approx(0.09 / (n + 0.3), rel=1e-12)


def test_tau_coeffs():
    odd = tau_coeffs("odd", 2)
    assert odd[0] == pytest.approx(1 / np.pi, rel=1e-14)
    assert odd[1] == pytest.approx(1 / (6 * np.pi), rel=1e-14)
    assert tau_coeffs("even", 1)[0] == pytest.approx(1 / np.pi ** 2, rel=1e-14)
    assert np.all(tau_coeffs("odd", 50) > 0)
    assert np.all(tau_coeffs("even", 50) > 0)
    # series reproduce arcsin at x = 0.5
    x = 0.5
    K = 120
    ks = np.arange(1, K + 1)
    so = (tau_coeffs("odd", K) * x ** (2 * ks - 1)).sum()
    se = (tau_coeffs("even", K) * x ** (2 * ks)).sum()
    assert abs(so - np.arcsin(x) / np.pi) < 1e-10
    assert abs(se - (np.arcsin(x) / np.pi) ** 2) < 1e-10


def test_tau_envelope_tail_decreasing():
    tails = [tau_envelope_tail(0.3, K) for K in (8, 32, 128)]
    assert tails[0] > tails[1] > tails[2] > 0


def test_gamma_d():
    g0 = gamma_d_autocov(0.25, 0)
    assert g0 == pytest.approx(u_n(0.25, 0), rel=1e-13)
    assert gamma_d_autocov(0.25, 1) == pytest.approx(g0 / 3, rel=1e-13)
    ks = np.array([-5, -2, 2, 5])
    vals = gamma_d_autocov(0.35, ks)
    assert np.allclose(vals[:2][::-1], vals[2:])
    seq = gamma_d_seq(0.25, 10)
    assert seq[2] == pytest.approx(seq[1] * (1 + 0.25) / (2 - 0.25), rel=1e-14)


def test_frac_order_validation():
    with pytest.raises(ValueError):
        u_n(0.0, 1)
    with pytest.raises(ValueError):
        u_n(0.6, 1)
    with pytest.warns(FracOrderWarning):
        check_frac_order(0.4995)
