import numpy as np
import pytest

from phasepredict import (
    RationalMatrix,
    beta_from_model,
    compute_U,
    compute_V,
    delta_diagnostics,
    rho,
)
from phasepredict.phase import parseval_defect


def test_scalar_beta_is_rho(model_of):
    m = model_of(0.3, None)
    seq = beta_from_model(m, (-50, 200))
    ns = np.arange(-50, 201)
    assert np.abs(seq.values[:, 0, 0] - rho(0.3, ns)).max() < 1e-12


def test_beta_parseval(example_c05_d03):
    seq = beta_from_model(example_c05_d03, (-(1 << 12), 1 << 12))
    defect = parseval_defect(seq, m_max=8, half_window=1 << 11)
    assert defect < 1e-3


def test_beta_window_extension(example_c05_d03):
    seq = beta_from_model(example_c05_d03, (0, 10))
    far = seq.at(10 ** 6)
    assert np.linalg.norm(far, 2) < 1e-5
    wide = seq.window(-3, 15)
    assert wide.shape == (19, 2, 2)


def test_beta_fft_cross_check(example_c05_d03):
    """Slow direct-FFT oracle for beta: transform of Omega g^* g_sharp^{-1}."""
    m = example_c05_d03
    N = 1 << 18
    theta = 2 * np.pi * np.arange(N) / N - np.pi
    theta[theta == 0] = 1e-9
    d = m.d
    omega = np.where(theta > 0, np.exp(1j * d * (theta - np.pi)),
                     np.exp(1j * d * (theta + np.pi)))
    z = np.exp(1j * theta)
    gv = m.g.eval(z)
    gsh_coeffs = m.fact.g_sharp_coeffs.coeffs
    zz = z[:, None, None] ** 0
    gshv = sum(gsh_coeffs[k] * (z ** k)[:, None, None] for k in range(len(gsh_coeffs)))
    F = omega[:, None, None] * (gv.conj().swapaxes(-1, -2) @ np.linalg.inv(gshv))
    # beta_n = -(1/N) sum_j F_j e^{-i n theta_j}
    seq = beta_from_model(m, (0, 8))
    for n in (1, 3, 8):
        direct = -(F * np.exp(-1j * n * theta)[:, None, None]).mean(axis=0)
        assert np.abs(direct - seq.at(n)).max() < 1e-3


def test_beta_decay_envelope(example_c05_d03):
    m = example_c05_d03
    seq = beta_from_model(m, (1, 2000))
    ns = np.arange(1, 2001)
    norms = np.linalg.norm(seq.values, 2, axis=(1, 2))
    scaled = np.abs(ns - m.d) * norms
    rows = delta_diagnostics(seq, m.d, m.U, [10, 50, 200, 1000])
    m_hat = rows[-1]["m_hat"]
    bound = (np.sin(np.pi * abs(m.d)) / np.pi) * (1 + m_hat)
    assert scaled.max() <= bound + 1e-9


def test_delta_diagnostics(model_of, example_c05_d03):
    # scalar: Delta_n identically zero
    rows = delta_diagnostics(beta_from_model(model_of(0.3, None), (1, 60)),
                             0.3, np.eye(1), [1, 5, 50])
    assert all(r["delta"] < 1e-12 for r in rows)
    # example model: n ||Delta_n|| bounded
    m = example_c05_d03
    seq = beta_from_model(m, (1, 600))
    rows = delta_diagnostics(seq, m.d, m.U, range(10, 501, 35))
    prods = [r["n"] * r["delta"] for r in rows]
    assert max(prods) < 10 * prods[-1] + 1.0
    # Delta and Delta' have equal spectral norm (unitary invariance)
    for r in rows:
        assert r["delta"] == pytest.approx(r["delta_prime"], rel=1e-8)


def test_U_and_V(example_c05_d03, model_of):
    m = example_c05_d03
    U = compute_U(m)
    assert np.abs(U @ U.conj().T - np.eye(2)).max() < 1e-8
    V = compute_V(m)
    assert np.abs(V @ V.conj().T - np.eye(2)).max() < 1e-8
    # scalar: U = V = 1
    ms = model_of(0.3, None)
    assert np.abs(compute_U(ms) - 1.0).max() < 1e-10
    assert np.abs(compute_V(ms) - 1.0).max() < 1e-10


def test_V_equals_U_for_psd_g0():
    # g(0) > 0 and the factorization's g_tilde(0) > 0 force V = U
    one = [1.0]
    g = RationalMatrix.from_entries(
        [[(one, one), ([0.0, 0.3], one)],
         [([0.0, 0.0, 0.2], one), (one, one)]]
    )
    from phasepredict import FarimaModel
    m = FarimaModel.build(0.3, g)
    assert np.abs(compute_V(m) - compute_U(m)).max() < 1e-8


def test_reversal_duality(example_c05_d03):
    """beta of the reversed model has the singular values of beta_k^*."""
    m = example_c05_d03
    mr = m.reversed_model()
    s1 = beta_from_model(m, (1, 40)).values
    s2 = beta_from_model(mr, (1, 40)).values
    sv1 = np.linalg.svd(s1, compute_uv=False)
    sv2 = np.linalg.svd(s2, compute_uv=False)
    assert np.abs(sv1 - sv2).max() < 1e-7
