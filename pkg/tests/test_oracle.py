import numpy as np
import pytest

from phasepredict import RationalMatrix, autocov, block_levinson, oracle_pacf
from phasepredict.fractional import gamma_d_seq, psi_nn, u_n
from phasepredict.oracle import dense_predictor, gg_laurent, oracle_solutions


def test_scalar_autocov(model_of):
    m = model_of(0.25, None)
    acov = autocov(m, 10)
    assert np.abs(acov.coeffs[:, 0, 0] - gamma_d_seq(0.25, 10)).max() < 1e-12


def test_example_autocov_g0(model_of):
    # c = 0: G_m comes from the polynomial g g^*, with G_0 = [[1,1],[1,2]]
    m = model_of(0.25, 0.0)
    G = gg_laurent(m)
    G0 = G.coeffs[-G.offset]
    assert np.abs(G0 - np.array([[1, 1], [1, 2]])).max() < 1e-12
    acov = autocov(m, 4)
    w = np.linalg.eigvalsh(acov.coeffs[0])
    assert w.min() > 0
    assert np.abs(acov.coeffs[0] - acov.coeffs[0].conj().T).max() < 1e-12


def test_levinson_scalar_closed_forms(model_of):
    m = model_of(0.25, None)
    acov = autocov(m, 12)
    lev = block_levinson(acov, 8)
    for n in (1, 3, 8):
        assert lev[n]["v"][0, 0].real == pytest.approx(u_n(0.25, n), rel=1e-10)
        assert lev[n]["phi"][n - 1][0, 0].real == pytest.approx(psi_nn(0.25, n), rel=1e-10)
    a1 = oracle_pacf(acov, 1)[0, 0].real
    assert a1 == pytest.approx(0.25 / 0.75, rel=1e-12)


def test_levinson_one_step(model_of):
    m = model_of(0.3, 0.5)
    acov = autocov(m, 3)
    lev = block_levinson(acov, 1)
    g0, g1 = acov.coeffs[0], acov.coeffs[1]
    phi11 = g1 @ np.linalg.inv(g0)
    assert np.abs(lev[1]["phi"][0] - phi11).max() < 1e-12
    assert np.abs(lev[1]["v"] - (g0 - phi11 @ g1.conj().T)).max() < 1e-12


@pytest.mark.parametrize("n", [2, 5, 8, 12])
def test_levinson_vs_dense(model_of, n):
    m = model_of(0.3, 0.5)
    acov = autocov(m, n + 2)
    lev = block_levinson(acov, n)
    phi, phit, v, vt = dense_predictor(acov, n)
    assert np.abs(lev[n]["phi"] - phi).max() < 1e-9
    assert np.abs(lev[n]["phi_tilde"] - phit).max() < 1e-9
    assert np.abs(lev[n]["v"] - v).max() < 1e-9
    assert np.abs(lev[n]["v_tilde"] - vt).max() < 1e-9


def test_long_memory_decay(model_of):
    m = model_of(0.3, 0.5)
    acov = autocov(m, 600)
    ks = np.arange(200, 601)
    norms = np.linalg.norm(acov.coeffs[200:], 2, axis=(1, 2))
    scaled = norms * ks ** (1 - 2 * 0.3)
    assert scaled.max() / scaled.min() < 1.05


def test_oracle_solutions_alpha_norm(model_of):
    m = model_of(0.3, 0.5)
    sols = oracle_solutions(m, range(1, 9))
    for n, s in sols.items():
        assert np.linalg.norm(s.alpha, 2) <= 1 + 1e-10
        w = np.linalg.eigvalsh(s.v)
        assert w.min() > 0
