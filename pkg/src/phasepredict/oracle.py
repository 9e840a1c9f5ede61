"""Independent ground truth: exact autocovariances and block Levinson.

The autocovariance separates the singular scalar factor from the smooth
rational factor: Gamma(k) = sum_m gamma_d(k - m) G_m, with gamma_d the
closed-form FARIMA(0,d,0) autocovariance and G_m the exponentially
decaying Laurent coefficients of g g^*. The finite prediction problem is
then solved by the multichannel Levinson-Whittle recursion, cross-checked
against dense block-Toeplitz solves at small orders.
"""
from __future__ import annotations

import numpy as np

from .fractional import gamma_d_seq
from .model import FarimaModel
from .ratmat import CoeffSeq, hermitian_inv_sqrt, hermitian_sqrt


class OracleError(RuntimeError):
    pass


def gg_laurent(model: FarimaModel, tail_tol: float = 1e-15) -> CoeffSeq:
    """Laurent coefficients G_m of g(e^{i theta}) g(e^{i theta})^*."""
    N = model.fact.grid_size
    theta = 2 * np.pi * np.arange(N) / N
    gv = model.g.eval(np.exp(1j * theta))
    GG = gv @ gv.conj().swapaxes(-1, -2)
    cm = np.fft.fft(GG, axis=0) / N
    mags = np.abs(cm).max(axis=(1, 2))
    smax = mags.max()
    W = 1
    while W < N // 4 and mags[W:N - W].max(initial=0.0) > tail_tol * smax:
        W += 1
    if W >= N // 4:
        raise OracleError("g g^* Laurent tail did not decay; increase the grid")
    ms = np.arange(-W, W + 1)
    return CoeffSeq(q=model.q, coeffs=cm[ms % N], offset=-W,
                    tail_bound=float(mags[W + 1: N - W].max(initial=0.0)))


def autocov(model: FarimaModel, L: int) -> CoeffSeq:
    """Gamma(0..L) with Gamma(k) = <X_k, X_0>; Gamma(-k) = Gamma(k)^*."""
    G = gg_laurent(model)
    W = -G.offset
    gd = gamma_d_seq(model.d, L + W + 1)
    ms = np.arange(-W, W + 1)
    out = np.empty((L + 1, model.q, model.q), dtype=complex)
    for k in range(L + 1):
        out[k] = np.einsum("m,mab->ab", gd[np.abs(k - ms)], G.coeffs)
    return CoeffSeq(q=model.q, coeffs=out, offset=0,
                    tail_bound=float(G.tail_bound * gd[0] * (2 * W + 1)))


def _gam(acov: CoeffSeq, k: int) -> np.ndarray:
    return acov.coeffs[k] if k >= 0 else acov.coeffs[-k].conj().T


def block_levinson(acov: CoeffSeq, n_max: int) -> dict[int, dict]:
    """Multichannel Levinson-Whittle recursion up to order n_max.

    Returns {n: {phi: (n,q,q), phi_tilde: (n,q,q), v, v_tilde}} where phi
    solves Gamma(k) = sum_j phi_j Gamma(k - j) (forward normal equations)
    and phi_tilde the time-reversed system.
    """
    if n_max + 1 > len(acov.coeffs):
        raise OracleError(f"need {n_max + 1} autocovariances, have {len(acov.coeffs)}")
    q = acov.q
    v = acov.coeffs[0].copy()
    vt = acov.coeffs[0].copy()
    phi = np.zeros((0, q, q), dtype=complex)
    phit = np.zeros((0, q, q), dtype=complex)
    out: dict[int, dict] = {}
    for n in range(1, n_max + 1):
        dn = _gam(acov, n) - sum(phi[j - 1] @ _gam(acov, n - j) for j in range(1, n))
        dtn = _gam(acov, n).conj().T - sum(
            phit[j - 1] @ _gam(acov, n - j).conj().T for j in range(1, n))
        try:
            pnn = dn @ np.linalg.inv(vt)
            ptnn = dtn @ np.linalg.inv(v)
        except np.linalg.LinAlgError as exc:
            raise OracleError(f"singular innovation covariance at step {n}") from exc
        phi_new = np.empty((n, q, q), dtype=complex)
        phit_new = np.empty((n, q, q), dtype=complex)
        for j in range(1, n):
            phi_new[j - 1] = phi[j - 1] - pnn @ phit[n - j - 1]
            phit_new[j - 1] = phit[j - 1] - ptnn @ phi[n - j - 1]
        phi_new[n - 1] = pnn
        phit_new[n - 1] = ptnn
        v, vt = v - pnn @ vt @ pnn.conj().T, vt - ptnn @ v @ ptnn.conj().T
        phi, phit = phi_new, phit_new
        out[n] = {"phi": phi.copy(), "phi_tilde": phit.copy(),
                  "v": v.copy(), "v_tilde": vt.copy()}
    return out


def dense_predictor(acov: CoeffSeq, n: int):
    """Direct dense solve of the block Toeplitz normal equations (small n)."""
    q = acov.q
    M = np.zeros((n * q, n * q), dtype=complex)
    for j in range(1, n + 1):
        for k in range(1, n + 1):
            M[(j - 1) * q: j * q, (k - 1) * q: k * q] = _gam(acov, k - j)
    rhs = np.hstack([_gam(acov, k) for k in range(1, n + 1)])
    Phi = rhs @ np.linalg.inv(M)
    phi = np.stack([Phi[:, (j - 1) * q: j * q] for j in range(1, n + 1)])
    v = acov.coeffs[0] - sum(phi[j - 1] @ _gam(acov, j).conj().T
                             for j in range(1, n + 1))
    # backward: Gamma(-k) = sum_j phit_j Gamma(j-k)
    Mb = np.zeros((n * q, n * q), dtype=complex)
    for j in range(1, n + 1):
        for k in range(1, n + 1):
            Mb[(j - 1) * q: j * q, (k - 1) * q: k * q] = _gam(acov, j - k)
    rhsb = np.hstack([_gam(acov, -k) for k in range(1, n + 1)])
    Phib = rhsb @ np.linalg.inv(Mb)
    phit = np.stack([Phib[:, (j - 1) * q: j * q] for j in range(1, n + 1)])
    vt = acov.coeffs[0] - sum(phit[j - 1] @ _gam(acov, -j).conj().T
                              for j in range(1, n + 1))
    return phi, phit, v, vt


def oracle_solutions(model: FarimaModel, n_list, acov: CoeffSeq | None = None):
    """PredictorSolution-shaped oracle results for the requested horizons."""
    from .engine import PredictorSolution

    n_list = sorted(set(int(n) for n in n_list))
    n_max = max(n_list)
    if acov is None:
        acov = autocov(model, n_max + 1)
    lev = block_levinson(acov, n_max)
    g0 = acov.coeffs[0]
    out = {}
    for n in n_list:
        r = lev[n]
        if n == 1:
            v_prev = vt_prev = g0
        else:
            v_prev, vt_prev = lev[n - 1]["v"], lev[n - 1]["v_tilde"]
        alpha = hermitian_inv_sqrt(v_prev) @ r["phi"][n - 1] @ hermitian_sqrt(vt_prev)
        out[n] = PredictorSolution(
            n=n, phi=r["phi"], phi_tilde=r["phi_tilde"],
            v=(r["v"] + r["v"].conj().T) / 2,
            v_tilde=(r["v_tilde"] + r["v_tilde"].conj().T) / 2,
            phi_nn=r["phi"][n - 1], phi_tilde_nn=r["phi_tilde"][n - 1],
            alpha=alpha, diagnostics={"mode": "oracle"},
        )
    return out


def oracle_pacf(acov: CoeffSeq, n: int) -> np.ndarray:
    """alpha_n from the autocovariances alone."""
    if n < 1:
        raise OracleError("PACF defined for n >= 1")
    g0 = acov.coeffs[0]
    if n == 1:
        return hermitian_inv_sqrt(g0) @ _gam(acov, 1) @ hermitian_inv_sqrt(g0)
    lev = block_levinson(acov, n)
    v_prev, vt_prev = lev[n - 1]["v"], lev[n - 1]["v_tilde"]
    return hermitian_inv_sqrt(v_prev) @ lev[n]["phi"][n - 1] @ hermitian_sqrt(vt_prev)
