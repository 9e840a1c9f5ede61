"""Closed-form univariate FARIMA(0,d,0) quantities and series constants.

These serve both as building blocks for the multivariate machinery (the
scalar phase coefficients rho_n drive everything) and as independent ground
truth for the q=1 engine checks.
"""
from __future__ import annotations

import warnings

import numpy as np
from scipy.special import gammaln


D_EDGE = 1e-3  # |1/2 - |d|| below this triggers a conditioning warning


class FracOrderWarning(UserWarning):
    """d is valid but close enough to +-1/2 that series constants blow up."""


def check_frac_order(d: float) -> float:
    """Validate the fractional differencing order d in (-1/2, 1/2) \\ {0}."""
    d = float(d)
    if not (-0.5 < d < 0.5) or d == 0.0:
        raise ValueError(f"fractional order must lie in (-1/2, 1/2) excluding 0, got {d}")
    if 0.5 - abs(d) < D_EDGE:
        warnings.warn(
            f"d={d} is within {D_EDGE} of +-1/2; truncation constants degrade",
            FracOrderWarning,
            stacklevel=2,
        )
    return d


def rho(d: float, n) -> np.ndarray | float:
    """Scalar phase coefficients rho_n = sin(pi d) / (pi (n - d)).

    Minus of the Fourier coefficients of the FARIMA(0,d,0) phase function.
    Valid for any integer (or real) n; n - d never vanishes for integer n.
    """
    n = np.asarray(n, dtype=float)
    out = np.sin(np.pi * d) / (np.pi * (n - d))
    return out if out.ndim else float(out)


def frac_binomial(d: float, K: int) -> np.ndarray:
    """Taylor coefficients C_0..C_K of (1 - z)^(-d).

    C_0 = 1, C_k = C_{k-1} (k - 1 + d) / k. Multiplicative recurrence keeps
    relative error at O(k ulp); no gamma quotients.
    """
    if K < 0:
        raise ValueError("K must be >= 0")
    out = np.empty(K + 1)
    out[0] = 1.0
    for k in range(1, K + 1):
        out[k] = out[k - 1] * (k - 1 + d) / k
    return out


RECURRENCE_CUTOFF = 4096


def u_n(d: float, n) -> np.ndarray | float:
    """Finite prediction error variance of FARIMA(0,d,0).

    u_n = Gamma(n+1-2d) Gamma(n+1) / Gamma(n+1-d)^2. The gamma ratio is
    accumulated by the multiplicative recurrence
    u_k = u_{k-1} (k - 2d) k / (k - d)^2 up to a cutoff (keeps relative
    error at the k ulp level); very large n falls back to log-gamma.
    """
    d = check_frac_order(d)
    n = np.asarray(n, dtype=float)
    if np.any(n < 0):
        raise ValueError("n must be >= 0")
    scalar = n.ndim == 0
    n = np.atleast_1d(n)
    out = np.empty_like(n)
    small = n <= RECURRENCE_CUTOFF
    if small.any():
        kmax = int(n[small].max())
        k = np.arange(1, kmax + 1)
        table = np.empty(kmax + 1)
        table[0] = np.exp(gammaln(1 - 2 * d) - 2 * gammaln(1 - d))
        table[1:] = table[0] * np.cumprod((k - 2 * d) * k / (k - d) ** 2)
        out[small] = table[n[small].astype(int)]
    if (~small).any():
        m = n[~small]
        out[~small] = np.exp(gammaln(m + 1 - 2 * d) + gammaln(m + 1)
                             - 2 * gammaln(m + 1 - d))
    return out if not scalar else float(out[0])


def u_n_product(d: float, n: int) -> float:
    """u_n via the Durbin-Levinson product u_0 prod_{k<=n} (1 - psi_kk^2).

    Cross-check route for :func:`u_n`; the two agree to ~1e-12 relative.
    """
    d = check_frac_order(d)
    u0 = np.exp(gammaln(1 - 2 * d) - 2 * gammaln(1 - d))
    k = np.arange(1, n + 1)
    return float(u0 * np.prod(1.0 - (d / (k - d)) ** 2))


def psi_nn(d: float, n) -> np.ndarray | float:
    """Reflection coefficient psi_nn = d / (n - d) of FARIMA(0,d,0), n >= 1."""
    n = np.asarray(n, dtype=float)
    if np.any(n < 1):
        raise ValueError("n must be >= 1")
    out = d / (n - d)
    return out if out.ndim else float(out)


def tau_coeffs(parity: str, K: int) -> np.ndarray:
    """Coefficients of the arcsin series used in truncation envelopes.

    parity='odd':  tau_1, tau_3, ..., tau_{2K-1} with
                   pi^{-1} arcsin x = sum_k tau_{2k+1} x^{2k+1};
    parity='even': tau_2, tau_4, ..., tau_{2K} with
                   (pi^{-1} arcsin x)^2 = sum_k tau_{2k} x^{2k}
    (self-convolution of the odd series). All entries are positive.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    ks = np.arange(K)
    # arcsin x = sum (2k)! / (4^k (k!)^2 (2k+1)) x^{2k+1}
    logc = gammaln(2 * ks + 1) - ks * np.log(4.0) - 2 * gammaln(ks + 1) - np.log(2.0 * ks + 1)
    odd = np.exp(logc) / np.pi
    if parity == "odd":
        return odd
    if parity == "even":
        return np.convolve(odd, odd)[:K]
    raise ValueError(f"parity must be 'odd' or 'even', got {parity!r}")


def tau_envelope_tail(d: float, K: int, scale: float = 1.0) -> float:
    """Bound on sum_{k>K} tau_k (t^2 sin(pi|d|))^k with the midpoint t.

    Mirrors the geometric envelope in the convergence proofs; used as the
    level-truncation certificate. `scale` multiplies the argument
    (e.g. to account for a measured prefactor).
    """
    s = np.sin(np.pi * abs(d))
    t = 0.5 * (1.0 + s ** -0.5)
    x = min(t * t * s * scale, 0.9999)
    kk = np.arange(1, K + 260)
    odd = tau_coeffs("odd", len(kk))
    even = tau_coeffs("even", len(kk))
    terms = np.empty(2 * len(kk))
    terms[0::2] = odd * x ** (2 * kk - 1)
    terms[1::2] = even * x ** (2 * kk)
    tail = terms[K:].sum()
    # geometric bound on what is beyond the materialized terms
    tail += terms[-1] * x / (1 - x)
    return float(tail)


def gamma_d_autocov(d: float, k) -> np.ndarray | float:
    """Autocovariance gamma_d(k) of FARIMA(0,d,0), i.e. the k-th Fourier
    coefficient of |1 - e^{i theta}|^{-2d}.

    gamma(0) = Gamma(1-2d)/Gamma(1-d)^2, gamma(k) = gamma(k-1) (k-1+d)/(k-d);
    even in k.
    """
    d = check_frac_order(d)
    k = np.atleast_1d(np.asarray(k, dtype=int))
    kmax = int(np.abs(k).max())
    seq = gamma_d_seq(d, kmax)
    out = seq[np.abs(k)]
    return out if out.shape != (1,) else float(out[0])


def gamma_d_seq(d: float, L: int) -> np.ndarray:
    """gamma_d(0..L) by the stable multiplicative recurrence."""
    out = np.empty(L + 1)
    out[0] = np.exp(gammaln(1 - 2 * d) - 2 * gammaln(1 - d))
    for k in range(1, L + 1):
        out[k] = out[k - 1] * (k - 1 + d) / (k - d)
    return out
