"""FARIMA model bundle and its MA/AR/infinite-predictor coefficient sequences.

A model is d together with a rational g passing the disk condition; the
spectral density is |1-e^{i theta}|^{-2d} g g^*. The outer factor g_tilde,
the dual factor g_sharp and the phase-ratio Laurent window s_k are computed
once at build time and reused everywhere.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as _gamma

from .factorize import Factorization, laurent_phase_ratio, spectral_factorize
from .fractional import check_frac_order, frac_binomial
from .ratmat import (
    CoeffSeq,
    RationalMatrix,
    convolve_series,
    invert_series,
    spectral_norm,
)


def gamma_reflect(x: float) -> float:
    """Gamma(x) for negative non-integer x via the reflection formula."""
    if x > 0:
        return float(_gamma(x))
    return float(np.pi / (np.sin(np.pi * x) * _gamma(1.0 - x)))


@dataclass
class FarimaModel:
    d: float
    g: RationalMatrix
    fact: Factorization
    s: CoeffSeq                      # Laurent window of {g(1/conj z)}^* g_sharp(z)^{-1}
    c0: np.ndarray                   # g(0)
    c0_tilde: np.ndarray             # g_tilde(0), Hermitian PD by normalization
    U: np.ndarray                    # g(1)^* g_sharp(1)^{-1}, unitary
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def q(self) -> int:
        return self.g.q

    @classmethod
    def build(
        cls,
        d: float,
        g: RationalMatrix,
        grid: int | None = None,
        tol: float = 1e-11,
    ) -> "FarimaModel":
        d = check_frac_order(d)
        g.require_condition_c()
        kwargs = {} if grid is None else {"N": grid}
        fact = spectral_factorize(g, tol=tol, **kwargs)
        s = laurent_phase_ratio(g, fact)
        c0 = g.eval(0.0)
        c0t = fact.g_tilde_coeffs.coeffs[0]
        U = g.eval(1.0).conj().T @ np.linalg.inv(fact.g_sharp.to_native()[0])
        uerr = np.abs(U @ U.conj().T - np.eye(g.q)).max()
        if uerr > 1e-8:
            raise ValueError(f"phase-ratio endpoint not unitary (err {uerr:.2e}); "
                             "factorization residual too large")
        return cls(d=d, g=g, fact=fact, s=s, c0=c0, c0_tilde=c0t, U=U)

    # ---- coefficient sequences ------------------------------------------

    def g_taylor(self, K: int) -> np.ndarray:
        key = ("g_taylor", K)
        if key not in self._cache:
            self._cache[key] = self.g.taylor_coeffs(K)
        return self._cache[key]

    def g_tilde_taylor(self, K: int) -> np.ndarray:
        """g_tilde power series, zero-extended beyond the recovered window."""
        c = self.fact.g_tilde_coeffs.coeffs
        if K + 1 <= len(c):
            return c[: K + 1]
        out = np.zeros((K + 1, self.q, self.q), dtype=complex)
        out[: len(c)] = c
        return out

    def ma_coeffs(self, K: int) -> CoeffSeq:
        """c_k: Taylor coefficients of (1-z)^{-d} g(z)."""
        fb = frac_binomial(self.d, K)
        conv = convolve_series(fb[:, None, None] * np.eye(self.q), self.g_taylor(K), K)
        return CoeffSeq(q=self.q, coeffs=conv, offset=0)

    def ma_coeffs_backward(self, K: int) -> CoeffSeq:
        fb = frac_binomial(self.d, K)
        conv = convolve_series(fb[:, None, None] * np.eye(self.q), self.g_tilde_taylor(K), K)
        return CoeffSeq(q=self.q, coeffs=conv, offset=0)

    def ar_coeffs(self, K: int) -> CoeffSeq:
        """a_k: Taylor coefficients of -(1-z)^{d} g(z)^{-1}; c0 a0 = -I."""
        key = ("ar", K)
        if key not in self._cache:
            fb = frac_binomial(-self.d, K)
            ginv = invert_series(self.g_taylor(K), K)
            conv = convolve_series(fb[:, None, None] * np.eye(self.q), ginv, K)
            self._cache[key] = CoeffSeq(q=self.q, coeffs=-conv, offset=0)
        return self._cache[key]

    def ar_coeffs_backward(self, K: int) -> CoeffSeq:
        key = ("ar_b", K)
        if key not in self._cache:
            fb = frac_binomial(-self.d, K)
            gti = invert_series(self.g_tilde_taylor(K), K)
            conv = convolve_series(fb[:, None, None] * np.eye(self.q), gti, K)
            self._cache[key] = CoeffSeq(q=self.q, coeffs=-conv, offset=0)
        return self._cache[key]

    def infinite_predictor_coeffs(self, K: int) -> tuple[CoeffSeq, CoeffSeq]:
        """phi_k = c0 a_k and phi_tilde_k = c0_tilde a_tilde_k, k = 1..K."""
        a = self.ar_coeffs(K).coeffs
        at = self.ar_coeffs_backward(K).coeffs
        phi = np.einsum("ab,kbc->kac", self.c0, a[1:])
        phit = np.einsum("ab,kbc->kac", self.c0_tilde, at[1:])
        return (CoeffSeq(q=self.q, coeffs=phi, offset=1),
                CoeffSeq(q=self.q, coeffs=phit, offset=1))

    # ---- asymptotic anchors ----------------------------------------------

    def g_at_one_inv(self) -> np.ndarray:
        return np.linalg.inv(self.g.eval(1.0))

    def g_sharp_at_one(self) -> np.ndarray:
        return self.fact.g_sharp.to_native()[0]

    def ar_asymptote(self) -> np.ndarray:
        """Limit matrix A with a_n ~ A n^{-1-d}: A = -Gamma(-d)^{-1} g(1)^{-1}."""
        return -self.g_at_one_inv() / gamma_reflect(-self.d)

    def ar_asymptote_backward(self) -> np.ndarray:
        gs1 = self.g_sharp_at_one()
        return -np.linalg.inv(gs1.conj().T) / gamma_reflect(-self.d)

    def ar_asymptotics_check(self, n_list, K: int | None = None) -> list[dict]:
        """n ||n^{1+d} a_n + Gamma(-d)^{-1} g(1)^{-1}|| per n, fwd and bwd."""
        n_list = sorted(int(n) for n in n_list)
        K = K or (max(n_list) + 1)
        a = self.ar_coeffs(K).coeffs
        at = self.ar_coeffs_backward(K).coeffs
        Af = -self.ar_asymptote()
        Ab = -self.ar_asymptote_backward()
        rows = []
        for n in n_list:
            dev_f = spectral_norm(n ** (1 + self.d) * a[n] + Af)
            dev_b = spectral_norm(n ** (1 + self.d) * at[n] + Ab)
            rows.append({"n": n, "fwd": n * dev_f, "bwd": n * dev_b})
        return rows

    def phi_tail_sum(self, n: int, K: int = 4096) -> tuple[float, float]:
        """(computed sum_{j=n+1..K} ||phi_j||, analytic estimate beyond K).

        Requires d > 0; the estimate uses the limit
        n^d sum_{j>n} ||phi_j|| -> ||c0 g(1)^{-1}|| / Gamma(1-d).
        """
        if self.d <= 0:
            raise ValueError("phi tail sums require d in (0, 1/2)")
        phi, _ = self.infinite_predictor_coeffs(max(K, n + 1))
        norms = np.linalg.norm(phi.coeffs, 2, axis=(1, 2))
        partial = float(norms[n:].sum())  # phi.offset == 1 -> index j-1
        lim = spectral_norm(self.c0 @ self.g_at_one_inv()) / _gamma(1.0 - self.d)
        beyond = lim * max(K, n) ** (-self.d)
        return partial, float(beyond)

    def v_inf(self) -> np.ndarray:
        return self.c0 @ self.c0.conj().T

    def v_tilde_inf(self) -> np.ndarray:
        return self.c0_tilde @ self.c0_tilde.conj().T

    def reversed_model(self, tol: float = 1e-11) -> "FarimaModel":
        """Model with g replaced by the (polynomially truncated) g_tilde."""
        c = self.fact.g_tilde_coeffs.coeffs
        one = np.array([1.0 + 0j])
        entries = [
            [(np.ascontiguousarray(c[:, i, j]), one) for j in range(self.q)]
            for i in range(self.q)
        ]
        g_rev = RationalMatrix.from_entries(entries)
        return FarimaModel.build(self.d, g_rev, grid=self.fact.grid_size, tol=tol)
