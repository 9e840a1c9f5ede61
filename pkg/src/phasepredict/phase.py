"""Phase-coefficient sequence beta_k and the limit matrices U and V.

beta_n is the exact convolution of the closed-form scalar sequence rho with
the exponentially decaying Laurent window s_k of the phase ratio. A
PhaseSeq materializes a window of beta values; when built from a model it
also carries (d, s) so consumers can extend it exactly to any index.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fractional import rho
from .model import FarimaModel
from .ratmat import CoeffSeq, hermitian_inv_sqrt, spectral_norm


@dataclass
class PhaseSeq:
    """Two-sided window of beta matrices with provenance for exact extension."""

    q: int
    n_min: int
    n_max: int
    values: np.ndarray            # (n_max - n_min + 1, q, q)
    tail_bound: float = 0.0
    d: float | None = None
    s: CoeffSeq | None = None     # phase-ratio Laurent window (enables extension)

    def at(self, n: int) -> np.ndarray:
        if self.n_min <= n <= self.n_max:
            return self.values[n - self.n_min]
        if self.extendable:
            return beta_values(self.d, self.s, np.array([n]))[0]
        raise IndexError(f"beta index {n} outside window [{self.n_min}, {self.n_max}]")

    @property
    def extendable(self) -> bool:
        return self.d is not None and self.s is not None

    def window(self, lo: int, hi: int) -> np.ndarray:
        """beta_lo..beta_hi inclusive, extending beyond the stored range if possible."""
        if lo >= self.n_min and hi <= self.n_max:
            return self.values[lo - self.n_min: hi - self.n_min + 1]
        if not self.extendable:
            raise IndexError(f"window [{lo},{hi}] exceeds stored range and "
                             "sequence carries no generator")
        return beta_values(self.d, self.s, np.arange(lo, hi + 1))


def beta_values(d: float, s: CoeffSeq, idx: np.ndarray) -> np.ndarray:
    """beta_n = sum_k rho_{n-k} s_k for (integer or real) indices n."""
    ks = np.arange(s.offset, s.offset + len(s.coeffs))
    r = rho(d, np.asarray(idx, dtype=float)[..., None] - ks)
    return np.einsum("...k,kab->...ab", r, s.coeffs)


def beta_from_model(model: FarimaModel, window: tuple[int, int]) -> PhaseSeq:
    """Materialize beta on [window[0], window[1]] from the model's s window."""
    lo, hi = int(window[0]), int(window[1])
    if hi < lo:
        raise ValueError("empty window")
    vals = beta_values(model.d, model.s, np.arange(lo, hi + 1))
    # dropped-s effect: geometric sum of the tail against the rho scale
    rho_max = abs(np.sin(np.pi * model.d)) / (np.pi * (1 - abs(model.d)))
    tail = 4.0 * model.s.tail_bound * rho_max
    return PhaseSeq(q=model.q, n_min=lo, n_max=hi, values=vals,
                    tail_bound=float(tail), d=model.d, s=model.s)


def compute_U(model: FarimaModel) -> np.ndarray:
    """U = g(1)^* g_sharp(1)^{-1}; checked unitary at build time."""
    return model.U


def compute_V(model: FarimaModel) -> np.ndarray:
    """V = v_inf^{-1/2} c0 . U . (v_tilde_inf^{-1/2} c0_tilde)^*, unitary."""
    vi = hermitian_inv_sqrt(model.v_inf())
    vti = hermitian_inv_sqrt(model.v_tilde_inf())
    V = vi @ model.c0 @ model.U @ (vti @ model.c0_tilde).conj().T
    err = np.abs(V @ V.conj().T - np.eye(model.q)).max()
    if err > 1e-8:
        raise ValueError(f"V failed the unitarity check (err {err:.2e})")
    return V


def delta_diagnostics(beta: PhaseSeq, d: float, U: np.ndarray, n_list) -> list[dict]:
    """Norms of Delta_n and Delta'_n with beta_n = rho_n (I + Delta_n) U
    = rho_n U (I + Delta'_n); also the running estimate of sup n ||Delta_n||.
    """
    Uinv = U.conj().T
    eye = np.eye(beta.q)
    rows = []
    m_hat = 0.0
    for n in sorted(int(n) for n in n_list):
        if n < 1:
            raise ValueError("delta diagnostics require n >= 1")
        b = beta.at(n) / rho(d, n)
        dn = spectral_norm(b @ Uinv - eye)
        dpn = spectral_norm(Uinv @ b - eye)
        m_hat = max(m_hat, n * dn)
        rows.append({"n": n, "delta": dn, "delta_prime": dpn, "m_hat": m_hat})
    return rows


def parseval_defect(beta: PhaseSeq, m_max: int, half_window: int | None = None) -> float:
    """max_{|m|<=m_max} || sum_j beta_j beta_{j+m}^* - delta_{0m} I ||.

    The phase function is unitary-valued, so the defect is bounded by the
    window truncation plus tail_bound.
    """
    W = half_window or (beta.n_max - beta.n_min) // 2 - m_max
    center = (beta.n_min + beta.n_max) // 2
    js = np.arange(center - W, center + W + 1)
    B = beta.window(js[0], js[-1] + m_max)
    eye = np.eye(beta.q)
    worst = 0.0
    for m in range(m_max + 1):
        acc = np.einsum("jab,jcb->ac", B[: len(js)], B[m: m + len(js)].conj())
        target = eye if m == 0 else 0.0
        worst = max(worst, float(np.abs(acc - target).max()))
    return worst
