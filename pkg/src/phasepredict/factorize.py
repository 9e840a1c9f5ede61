"""Matrix spectral factorization on the unit circle (Wilson's method).

Given g satisfying the pole/zero-free disk condition, find the outer factor
g_tilde with g(e^{-i theta}) g(e^{-i theta})^* = g_tilde(e^{i theta})
g_tilde(e^{i theta})^*, normalized so g_tilde(0) is Hermitian positive
definite, and derive g_sharp(z) = {g_tilde(conj z)}^*, whose coefficients
are the Hermitian conjugates of g_tilde's.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ratmat import CoeffSeq, RationalMatrix, hermitian_inv_sqrt

DEFAULT_GRID = 1 << 14
GRID_CAP = 1 << 20
MAX_ITER = 120


class NonConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass
class MatrixGridSamples:
    """Uniform circle grid carrier; theta_j = 2 pi j / N - pi."""

    N: int
    samples: np.ndarray  # (N, q, q), ordered by theta in [-pi, pi)

    @property
    def theta(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.N) / self.N - np.pi

    @classmethod
    def from_native(cls, native: np.ndarray) -> "MatrixGridSamples":
        """native[j] is the value at 2 pi j / N; reorder to start at -pi."""
        N = len(native)
        return cls(N=N, samples=np.roll(native, N // 2, axis=0))

    def to_native(self) -> np.ndarray:
        return np.roll(self.samples, -(self.N // 2), axis=0)


@dataclass
class Factorization:
    g_tilde: MatrixGridSamples
    g_tilde_coeffs: CoeffSeq
    g_sharp: MatrixGridSamples
    g_sharp_coeffs: CoeffSeq
    residual: float
    iterations: int
    grid_size: int
    coeff_tail: float


def _plus_operator(samples: np.ndarray) -> np.ndarray:
    """Analytic projection on native-grid samples: half DC, drop negative freqs."""
    N = len(samples)
    coeffs = np.fft.fft(samples, axis=0) / N
    coeffs[0] *= 0.5
    coeffs[N // 2 + 1:] = 0.0
    return np.fft.ifft(coeffs * N, axis=0)


def _wilson_iterate(phi: np.ndarray, tol: float, max_iter: int = MAX_ITER):
    """Run Wilson's Newton iteration on native-grid samples of phi (N,q,q)."""
    N, q, _ = phi.shape
    eye = np.eye(q)
    a0 = phi.mean(axis=0)
    a0 = (a0 + a0.conj().T) / 2
    psi = np.tile(np.linalg.cholesky(a0), (N, 1, 1)).astype(complex)
    scale = np.abs(phi).max()
    residual = np.inf
    for it in range(1, max_iter + 1):
        psi_inv = np.linalg.inv(psi)
        inner = psi_inv @ phi @ psi_inv.conj().swapaxes(-1, -2) + eye
        gplus = _plus_operator(inner)
        g0 = np.fft.fft(inner, axis=0)[0] / N * 0.5
        upper = np.triu(g0, k=1)
        s_corr = upper.conj().T - upper  # anti-Hermitian; keeps psi_hat_0 lower triangular
        psi = psi @ (gplus + s_corr)
        residual = np.abs(psi @ psi.conj().swapaxes(-1, -2) - phi).max() / scale
        if residual < tol:
            return psi, residual, it
    raise NonConvergenceError(
        f"Wilson iteration did not reach tol={tol} in {max_iter} steps", residual
    )


def spectral_factorize(
    g: RationalMatrix,
    N: int = DEFAULT_GRID,
    tol: float = 1e-10,
) -> Factorization:
    """Outer factorization of g(e^{-i.}) g(e^{-i.})^* with PD normalization.

    Doubles the grid until the recovered coefficient tail is negligible
    (rational g under the disk condition has exponentially decaying
    coefficients). Raises NonConvergenceError / ConditionCError.
    """
    g.require_condition_c()
    q = g.q
    while True:
        theta = 2 * np.pi * np.arange(N) / N
        gm = g.eval(np.exp(-1j * theta))  # g(e^{-i theta})
        phi = gm @ gm.conj().swapaxes(-1, -2)
        psi, residual, iters = _wilson_iterate(phi, tol)
        coeffs = np.fft.fft(psi, axis=0) / N
        mags = np.abs(coeffs).max(axis=(1, 2))
        tail = mags[N // 4: N // 2].max() / max(mags.max(), 1e-300)
        if tail < 1e-13 or N >= GRID_CAP:
            break
        N *= 2
    # unitary freedom: right-multiply so g_tilde(0) is Hermitian PD
    psi0 = coeffs[0]
    qfac = psi0.conj().T @ hermitian_inv_sqrt(psi0 @ psi0.conj().T)
    psi = psi @ qfac
    coeffs = coeffs @ qfac

    keep = N // 2
    mags = np.abs(coeffs).max(axis=(1, 2))
    nz = np.nonzero(mags[:keep] > 1e-16 * mags.max())[0]
    keep = int(nz.max()) + 1 if len(nz) else 1
    gt_coeffs = CoeffSeq(q=q, coeffs=coeffs[:keep], offset=0,
                         tail_bound=float(mags[keep:].max(initial=0.0)))
    gsh_coeffs = CoeffSeq(q=q, coeffs=coeffs[:keep].conj().swapaxes(-1, -2), offset=0,
                          tail_bound=gt_coeffs.tail_bound)
    # g_sharp(e^{i theta}) = g_tilde(e^{-i theta})^*
    gsharp_native = np.roll(psi[::-1], 1, axis=0).conj().swapaxes(-1, -2)
    return Factorization(
        g_tilde=MatrixGridSamples.from_native(psi),
        g_tilde_coeffs=gt_coeffs,
        g_sharp=MatrixGridSamples.from_native(gsharp_native),
        g_sharp_coeffs=gsh_coeffs,
        residual=float(residual),
        iterations=iters,
        grid_size=N,
        coeff_tail=gt_coeffs.tail_bound,
    )


def outer_zero_report(fact: Factorization) -> dict:
    """Argument-principle check that det g_tilde is zero-free in the disk."""
    native = fact.g_tilde.to_native()
    detv = np.linalg.det(native)
    min_abs = float(np.abs(detv).min())
    angles = np.angle(detv)
    winding = float(np.round(np.sum(np.diff(np.unwrap(np.concatenate([angles, angles[:1]])))) / (2 * np.pi)))
    return {"min_abs_det": min_abs, "winding": winding, "zero_free": winding == 0.0 and min_abs > 0}


def laurent_phase_ratio(
    g: RationalMatrix,
    fact: Factorization,
    window: int | None = None,
    tail_tol: float = 1e-13,
) -> CoeffSeq:
    """Laurent coefficients s_k of {g(1/conj z)}^* g_sharp(z)^{-1} on an annulus.

    On the circle the function equals g(e^{i theta})^* g_sharp(e^{i theta})^{-1},
    unitary-valued, so FFT aliasing decays geometrically. Records the
    measured tail; checks sum_k s_k against g(1)^* g_sharp(1)^{-1}.
    """
    N = fact.grid_size
    theta = 2 * np.pi * np.arange(N) / N
    gv = g.eval(np.exp(1j * theta))
    gsh = fact.g_sharp.to_native()
    F = gv.conj().swapaxes(-1, -2) @ np.linalg.inv(gsh)
    sk = np.fft.fft(F, axis=0) / N  # s_k at index k mod N
    mags = np.abs(sk).max(axis=(1, 2))
    smax = mags.max()
    if window is None:
        W = 1
        while W < N // 4:
            if max(mags[W:N - W].max(initial=0.0), 0.0) <= tail_tol * smax:
                break
            W += 1
        else:
            raise NonConvergenceError(
                "phase-ratio Laurent tail does not fall below tolerance; "
                "increase grid size N", float(mags[N // 4: 3 * N // 4].max() / smax),
            )
        window = W
    ks = np.arange(-window, window + 1)
    coeffs = sk[ks % N]
    tail = float(mags[window + 1: N - window].max(initial=0.0)) if window + 1 < N - window else 0.0
    seq = CoeffSeq(q=g.q, coeffs=coeffs, offset=-window, tail_bound=tail)
    # consistency: sum_k s_k = value at z=1
    u_sum = coeffs.sum(axis=0)
    u_direct = g.eval(1.0).conj().T @ np.linalg.inv(fact.g_sharp.to_native()[0])
    if np.abs(u_sum - u_direct).max() > 1e-8:
        raise NonConvergenceError(
            "Laurent window inconsistent with endpoint value of the phase ratio",
            float(np.abs(u_sum - u_direct).max()),
        )
    return seq
