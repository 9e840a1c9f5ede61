"""Rational matrix functions on the closed unit disk.

A RationalMatrix is a q x q grid of (numerator, denominator) polynomial
pairs in z with complex coefficients. The admissibility condition for the
spectral machinery is that no entry has a pole in the closed disk and the
determinant has no zero there.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

BOUNDARY_TOL = 1e-9   # |root| <= 1 + BOUNDARY_TOL counts as "on the closed disk"
POLE_EVAL_TOL = 1e-14


class ConditionCError(ValueError):
    """The matrix function violates the pole/zero-free disk condition."""


@dataclass
class ValidationReport:
    passed: bool
    pole_locations: list
    det_zero_locations: list
    message: str = ""

    def __bool__(self) -> bool:
        return self.passed


def _polyval_ascending(coeffs: np.ndarray, z) -> np.ndarray:
    """Evaluate sum_k coeffs[k] z^k (ascending order) by Horner."""
    z = np.asarray(z, dtype=complex)
    out = np.zeros_like(z)
    for c in coeffs[::-1]:
        out = out * z + c
    return out


def _poly_roots(coeffs: np.ndarray) -> np.ndarray:
    """Roots of an ascending-order polynomial via the companion matrix."""
    c = np.trim_zeros(np.asarray(coeffs, dtype=complex), "b")
    if len(c) <= 1:
        return np.empty(0, dtype=complex)
    return np.roots(c[::-1])


@dataclass
class RationalMatrix:
    """q x q matrix of rational functions; entries[i][j] = (num, den) ascending coeffs."""

    q: int
    entries: list = field(default_factory=list)

    @classmethod
    def from_entries(cls, entries) -> "RationalMatrix":
        q = len(entries)
        norm = []
        for row in entries:
            if len(row) != q:
                raise ValueError("entries must form a square grid")
            nrow = []
            for num, den in row:
                num = np.atleast_1d(np.asarray(num, dtype=complex))
                den = np.atleast_1d(np.asarray(den, dtype=complex))
                if not np.any(den != 0):
                    raise ValueError("identically zero denominator")
                nrow.append((num, den))
            norm.append(nrow)
        return cls(q=q, entries=norm)

    @classmethod
    def identity(cls, q: int) -> "RationalMatrix":
        one = np.array([1.0 + 0j])
        zero = np.array([0.0 + 0j])
        return cls.from_entries(
            [[(one if i == j else zero, one) for j in range(q)] for i in range(q)]
        )

    @classmethod
    def paper_example(cls, c: complex) -> "RationalMatrix":
        """The 2x2 lower-triangular example with entry 1/(1-cz)."""
        one = [1.0]
        return cls.from_entries(
            [
                [(one, one), ([0.0], one)],
                [(one, [1.0, -c]), (one, one)],
            ]
        )

    def eval(self, z) -> np.ndarray:
        """Evaluate at points z; returns (..., q, q) array.

        Raises if any denominator vanishes at a requested point.
        """
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape + (self.q, self.q), dtype=complex)
        for i in range(self.q):
            for j in range(self.q):
                num, den = self.entries[i][j]
                dv = _polyval_ascending(den, z)
                if np.any(np.abs(dv) < POLE_EVAL_TOL):
                    raise ZeroDivisionError(
                        f"entry ({i},{j}) has a pole at one of the evaluation points"
                    )
                out[..., i, j] = _polyval_ascending(num, z) / dv
        return out

    def check_condition_c(self) -> ValidationReport:
        """Poles of entries and zeros of det inside the closed unit disk.

        Root finding by companion-matrix eigenvalues; det computed as a
        polynomial via evaluation-interpolation after clearing denominators.
        """
        poles = []
        for i in range(self.q):
            for j in range(self.q):
                _, den = self.entries[i][j]
                for r in _poly_roots(den):
                    if abs(r) <= 1.0 + BOUNDARY_TOL:
                        poles.append(complex(r))
        det_zeros = []
        det_poly = self._det_numerator_poly()
        if not np.any(np.abs(det_poly) > 0):
            return ValidationReport(False, poles, [], "determinant is identically zero")
        for r in _poly_roots(det_poly):
            if abs(r) <= 1.0 + BOUNDARY_TOL:
                det_zeros.append(complex(r))
        passed = not poles and not det_zeros
        msg = "" if passed else "pole or determinant zero on the closed unit disk"
        return ValidationReport(passed, poles, det_zeros, msg)

    def require_condition_c(self) -> None:
        rep = self.check_condition_c()
        if not rep:
            raise ConditionCError(
                f"{rep.message}: poles={rep.pole_locations}, det zeros={rep.det_zero_locations}"
            )

    def _det_numerator_poly(self) -> np.ndarray:
        """Numerator polynomial of det(self) after multiplying by prod of all dens.

        Since denominators have no roots in the closed disk whenever the
        pole check passes, zeros of this polynomial inside the disk are
        exactly the det zeros there. Computed by sampling on an FFT grid
        and interpolating.
        """
        deg_num = max(
            len(self.entries[i][j][0]) - 1 for i in range(self.q) for j in range(self.q)
        )
        deg_den = sum(
            max(len(self.entries[i][j][1]) - 1 for j in range(self.q)) for i in range(self.q)
        ) * self.q  # loose upper bound on total cleared-denominator degree
        bound = self.q * deg_num + deg_den + 1
        N = 1 << max(4, int(np.ceil(np.log2(bound + 1))) + 1)
        # sample on a circle of radius 1 (grid points are not poles when the
        # pole check passes; fall back to radius 0.93 if one lands close)
        for radius in (1.0, 0.93, 1.07):
            zs = radius * np.exp(2j * np.pi * np.arange(N) / N)
            try:
                vals = self.eval(zs)
            except ZeroDivisionError:
                continue
            dens = np.ones(N, dtype=complex)
            for i in range(self.q):
                for j in range(self.q):
                    dens *= _polyval_ascending(self.entries[i][j][1], zs)
            samples = np.linalg.det(vals) * dens
            coeffs = np.fft.fft(samples) / N
            coeffs *= radius ** -np.arange(N).astype(float)
            tail = np.abs(coeffs[bound:]).max() if bound < N else 0.0
            if tail < 1e-8 * max(np.abs(coeffs).max(), 1e-300):
                return coeffs[:bound]
        return coeffs[:bound]

    def taylor_coeffs(self, K: int) -> np.ndarray:
        """First K+1 power-series coefficients, (K+1, q, q).

        Entrywise by the linear recurrence from the denominator; exact up
        to rounding. Requires analyticity on the closed disk.
        """
        out = np.zeros((K + 1, self.q, self.q), dtype=complex)
        for i in range(self.q):
            for j in range(self.q):
                num, den = self.entries[i][j]
                for r in _poly_roots(den):
                    if abs(r) <= 1.0 + BOUNDARY_TOL:
                        raise ConditionCError(f"entry ({i},{j}) has pole {r} in the closed disk")
                d0 = den[0]
                c = np.zeros(K + 1, dtype=complex)
                for k in range(K + 1):
                    acc = num[k] if k < len(num) else 0.0
                    for m in range(1, min(k, len(den) - 1) + 1):
                        acc -= den[m] * c[k - m]
                    c[k] = acc / d0
                out[:, i, j] = c
        return out

    # ---- JSON wire format: {q, entries: [[{num: [[re,im],...], den: ...}]]}

    def to_json_dict(self) -> dict:
        def enc(p):
            return [[float(c.real), float(c.imag)] for c in p]

        return {
            "q": self.q,
            "entries": [
                [{"num": enc(self.entries[i][j][0]), "den": enc(self.entries[i][j][1])}
                 for j in range(self.q)]
                for i in range(self.q)
            ],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "RationalMatrix":
        def dec(p):
            return np.array([complex(re, im) for re, im in p], dtype=complex)

        entries = [
            [(dec(cell["num"]), dec(cell["den"])) for cell in row]
            for row in data["entries"]
        ]
        rm = cls.from_entries(entries)
        if rm.q != data["q"]:
            raise ValueError("q field inconsistent with entry grid")
        return rm

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json(cls, s: str) -> "RationalMatrix":
        return cls.from_json_dict(json.loads(s))


@dataclass
class CoeffSeq:
    """One- or two-sided windowed sequence of q x q complex matrices.

    coeffs[k] corresponds to index offset + k; tail_bound records the
    norm of whatever was dropped beyond the window.
    """

    q: int
    coeffs: np.ndarray           # (L, q, q) complex
    offset: int = 0
    tail_bound: float = 0.0

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.ndim == 1:
            self.coeffs = self.coeffs[:, None, None]
        if self.coeffs.shape[-1] != self.q or self.coeffs.shape[-2] != self.q:
            raise ValueError("coefficient array shape does not match q")

    def __len__(self) -> int:
        return len(self.coeffs)

    def at(self, k: int) -> np.ndarray:
        """Coefficient at absolute index k (zero outside the window)."""
        i = k - self.offset
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        return np.zeros((self.q, self.q), dtype=complex)


def invert_series(s: np.ndarray, K: int) -> np.ndarray:
    """Coefficients of the multiplicative inverse of a matrix power series.

    t_0 = s_0^{-1}, t_k = -s_0^{-1} sum_{j=1..k} s_j t_{k-j}.
    """
    s = np.asarray(s, dtype=complex)
    q = s.shape[-1]
    cond = np.linalg.cond(s[0])
    if not np.isfinite(cond) or cond > 1e14:
        raise np.linalg.LinAlgError(f"leading coefficient singular (cond={cond:.2e})")
    s0i = np.linalg.inv(s[0])
    t = np.zeros((K + 1, q, q), dtype=complex)
    t[0] = s0i
    for k in range(1, K + 1):
        jmax = min(k, len(s) - 1)
        acc = np.einsum("jab,jbc->ac", s[1:jmax + 1], t[k - 1::-1][:jmax])
        t[k] = -s0i @ acc
    return t


def convolve_series(a: np.ndarray, b: np.ndarray, K: int) -> np.ndarray:
    """(a * b)_k = sum_j a_j b_{k-j} for k = 0..K; matrix-valued FFT convolution."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    n = min(len(a), K + 1)
    m = min(len(b), K + 1)
    L = 1
    while L < n + m:
        L *= 2
    fa = np.fft.fft(a[:n], L, axis=0)
    fb = np.fft.fft(b[:m], L, axis=0)
    prod = np.einsum("kab,kbc->kac", fa, fb)
    out = np.fft.ifft(prod, axis=0)[: K + 1]
    return out


def hermitian_sqrt(m: np.ndarray, herm_tol: float = 1e-12) -> np.ndarray:
    """Principal square root of a Hermitian PSD matrix via eigendecomposition.

    Eigenvalues in [-herm_tol, 0) are clamped to zero.
    """
    m = np.asarray(m, dtype=complex)
    asym = np.abs(m - m.conj().T).max()
    scale = max(np.abs(m).max(), 1e-300)
    if asym > herm_tol * max(1.0, scale):
        raise ValueError(f"matrix not Hermitian within tolerance (asymmetry {asym:.2e})")
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    if w.min() < -herm_tol * max(1.0, scale):
        raise ValueError(f"matrix not PSD (min eigenvalue {w.min():.2e})")
    return (v * np.sqrt(np.maximum(w, 0.0))) @ v.conj().T


def hermitian_inv_sqrt(m: np.ndarray, herm_tol: float = 1e-12) -> np.ndarray:
    """Inverse principal square root; requires strictly positive eigenvalues."""
    m = np.asarray(m, dtype=complex)
    asym = np.abs(m - m.conj().T).max()
    scale = max(np.abs(m).max(), 1e-300)
    if asym > herm_tol * max(1.0, scale):
        raise ValueError(f"matrix not Hermitian within tolerance (asymmetry {asym:.2e})")
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    if w.min() <= 0:
        raise np.linalg.LinAlgError(
            f"matrix singular or indefinite (min eigenvalue {w.min():.2e})"
        )
    return (v / np.sqrt(w)) @ v.conj().T


def spectral_norm(m: np.ndarray) -> float:
    """Largest singular value (the paper's matrix norm)."""
    return float(np.linalg.norm(np.asarray(m), 2))
