"""Finite prediction quantities of multivariate FARIMA processes.

Computes finite predictor coefficient matrices, finite prediction error
covariances and the partial autocorrelation function from the Fourier
coefficients of the phase function, with an independent block-Toeplitz
oracle for cross-validation.
"""
from .engine import (
    CertificateError,
    EngineError,
    PredictorEngine,
    PredictorSolution,
    RecursionState,
    hankel_apply,
)
from .factorize import (
    Factorization,
    MatrixGridSamples,
    NonConvergenceError,
    laurent_phase_ratio,
    spectral_factorize,
)
from .fractional import (
    frac_binomial,
    gamma_d_autocov,
    psi_nn,
    rho,
    tau_coeffs,
    u_n,
)
from .model import FarimaModel
from .oracle import autocov, block_levinson, oracle_pacf, oracle_solutions
from .phase import (
    PhaseSeq,
    beta_from_model,
    compute_U,
    compute_V,
    delta_diagnostics,
)
from .ratmat import (
    CoeffSeq,
    ConditionCError,
    RationalMatrix,
    hermitian_inv_sqrt,
    hermitian_sqrt,
    invert_series,
    spectral_norm,
)

__version__ = "0.1.0"

__all__ = [
    "CertificateError", "CoeffSeq", "ConditionCError", "EngineError",
    "Factorization", "FarimaModel", "MatrixGridSamples", "NonConvergenceError",
    "PhaseSeq", "PredictorEngine", "PredictorSolution", "RationalMatrix",
    "RecursionState", "autocov", "beta_from_model", "block_levinson",
    "compute_U", "compute_V", "delta_diagnostics", "frac_binomial",
    "gamma_d_autocov", "hankel_apply", "hermitian_inv_sqrt", "hermitian_sqrt",
    "invert_series", "laurent_phase_ratio", "oracle_pacf", "oracle_solutions",
    "psi_nn", "rho", "spectral_factorize", "spectral_norm", "tau_coeffs", "u_n",
]
