"""
Kiefer's phi_p criteria and the simplicial functionals Phi_k.

Phi_k(M) = (k + 1) / k! * e_k(eigenvalues of M) is the expected squared volume
of a random k-simplex whose vertices are i.i.d. with covariance M. Both families
act on the spectrum only, so every function takes a :class:`Spectrum`.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import NotPSD, ParameterError
from .spectral import (
    REJECT,
    EigenFloor,
    Spectrum,
    charpoly_coeffs,
    elementary_symmetric,
    leave_one_out_elementary,
    powered_eigenvalues,
    symmetric_eigen,
)


def check_psd(spec: Spectrum) -> None:
    if spec.lambda_min < -spec.rank_tol:
        raise NotPSD(
            f"matrix is not positive semidefinite (smallest eigenvalue {spec.lambda_min:.3g})"
        )


def check_k(k, d: int) -> int:
    if isinstance(k, bool) or int(k) != k or not 1 <= k <= d:
        raise ParameterError(f"k must be an integer in 1..{d}, got {k!r}")
    return int(k)


def simplicial_constant(k: int) -> float:
    """(k + 1) / k!"""
    return (k + 1) / math.factorial(k)


def phi_p(spec: Spectrum, p: float) -> float:
    """Kiefer's criterion phi_p of a PSD matrix.

    ``p = inf`` gives lambda_max, ``p = -inf`` lambda_min, ``p = 0`` det^(1/d);
    any other p gives ((1/d) tr M^p)^(1/p), where for p > 0 only eigenvalues
    above the rank tolerance contribute. For p <= 0 a numerically singular
    matrix has phi_p = 0.
    """
    check_psd(spec)
    p = float(p)
    if math.isnan(p):
        raise ParameterError("p must not be NaN")
    lam = spec.nonnegative()
    d = spec.dim
    if p == math.inf:
        return float(lam[0])
    if p == -math.inf:
        return float(lam[-1])
    if p <= 0 and spec.rank < d:
        return 0.0
    if p == 0:
        return float(np.exp(np.mean(np.log(lam))))
    pos = lam[lam > 0]
    return float((np.sum(pos**p) / d) ** (1.0 / p))


def log_phi_p(spec: Spectrum, p: float) -> float:
    """log phi_p, computed in log space for p = 0."""
    check_psd(spec)
    if p == 0:
        if spec.rank < spec.dim:
            return -math.inf
        return float(np.mean(np.log(spec.eigenvalues)))
    value = phi_p(spec, p)
    return math.log(value) if value > 0 else -math.inf


def Phi_k(spec: Spectrum, k: int) -> float:
    """Simplicial dispersion (k + 1) / k! * e_k(eigenvalues).

    Zero exactly when the numerical rank is below k.
    """
    check_psd(spec)
    k = check_k(k, spec.dim)
    e = elementary_symmetric(spec.nonnegative())
    return float(simplicial_constant(k) * e[k])


def log_Phi_k(spec: Spectrum, k: int) -> float:
    value = Phi_k(spec, k)
    return math.log(value) if value > 0 else -math.inf


def grad_Phi_k(M, spec: Spectrum, k: int) -> np.ndarray:
    """Gradient of Phi_k at M.

    In the eigenbasis of M the gradient is diagonal with entries
    (k + 1)/k! * e_{k-1}(spectrum without lambda_i); each entry is a sum of
    nonnegative products, so the result is PSD with no cancellation. The
    polynomial form in :func:`grad_Phi_k_horner` is algebraically identical but
    loses all accuracy for large k on spectra with a wide spread.

    ``M`` is accepted for signature compatibility with the Horner form; only
    the spectrum is used.
    """
    check_psd(spec)
    k = check_k(k, spec.dim)
    loo = leave_one_out_elementary(spec.nonnegative())
    return simplicial_constant(k) * spec.synthesize(loo[:, k - 1])


def grad_Phi_k_horner(M, spec: Spectrum, k: int) -> np.ndarray:
    """(-1)^(k-1) (k+1)/k! (M^(k-1) + c_2 M^(k-2) + ... + c_k I), by Horner in M."""
    check_psd(spec)
    k = check_k(k, spec.dim)
    M = np.asarray(M, dtype=float)
    c = charpoly_coeffs(spec)
    eye = np.eye(spec.dim)
    G = eye.copy()
    for j in range(1, k):
        G = G @ M + c[j] * eye
    G *= (-1.0) ** (k - 1) * simplicial_constant(k)
    return 0.5 * (G + G.T)


def grad_log_Phi_k(spec: Spectrum, k: int) -> np.ndarray:
    """grad Phi_k / Phi_k, without forming Phi_k's constant.

    Entry i in the eigenbasis is e_{k-1}(lambda without lambda_i) / e_k(lambda).
    Returns an array of NaN-free values only when rank >= k; callers check.
    """
    check_psd(spec)
    k = check_k(k, spec.dim)
    lam = spec.nonnegative()
    e_k = elementary_symmetric(lam)[k]
    loo = leave_one_out_elementary(lam)[:, k - 1]
    return spec.synthesize(loo / e_k)


def trace_power(spec: Spectrum, p: float, floor_policy: EigenFloor = REJECT) -> float:
    """tr(M^p) with the convention tr(M^0) = d."""
    if p == 0:
        return float(spec.dim)
    if p > 0:
        lam = spec.nonnegative()
        return float(np.sum(lam[lam > 0] ** p))
    return float(np.sum(powered_eigenvalues(spec, p, floor_policy)))


def grad_phi_p_normalized(spec: Spectrum, p: float, floor_policy: EigenFloor = REJECT) -> np.ndarray:
    """grad phi_p(M) / phi_p(M) = M^(p-1) / tr(M^p).

    This is also the gradient of log phi_p. For p < 1 the power p - 1 is
    negative and goes through ``floor_policy``. Under the clamp policy the
    denominator is computed from the clamped spectrum so that the result is
    the exact normalized gradient of the clamped matrix.
    """
    check_psd(spec)
    p = float(p)
    if not math.isfinite(p):
        raise ParameterError("p must be finite for the phi_p gradient")
    if float(p - 1).is_integer() and p >= 1:
        lam = spec.nonnegative()
    else:
        lam = floor_policy.apply(spec)
    denom = float(spec.dim) if p == 0 else float(np.sum(lam**p))
    return spec.synthesize(lam ** (p - 1) / denom)


def phi_p_matrix(M, p: float) -> float:
    return phi_p(symmetric_eigen(M), p)


def Phi_k_matrix(M, k: int) -> float:
    return Phi_k(symmetric_eigen(M), k)
