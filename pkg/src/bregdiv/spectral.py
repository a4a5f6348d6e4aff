"""
Symmetric-matrix numerical kernel.

Eigendecomposition with a fixed contract (descending eigenvalues, orthonormal
eigenvectors), elementary symmetric polynomials of a spectrum, characteristic
polynomial coefficients and fractional matrix powers with an explicit policy
for small eigenvalues.

Symmetric matrices are plain ``numpy`` arrays; :func:`as_symmetric` is the
validating constructor.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import EigenSolverError, NegativeEigenvalueBelowFloor, ParameterError

_EPS = np.finfo(float).eps

# inputs whose asymmetry exceeds this (relative) are refused, not symmetrized
_ASYMMETRY_TOL = 1e-8


def as_symmetric(M, name="matrix") -> np.ndarray:
    """Validate a square finite matrix and return its symmetric part (M + M.T) / 2."""
    M = np.array(M, dtype=float, copy=True)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise ParameterError(f"{name} must be a non-empty square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ParameterError(f"{name} has non-finite entries")
    scale = max(1.0, float(np.abs(M).max()))
    if np.abs(M - M.T).max() > _ASYMMETRY_TOL * scale:
        raise ParameterError(f"{name} is not symmetric")
    return 0.5 * (M + M.T)


def rank_tolerance(eigenvalues) -> float:
    """Numerical-rank threshold d * eps * max(lambda_max, 1)."""
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    d = eigenvalues.shape[-1]
    return d * _EPS * max(float(np.max(eigenvalues)), 1.0)


@dataclass(frozen=True)
class Spectrum:
    """Eigen-pairs of a symmetric matrix, eigenvalues sorted in descending order."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    source_scale: float

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    @cached_property
    def rank_tol(self) -> float:
        return rank_tolerance(self.eigenvalues)

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.eigenvalues > self.rank_tol))

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[-1])

    def nonnegative(self) -> np.ndarray:
        """Eigenvalues with everything at or below the rank tolerance set to 0."""
        lam = self.eigenvalues.copy()
        lam[lam <= self.rank_tol] = 0.0
        return lam

    def synthesize(self, values) -> np.ndarray:
        """U diag(values) U^T, symmetrized."""
        U = self.eigenvectors
        out = (U * np.asarray(values, dtype=float)) @ U.T
        return 0.5 * (out + out.T)

    def matrix(self) -> np.ndarray:
        return self.synthesize(self.eigenvalues)


def symmetric_eigen(M) -> Spectrum:
    """Eigendecomposition of a symmetric matrix.

    Parameters
    ----------
    M : array_like, shape (d, d)
        Symmetric matrix; it is validated and symmetrized first.

    Returns
    -------
    Spectrum
        Eigenvalues in descending order with matching orthonormal eigenvectors
        (columns).

    Raises
    ------
    EigenSolverError
        If LAPACK fails to converge. The message carries the matrix norm and
        diagonal range so the input can be diagnosed.
    """
    M = as_symmetric(M)
    try:
        lam, U = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:
        diag = np.diag(M)
        raise EigenSolverError(
            f"symmetric eigensolver did not converge (d={M.shape[0]}, "
            f"frobenius norm={np.linalg.norm(M):.6g}, "
            f"diagonal range=[{diag.min():.6g}, {diag.max():.6g}]): {exc}"
        ) from exc
    lam = lam[::-1].copy()
    U = U[:, ::-1].copy()
    scale = float(np.abs(lam).max()) if lam.size else 0.0
    return Spectrum(eigenvalues=lam, eigenvectors=U, source_scale=scale)


def elementary_symmetric(eigs) -> np.ndarray:
    """Coefficients (e_0, ..., e_d) of prod_i (1 + lambda_i t).

    Works on the last axis, so a stack of spectra of shape (..., d) gives
    (..., d + 1). Uses the one-pass product recurrence
    ``e_j <- e_j + lambda_i e_{j-1}``.
    """
    eigs = np.asarray(eigs, dtype=float)
    d = eigs.shape[-1]
    e = np.zeros(eigs.shape[:-1] + (d + 1,))
    e[..., 0] = 1.0
    for i in range(d):
        lam = eigs[..., i, None]
        # slices on the right are evaluated before assignment: j runs "descending"
        e[..., 1 : i + 2] = e[..., 1 : i + 2] + lam * e[..., : i + 1]
    return e


def leave_one_out_elementary(eigs) -> np.ndarray:
    """e_j of the spectrum with the i-th eigenvalue removed.

    Returns shape (..., d, d): entry [..., i, j] is e_j(lambda without lambda_i),
    for j = 0..d-1.
    """
    eigs = np.asarray(eigs, dtype=float)
    d = eigs.shape[-1]
    keep = ~np.eye(d, dtype=bool)
    reduced = np.broadcast_to(eigs[..., None, :], eigs.shape[:-1] + (d, d))[..., keep]
    reduced = reduced.reshape(eigs.shape[:-1] + (d, d - 1))
    return elementary_symmetric(reduced)


def charpoly_coeffs(spec: Spectrum) -> np.ndarray:
    """Coefficients (c_1, ..., c_{d+1}) of det(lambda I - M), c_1 = 1."""
    e = elementary_symmetric(spec.eigenvalues)
    signs = (-1.0) ** np.arange(e.shape[0])
    return signs * e


@dataclass(frozen=True)
class EigenFloor:
    """How fractional / negative powers treat small eigenvalues.

    ``reject`` refuses any eigenvalue at or below the numerical-rank tolerance;
    ``clamp`` raises eigenvalues to ``floor`` (default 1e-12 * max(lambda_max, 1)).
    """

    kind: str = "reject"
    floor: float | None = None

    def __post_init__(self):
        if self.kind not in ("reject", "clamp"):
            raise ParameterError(f"unknown eigenvalue floor policy {self.kind!r}")
        if self.floor is not None and not self.floor > 0:
            raise ParameterError("clamp floor must be positive")

    @classmethod
    def clamp(cls, floor: float | None = None) -> "EigenFloor":
        return cls("clamp", floor)

    def apply(self, spec: Spectrum) -> np.ndarray:
        lam = spec.eigenvalues
        if self.kind == "reject":
            tol = spec.rank_tol
            if np.any(lam <= tol):
                raise NegativeEigenvalueBelowFloor(
                    f"eigenvalue {lam.min():.3g} is at or below the floor {tol:.3g}"
                )
            return lam
        floor = self.floor if self.floor is not None else 1e-12 * max(spec.lambda_max, 1.0)
        return np.maximum(lam, floor)


REJECT = EigenFloor("reject")


def _is_nonneg_integer(q) -> bool:
    return float(q).is_integer() and q >= 0


def powered_eigenvalues(spec: Spectrum, q: float, floor_policy: EigenFloor = REJECT) -> np.ndarray:
    """lambda_i ** q after the floor policy (skipped for integer q >= 0)."""
    if _is_nonneg_integer(q):
        return spec.eigenvalues ** int(q)
    return floor_policy.apply(spec) ** q


def fractional_power(spec: Spectrum, q: float, floor_policy: EigenFloor = REJECT) -> np.ndarray:
    """M ** q computed as U diag(lambda ** q) U^T.

    Integer ``q >= 0`` bypasses the floor; every other exponent goes through
    ``floor_policy`` and raises :class:`NegativeEigenvalueBelowFloor` under
    ``reject`` when an eigenvalue is not safely positive.
    """
    return spec.synthesize(powered_eigenvalues(spec, q, floor_policy))
