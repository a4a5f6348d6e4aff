"""
Closed-form distances between normal distributions given by mean and covariance.

Classical distances (symmetrized Kullback-Leibler, Jensen-Shannon,
Bhattacharyya), Jeffreys-Bregman divergences of log phi_p and log Phi_k, and
the generic Burbea-Rao / Jeffreys-Bregman constructions for any concave
criterion of the covariance matrix.

All matrix inverses and roots go through the eigendecomposition, so
singularity is detected in one place (the eigenvalue floor).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable

import numpy as np

from . import design_criteria as dc
from .errors import (
    BadExponent,
    DimensionMismatch,
    NegativeEigenvalueBelowFloor,
    NumericalConsistencyError,
    ParameterError,
    RankDeficient,
    SingularCovariance,
    UnsupportedForSummaries,
)
from .spectral import REJECT, EigenFloor, Spectrum, as_symmetric, fractional_power, symmetric_eigen

# divergences within this (scaled) distance below zero are rounding noise
CLAMP_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class GaussianSummary:
    """Mean vector and covariance matrix of a d-dimensional distribution."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        if mean.size == 0 or not np.all(np.isfinite(mean)):
            raise ParameterError("mean must be a non-empty finite vector")
        cov = as_symmetric(np.atleast_2d(self.cov), "covariance")
        if cov.shape[0] != mean.size:
            raise ParameterError(
                f"mean has length {mean.size} but covariance is {cov.shape[0]}x{cov.shape[1]}"
            )
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        dc.check_psd(self.spectrum)

    @property
    def dim(self) -> int:
        return self.mean.size

    @cached_property
    def spectrum(self) -> Spectrum:
        return symmetric_eigen(self.cov)

    @classmethod
    def standard(cls, d: int) -> "GaussianSummary":
        return cls(np.zeros(d), np.eye(d))

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "cov": self.cov.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "GaussianSummary":
        try:
            return cls(data["mean"], data["cov"])
        except KeyError as exc:
            raise ParameterError(f"summary is missing field {exc.args[0]!r}") from None


class Family(str, Enum):
    KL = "kl"
    JS = "js"
    BHATTACHARYYA = "bhattacharyya"
    LOGPHIP_JB = "logphi-p-jb"
    LOGPHIP_BR = "logphi-p-br"
    LOGSIMPLICIAL_JB = "logsimplicial-jb"
    LOGSIMPLICIAL_BR = "logsimplicial-br"
    ENERGY = "energy"

    @property
    def parameter_name(self) -> str | None:
        if self in (Family.LOGPHIP_JB, Family.LOGPHIP_BR):
            return "p"
        if self in (Family.LOGSIMPLICIAL_JB, Family.LOGSIMPLICIAL_BR):
            return "k"
        if self is Family.ENERGY:
            return "delta"
        return None


def check_p(p, allow_negative: bool = False) -> float:
    p = float(p)
    if not math.isfinite(p) or p >= 1:
        raise ParameterError(f"p must be finite and < 1, got {p}")
    if p < 0 and not allow_negative:
        raise ParameterError(
            f"negative p ({p}) is disabled: these criteria are dominated by the "
            "smallest eigenvalues; pass allow_negative_p=True to use them anyway"
        )
    return p


@dataclass(frozen=True)
class DistanceSpec:
    """A distance family together with its parameter (p, k or delta)."""

    family: Family
    param: float | int | None = None
    allow_negative_p: bool = False
    floor: EigenFloor = field(default=REJECT, compare=False)

    def __post_init__(self):
        family = Family(self.family)
        object.__setattr__(self, "family", family)
        name = family.parameter_name
        if name is None:
            if self.param is not None:
                raise ParameterError(f"family {family.value} takes no parameter")
            return
        if self.param is None:
            raise ParameterError(f"family {family.value} needs parameter {name}")
        if name == "p":
            object.__setattr__(self, "param", check_p(self.param, self.allow_negative_p))
        elif name == "k":
            k = self.param
            if isinstance(k, bool) or float(k) != int(k) or int(k) < 1:
                raise ParameterError(f"k must be a positive integer, got {k!r}")
            object.__setattr__(self, "param", int(k))
            if int(k) == 1:
                warnings.warn(
                    "k = 1 gives log of twice the trace, which is not strictly concave; "
                    "the divergence may not separate distributions with proportional covariances",
                    stacklevel=3,
                )
        else:
            delta = float(self.param)
            if not 0 < delta <= 2:
                raise BadExponent(f"energy exponent must lie in (0, 2], got {delta}")
            object.__setattr__(self, "param", delta)

    def check_dim(self, d: int) -> None:
        if self.family.parameter_name == "k" and self.param > d:
            raise ParameterError(f"k = {self.param} exceeds the dimension d = {d}")

    def label(self) -> str:
        if self.param is None:
            return self.family.value
        return f"{self.family.value}({self.family.parameter_name}={self.param:g})"


def _clamp(value: float, scale: float = 0.0) -> float:
    """Zero out tiny negative values; refuse clearly negative ones."""
    if value >= 0:
        return float(value)
    if value >= -CLAMP_TOL * (1.0 + abs(value) + scale):
        return 0.0
    raise NumericalConsistencyError(f"divergence evaluated to {value:.3g} < 0")


def _check_dims(g1: GaussianSummary, g2: GaussianSummary) -> None:
    if g1.dim != g2.dim:
        raise DimensionMismatch(f"summaries have dimensions {g1.dim} and {g2.dim}")


def _power(g: GaussianSummary, q: float, argument: str, floor: EigenFloor = REJECT) -> np.ndarray:
    try:
        return fractional_power(g.spectrum, q, floor)
    except NegativeEigenvalueBelowFloor as exc:
        raise SingularCovariance(f"covariance of {argument} is singular: {exc}", argument) from None


def _logdet(spec: Spectrum, argument: str) -> float:
    lam = spec.eigenvalues
    if np.any(lam <= spec.rank_tol):
        raise SingularCovariance(f"covariance of {argument} is singular", argument)
    return float(np.sum(np.log(lam)))


def _mean_gap(g1, g2) -> np.ndarray:
    return g2.mean - g1.mean


def kl_symmetrized(g1: GaussianSummary, g2: GaussianSummary) -> float:
    """Symmetrized Kullback-Leibler divergence (KL(1||2) + KL(2||1)) / 2."""
    _check_dims(g1, g2)
    inv1 = _power(g1, -1, "g1")
    inv2 = _power(g2, -1, "g2")
    gap = _mean_gap(g1, g2)
    tr = np.sum(inv1 * g2.cov) + np.sum(inv2 * g1.cov)
    quad = gap @ (inv1 + inv2) @ gap
    d = g1.dim
    return _clamp(0.25 * tr + 0.25 * quad - d / 2, scale=d)


def _log_det_ratio(g1, g2) -> tuple[float, np.ndarray]:
    """log det((S1+S2)/2) - (log det S1 + log det S2)/2, and (S1+S2)^-1."""
    mix = symmetric_eigen(0.5 * (g1.cov + g2.cov))
    ld1 = _logdet(g1.spectrum, "g1")
    ld2 = _logdet(g2.spectrum, "g2")
    ldm = _logdet(mix, "mixture")
    inv_sum = mix.synthesize(0.5 / mix.eigenvalues)
    return ldm - 0.5 * (ld1 + ld2), inv_sum


def jensen_shannon(g1: GaussianSummary, g2: GaussianSummary) -> float:
    _check_dims(g1, g2)
    ratio, inv_sum = _log_det_ratio(g1, g2)
    gap = _mean_gap(g1, g2)
    quad = float(gap @ inv_sum @ gap)
    return _clamp(0.5 * ratio + 0.5 * math.log1p(0.5 * quad), scale=g1.dim)


def bhattacharyya(g1: GaussianSummary, g2: GaussianSummary) -> float:
    """Bhattacharyya distance -log of the Hellinger integral, normal closed form."""
    _check_dims(g1, g2)
    ratio, inv_sum = _log_det_ratio(g1, g2)
    gap = _mean_gap(g1, g2)
    quad = float(gap @ inv_sum @ gap)
    return _clamp(0.5 * ratio + 0.25 * quad, scale=g1.dim)


def jb_generic(
    g1: GaussianSummary,
    g2: GaussianSummary,
    gradient: Callable[[np.ndarray], np.ndarray],
) -> float:
    """Jeffreys-Bregman divergence of a differentiable concave criterion.

    ``gradient`` maps a covariance matrix to the gradient of the criterion
    there. Returns

        1/2 [ tr{(G1 - G2)(S2 - S1)} + gap^T (G1 + G2) gap ].
    """
    _check_dims(g1, g2)
    G1 = np.asarray(gradient(g1.cov), dtype=float)
    G2 = np.asarray(gradient(g2.cov), dtype=float)
    gap = _mean_gap(g1, g2)
    dS = g2.cov - g1.cov
    value = 0.5 * (np.sum((G1 - G2) * dS) + gap @ (G1 + G2) @ gap)
    scale = abs(np.sum(G1 * g2.cov)) + abs(np.sum(G2 * g1.cov))
    return _clamp(float(value), scale=scale)


def mixture_covariance(g1: GaussianSummary, g2: GaussianSummary) -> np.ndarray:
    """Covariance of the equal-weight mixture: (S1+S2)/2 + gap gap^T / 4."""
    gap = _mean_gap(g1, g2)
    return 0.5 * (g1.cov + g2.cov) + 0.25 * np.outer(gap, gap)


def br_divergence(
    g1: GaussianSummary,
    g2: GaussianSummary,
    criterion: Callable[[np.ndarray], float],
) -> float:
    """Burbea-Rao divergence Phi(var of the mixture) - (Phi(S1) + Phi(S2)) / 2."""
    _check_dims(g1, g2)
    c1 = float(criterion(g1.cov))
    c2 = float(criterion(g2.cov))
    cm = float(criterion(mixture_covariance(g1, g2)))
    return _clamp(cm - 0.5 * (c1 + c2), scale=abs(cm))


# criteria and gradients for the generic constructions


def log_phi_p_criterion(p: float) -> Callable[[np.ndarray], float]:
    def criterion(M):
        value = dc.log_phi_p(symmetric_eigen(M), p)
        if value == -math.inf:
            raise SingularCovariance(f"log phi_{p:g} is -inf on a singular matrix")
        return value

    return criterion


def log_phi_p_gradient(p: float, floor: EigenFloor = REJECT) -> Callable[[np.ndarray], np.ndarray]:
    return lambda M: dc.grad_phi_p_normalized(symmetric_eigen(M), p, floor)


def log_Phi_k_criterion(k: int) -> Callable[[np.ndarray], float]:
    def criterion(M):
        value = dc.log_Phi_k(symmetric_eigen(M), k)
        if value == -math.inf:
            raise RankDeficient(f"matrix has rank below k = {k}", k)
        return value

    return criterion


def log_Phi_k_gradient(k: int) -> Callable[[np.ndarray], np.ndarray]:
    def gradient(M):
        spec = symmetric_eigen(M)
        if dc.Phi_k(spec, k) <= 0:
            raise RankDeficient(f"matrix has rank below k = {k}", k)
        return dc.grad_log_Phi_k(spec, k)

    return gradient


def jb_log_phi_p(
    g1: GaussianSummary,
    g2: GaussianSummary,
    p: float,
    floor_policy: EigenFloor = REJECT,
    allow_negative_p: bool = False,
) -> float:
    """Jeffreys-Bregman divergence of log phi_p.

    Equal to 1/2 [tr(S1^(p-1) S2)/tr(S1^p) + tr(S2^(p-1) S1)/tr(S2^p)]
    + 1/2 gap^T (S1^(p-1)/tr(S1^p) + S2^(p-1)/tr(S2^p)) gap - 1, with
    tr(M^0) = d. At p = 0 this is 2/d times the symmetrized KL divergence.
    """
    _check_dims(g1, g2)
    p = check_p(p, allow_negative_p)
    grads = []
    for g, name in ((g1, "g1"), (g2, "g2")):
        try:
            grads.append(dc.grad_phi_p_normalized(g.spectrum, p, floor_policy))
        except NegativeEigenvalueBelowFloor as exc:
            raise SingularCovariance(f"covariance of {name} is singular: {exc}", name) from None
    G1, G2 = grads
    gap = _mean_gap(g1, g2)
    value = 0.5 * (np.sum(G1 * g2.cov) + np.sum(G2 * g1.cov)) + 0.5 * gap @ (G1 + G2) @ gap - 1.0
    return _clamp(float(value), scale=1.0)


def jb_log_simplicial(g1: GaussianSummary, g2: GaussianSummary, k: int) -> float:
    """Jeffreys-Bregman divergence of log Phi_k (the k-th simplicial distance).

    Requires both covariances to have numerical rank >= k.
    """
    _check_dims(g1, g2)
    k = dc.check_k(k, g1.dim)
    grads = []
    for g, name in ((g1, "g1"), (g2, "g2")):
        if dc.Phi_k(g.spectrum, k) <= 0:
            raise RankDeficient(f"covariance of {name} has rank below k = {k}", k, name)
        grads.append(dc.grad_log_Phi_k(g.spectrum, k))
    G1, G2 = grads
    gap = _mean_gap(g1, g2)
    value = 0.5 * (np.sum(G1 * g2.cov) + np.sum(G2 * g1.cov)) + 0.5 * gap @ (G1 + G2) @ gap - k
    return _clamp(float(value), scale=float(k))


def br_log_phi_p(g1: GaussianSummary, g2: GaussianSummary, p: float, allow_negative_p: bool = False) -> float:
    p = check_p(p, allow_negative_p)
    try:
        return br_divergence(g1, g2, log_phi_p_criterion(p))
    except SingularCovariance as exc:
        raise SingularCovariance(f"log phi_{p:g} undefined: {exc}") from None


def br_log_simplicial(g1: GaussianSummary, g2: GaussianSummary, k: int) -> float:
    _check_dims(g1, g2)
    k = dc.check_k(k, g1.dim)
    for g, name in ((g1, "g1"), (g2, "g2")):
        if dc.Phi_k(g.spectrum, k) <= 0:
            raise RankDeficient(f"covariance of {name} has rank below k = {k}", k, name)
    return br_divergence(g1, g2, log_Phi_k_criterion(k))


def standardize_pair(g1: GaussianSummary, g2: GaussianSummary) -> tuple[GaussianSummary, GaussianSummary]:
    """Map (g1, g2) to (N(0, I), g2 expressed in g1's whitened coordinates)."""
    _check_dims(g1, g2)
    W = _power(g1, -0.5, "g1")
    return (
        GaussianSummary.standard(g1.dim),
        GaussianSummary(W @ _mean_gap(g1, g2), W @ g2.cov @ W),
    )


def evaluate(spec: DistanceSpec, g1: GaussianSummary, g2: GaussianSummary) -> float:
    """Dispatch a :class:`DistanceSpec` to the matching closed form."""
    _check_dims(g1, g2)
    spec.check_dim(g1.dim)
    f = spec.family
    if f is Family.KL:
        return kl_symmetrized(g1, g2)
    if f is Family.JS:
        return jensen_shannon(g1, g2)
    if f is Family.BHATTACHARYYA:
        return bhattacharyya(g1, g2)
    if f is Family.LOGPHIP_JB:
        return jb_log_phi_p(g1, g2, spec.param, spec.floor, spec.allow_negative_p)
    if f is Family.LOGPHIP_BR:
        return br_log_phi_p(g1, g2, spec.param, spec.allow_negative_p)
    if f is Family.LOGSIMPLICIAL_JB:
        return jb_log_simplicial(g1, g2, spec.param)
    if f is Family.LOGSIMPLICIAL_BR:
        return br_log_simplicial(g1, g2, spec.param)
    raise UnsupportedForSummaries(
        "the energy distance depends on the whole distribution; it needs samples, not summaries"
    )
