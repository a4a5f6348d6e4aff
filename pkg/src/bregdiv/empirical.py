"""
Sample-level estimators.

Sample moments, the unbiased correction factor for Phi_k of a sample
covariance, squared simplex volumes, a Monte Carlo estimate of the expected
squared simplex volume, and the generalized energy distance between two
samples.

A sample is an (n, d) array with one observation per row.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, NamedTuple

import numpy as np
from scipy.spatial.distance import cdist

from . import design_criteria as dc
from .errors import (
    BadExponent,
    DimensionMismatch,
    NumericalConsistencyError,
    ParameterError,
    SampleTooSmall,
    TooFewObservations,
)
from .gaussian_divergences import DistanceSpec, Family, GaussianSummary, evaluate

# Monte Carlo trials are drawn in fixed-size blocks; block b always uses
# stream b, so the estimate does not depend on the number of workers.
MC_BLOCK = 1 << 15


def as_sample(x, name="sample") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ParameterError(f"{name} must be a 2-D array (n observations x d), got ndim={x.ndim}")
    if x.shape[0] < 2:
        raise TooFewObservations(f"{name} has {x.shape[0]} observation(s); at least 2 are needed")
    if not np.all(np.isfinite(x)):
        raise ParameterError(f"{name} has non-finite entries")
    return x


def sample_moments(x) -> GaussianSummary:
    """Sample mean and unbiased (divisor n - 1) sample covariance."""
    x = as_sample(x)
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (x.shape[0] - 1)
    return GaussianSummary(mean, 0.5 * (cov + cov.T))


def unbiased_phi_k_factor(n: int, k: int) -> float:
    """(n - k - 1)! (n - 1)^k / (n - 1)!, evaluated through log-gamma.

    Multiplying Phi_k of the sample covariance by this factor gives an
    unbiased estimator of Phi_k of the population covariance.
    """
    n, k = int(n), int(k)
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if n < k + 2:
        raise SampleTooSmall(f"the unbiased Phi_{k} estimator needs n >= {k + 2}, got n = {n}")
    log_factor = math.lgamma(n - k) + k * math.log(n - 1) - math.lgamma(n)
    return math.exp(log_factor)


def simplex_squared_volume(points) -> float:
    """Squared volume of the simplex spanned by the k + 1 rows of ``points``.

    det(G) / (k!)^2 with G the Gram matrix of the edge vectors from the first
    vertex. The determinant is the squared product of the R diagonal of a QR
    factorization of the edges, which is nonnegative by construction.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[0] < 2:
        raise ParameterError("points must be a (k + 1) x d array with k >= 1")
    k = points.shape[0] - 1
    d = points.shape[1]
    if k > d:
        raise DimensionMismatch(f"a {k}-simplex does not fit in dimension {d}")
    return float(_squared_volumes(points[None])[0])


def _squared_volumes(vertices: np.ndarray) -> np.ndarray:
    """Batched squared volumes; ``vertices`` has shape (t, k + 1, d)."""
    k = vertices.shape[1] - 1
    edges = vertices[:, 1:, :] - vertices[:, :1, :]
    R = np.linalg.qr(np.swapaxes(edges, 1, 2), mode="r")
    diag = np.diagonal(R, axis1=1, axis2=2)
    return np.prod(diag**2, axis=1) / math.factorial(k) ** 2


class MonteCarloEstimate(NamedTuple):
    value: float
    stderr: float
    trials: int


def gaussian_sampler(mean, cov) -> Callable[[np.random.Generator, int], np.ndarray]:
    """Sampler drawing ``size`` rows from N(mean, cov); cov may be singular."""
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    lam, U = np.linalg.eigh(0.5 * (cov + cov.T))
    root = U * np.sqrt(np.clip(lam, 0.0, None))

    def sample(rng, size):
        return mean + rng.standard_normal((size, mean.size)) @ root.T

    return sample


def mc_simplicial_dispersion(
    sampler: Callable[[np.random.Generator, int], np.ndarray],
    k: int,
    trials: int,
    seed: int,
    workers: int = 1,
) -> MonteCarloEstimate:
    """Monte Carlo average of the squared volume of random k-simplices.

    Each trial draws k + 1 fresh i.i.d. vertices from ``sampler(rng, size)``
    (which returns a (size, d) array). By the simplex-volume identity the
    expectation equals Phi_k of the sampled distribution's covariance.

    Trials are split into blocks of ``MC_BLOCK``; block b uses the b-th child
    of ``SeedSequence(seed)``, so the result is the same for any ``workers``.
    """
    k = int(k)
    trials = int(trials)
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    if k < 1:
        raise ParameterError("k must be >= 1")
    n_blocks = -(-trials // MC_BLOCK)
    seeds = np.random.SeedSequence(seed).spawn(n_blocks)
    sizes = [MC_BLOCK] * (n_blocks - 1) + [trials - MC_BLOCK * (n_blocks - 1)]

    def block(b):
        rng = np.random.default_rng(seeds[b])
        draws = np.asarray(sampler(rng, sizes[b] * (k + 1)), dtype=float)
        d = draws.shape[1]
        if k > d:
            raise DimensionMismatch(f"a {k}-simplex does not fit in dimension {d}")
        vols = _squared_volumes(draws.reshape(sizes[b], k + 1, d))
        return vols.sum(), (vols**2).sum()

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(block, range(n_blocks)))
    else:
        parts = [block(b) for b in range(n_blocks)]
    # summation in block order keeps the result bit-identical
    s1 = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    mean = s1 / trials
    var = max(s2 / trials - mean**2, 0.0) * trials / max(trials - 1, 1)
    return MonteCarloEstimate(float(mean), float(math.sqrt(var / trials)), trials)


def energy_distance(x, y, delta: float = 1.0) -> float:
    """Generalized energy distance between two samples (V-statistic).

    2/(nm) sum ||x_i - y_j||^delta - 1/n^2 sum ||x_i - x_i'||^delta
    - 1/m^2 sum ||y_j - y_j'||^delta, for delta in (0, 2].
    """
    delta = float(delta)
    if not 0 < delta <= 2:
        raise BadExponent(f"energy exponent must lie in (0, 2], got {delta}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if y.ndim == 1:
        y = y[:, None]
    if x.shape[1] != y.shape[1]:
        raise DimensionMismatch(f"samples have dimensions {x.shape[1]} and {y.shape[1]}")
    if len(x) == 0 or len(y) == 0:
        raise TooFewObservations("energy distance needs non-empty samples")
    xy = cdist(x, y) ** delta
    xx = cdist(x, x) ** delta
    yy = cdist(y, y) ** delta
    value = 2 * xy.mean() - xx.mean() - yy.mean()
    if value < 0:
        if value < -1e-12 * (1 + xy.mean()):
            raise NumericalConsistencyError(f"energy distance evaluated to {value:.3g}")
        value = 0.0
    return float(value)


def corrected_Phi_k(x, k: int) -> float:
    """Unbiased estimate of Phi_k(covariance) from a sample."""
    x = as_sample(x)
    g = sample_moments(x)
    return unbiased_phi_k_factor(x.shape[0], k) * dc.Phi_k(g.spectrum, k)


def sample_distance(spec: DistanceSpec, x, y) -> float:
    """Distance between two samples: energy on the raw data, otherwise the
    closed form applied to the sample moments."""
    if spec.family is Family.ENERGY:
        return energy_distance(x, y, spec.param)
    return evaluate(spec, sample_moments(x), sample_moments(y))
