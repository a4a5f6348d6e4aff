"""
Resampling two-sample test of equal means and covariances.

From one pair of samples (X, Y) the pipeline builds N pseudo pairs under the
null (points drawn from the merged pool) and N under the alternative (points
drawn from X and Y separately), computes a distance on each, and uses the two
empirical distributions to

* draw the ROC curve and its AUC,
* pick the k (log Phi_k) or p (log phi_p) with the largest AUC,
* set the critical value tau as an upper quantile of the null distances.

Randomness: pseudo pair i under hypothesis h always uses the stream
``SeedSequence(master_seed, spawn_key=(h, i))``, and the final trimming uses
its own stream, so every result is a pure function of the inputs and the seed.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .batch import PairMoments, batch_moments
from .empirical import as_sample, energy_distance
from .errors import (
    AllParametersInfeasible,
    DimensionMismatch,
    EmptyInput,
    NumericalError,
    ParameterError,
    SchemeInfeasible,
)
from .gaussian_divergences import DistanceSpec, Family

H0, H1, TRIM, SIM = 0, 1, 2, 3

# fraction of failed pseudo-pair evaluations above which a run is abandoned
MAX_FAILURE_FRACTION = 0.10

GRID_FAMILIES = (
    Family.LOGPHIP_JB,
    Family.LOGPHIP_BR,
    Family.LOGSIMPLICIAL_JB,
    Family.LOGSIMPLICIAL_BR,
)


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


@dataclass(frozen=True)
class SamplingScheme:
    """``subsample``: draw without replacement, dropping r points per sample.
    ``bootstrap``: draw with replacement at full size."""

    kind: str = "subsample"
    r: int = 5

    def __post_init__(self):
        if self.kind not in ("subsample", "bootstrap"):
            raise ParameterError(f"unknown sampling scheme {self.kind!r}")
        if self.kind == "subsample" and (int(self.r) != self.r or self.r < 0):
            raise ParameterError(f"r must be a nonnegative integer, got {self.r!r}")

    @classmethod
    def without_replacement(cls, r: int = 5) -> "SamplingScheme":
        return cls("subsample", r)

    @classmethod
    def bootstrap(cls) -> "SamplingScheme":
        return cls("bootstrap", 0)

    def sizes(self, n: int, m: int) -> tuple[int, int]:
        if self.kind == "bootstrap":
            return n, m
        if not self.r < min(n, m) / 2:
            raise SchemeInfeasible(f"r = {self.r} must be below min(n, m)/2 = {min(n, m) / 2:g}")
        if min(n, m) - self.r < 2:
            raise SchemeInfeasible("pseudo samples would have fewer than 2 points")
        return n - self.r, m - self.r


def h1_indices(n: int, m: int, scheme: SamplingScheme, seed: int, i: int):
    """Row indices into X and Y for the i-th alternative pseudo pair."""
    n1, m1 = scheme.sizes(n, m)
    rng = stream(seed, H1, i)
    if scheme.kind == "bootstrap":
        return rng.integers(0, n, n), rng.integers(0, m, m)
    return rng.permutation(n)[:n1], rng.permutation(m)[:m1]


def h0_indices(n: int, m: int, scheme: SamplingScheme, seed: int, i: int):
    """Row indices into the merged pool Z = [X; Y] for the i-th null pseudo pair.

    Without replacement the two index sets are disjoint and duplicate-free.
    """
    n1, m1 = scheme.sizes(n, m)
    rng = stream(seed, H0, i)
    if scheme.kind == "bootstrap":
        idx = rng.integers(0, n + m, n + m)
        return idx[:n], idx[n:]
    perm = rng.permutation(n + m)
    return perm[:n1], perm[n1 : n1 + m1]


def _check_pair(x, y):
    x = as_sample(x, "x")
    y = as_sample(y, "y")
    if x.shape[1] != y.shape[1]:
        raise DimensionMismatch(f"x has dimension {x.shape[1]} but y has {y.shape[1]}")
    return x, y


def _check_N(N):
    if int(N) != N or N < 1:
        raise ParameterError(f"N must be a positive integer, got {N!r}")
    return int(N)


def pseudo_pairs_h1(x, y, scheme: SamplingScheme, N: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """N pseudo pairs resampled within X and within Y separately."""
    x, y = _check_pair(x, y)
    N = _check_N(N)
    out = []
    for i in range(N):
        ix, iy = h1_indices(len(x), len(y), scheme, seed, i)
        out.append((x[ix], y[iy]))
    return out


def pseudo_pairs_h0(x, y, scheme: SamplingScheme, N: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """N pseudo pairs drawn from the merged pool of X and Y."""
    x, y = _check_pair(x, y)
    N = _check_N(N)
    z = np.vstack([x, y])
    out = []
    for i in range(N):
        i1, i2 = h0_indices(len(x), len(y), scheme, seed, i)
        out.append((z[i1], z[i2]))
    return out


class PseudoPairs:
    """Index sets of N null and N alternative pseudo pairs for one (X, Y)."""

    def __init__(self, x, y, scheme: SamplingScheme, N: int, seed: int):
        self.x, self.y = _check_pair(x, y)
        self.z = np.vstack([self.x, self.y])
        self.scheme = scheme
        self.N = _check_N(N)
        n, m = len(self.x), len(self.y)
        self.sizes = scheme.sizes(n, m)
        h0 = [h0_indices(n, m, scheme, seed, i) for i in range(self.N)]
        h1 = [h1_indices(n, m, scheme, seed, i) for i in range(self.N)]
        self.h0 = (np.stack([a for a, _ in h0]), np.stack([b for _, b in h0]))
        self.h1 = (np.stack([a for a, _ in h1]), np.stack([b for _, b in h1]))
        self._moments = {}

    def moments(self, hypothesis: int) -> PairMoments:
        """Batched summaries of the pseudo pairs; computed once per hypothesis."""
        if hypothesis not in self._moments:
            if hypothesis == H0:
                m1, c1 = batch_moments(self.z, self.h0[0])
                m2, c2 = batch_moments(self.z, self.h0[1])
            else:
                m1, c1 = batch_moments(self.x, self.h1[0])
                m2, c2 = batch_moments(self.y, self.h1[1])
            self._moments[hypothesis] = PairMoments(m1, c1, m2, c2, sizes=self.sizes)
        return self._moments[hypothesis]

    def samples(self, hypothesis: int, i: int):
        if hypothesis == H0:
            return self.z[self.h0[0][i]], self.z[self.h0[1][i]]
        return self.x[self.h1[0][i]], self.y[self.h1[1][i]]


@dataclass
class RocCurve:
    """Empirical ROC: thresholds descending, ending at -inf so the curve reaches (1, 1)."""

    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["threshold", "fpr", "tpr"])
        for t, f, p in zip(self.thresholds, self.fpr, self.tpr):
            writer.writerow([repr(float(t)), repr(float(f)), repr(float(p))])
        return buf.getvalue()


def ecdf(values, t) -> np.ndarray:
    """Right-continuous empirical CDF: #(values <= t) / len(values)."""
    values = np.sort(np.asarray(values, dtype=float))
    return np.searchsorted(values, t, side="right") / values.size


def rank_auc(d0, d1) -> float:
    """Mann-Whitney AUC: P(D1 > D0) + P(D1 = D0) / 2 over all pairs."""
    d0 = np.sort(np.asarray(d0, dtype=float))
    d1 = np.asarray(d1, dtype=float)
    below = np.searchsorted(d0, d1, side="left")
    at_or_below = np.searchsorted(d0, d1, side="right")
    wins = below.sum() + 0.5 * (at_or_below - below).sum()
    return float(wins / (d0.size * d1.size))


def _finite_nonempty(v, name):
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size == 0:
        raise EmptyInput(f"{name} is empty")
    if not np.all(np.isfinite(v)):
        raise ParameterError(f"{name} has non-finite values")
    return v


def roc(d0, d1) -> RocCurve:
    """ROC of the rule "reject when D > tau" from null (d0) and alternative (d1) distances.

    One point per distinct pooled value tau (descending), with
    fpr = 1 - F0(tau) and tpr = 1 - F1(tau), plus a final point at tau = -inf.
    The AUC is the rank statistic with ties counted one half, which equals
    the trapezoidal area under this polyline.
    """
    d0 = _finite_nonempty(d0, "d0")
    d1 = _finite_nonempty(d1, "d1")
    thresholds = np.unique(np.concatenate([d0, d1]))[::-1]
    fpr = 1.0 - ecdf(d0, thresholds)
    tpr = 1.0 - ecdf(d1, thresholds)
    thresholds = np.append(thresholds, -np.inf)
    fpr = np.append(fpr, 1.0)
    tpr = np.append(tpr, 1.0)
    return RocCurve(thresholds, fpr, tpr, rank_auc(d0, d1))


def trapezoid_auc(fpr, tpr) -> float:
    fpr = np.asarray(fpr, dtype=float)
    tpr = np.asarray(tpr, dtype=float)
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2))


def calibrate_tau(d0, significance: float) -> float:
    """Upper (1 - significance) quantile of d0: the ceil((1 - s) N)-th order statistic."""
    d0 = np.sort(_finite_nonempty(d0, "d0"))
    s = float(significance)
    if not 0 < s < 1:
        raise ParameterError(f"significance must lie in (0, 1), got {s}")
    # guard against (1 - s) * N landing a hair above an integer
    rank = math.ceil((1.0 - s) * d0.size - 1e-9)
    return float(d0[min(max(rank, 1), d0.size) - 1])


def default_grid(family: Family, d: int) -> list:
    family = Family(family)
    if family in (Family.LOGSIMPLICIAL_JB, Family.LOGSIMPLICIAL_BR):
        return list(range(1, d + 1))
    if family in (Family.LOGPHIP_JB, Family.LOGPHIP_BR):
        return [round(0.01 * i, 2) for i in range(100)]
    raise ParameterError(f"family {family.value} has no parameter to select")


def _check_grid(family: Family, grid, d: int) -> list:
    family = Family(family)
    if family not in GRID_FAMILIES:
        raise ParameterError(f"family {family.value} has no parameter to select")
    grid = list(grid)
    if not grid:
        raise EmptyInput("parameter grid is empty")
    # constructing the specs validates every value
    specs = [DistanceSpec(family, float(v)) for v in grid] if family.parameter_name == "p" else None
    if specs is None:
        grid = [int(k) for k in grid]
        bad = [k for k in grid if not 1 <= k <= d]
        if bad:
            raise ParameterError(f"k values {bad} outside 1..{d}")
    else:
        grid = [s.param for s in specs]
    return grid


def _spec_distances(pairs: PseudoPairs, hypothesis: int, spec: DistanceSpec, unbiased: bool) -> np.ndarray:
    if spec.family is Family.ENERGY:
        return np.array(
            [energy_distance(*pairs.samples(hypothesis, i), spec.param) for i in range(pairs.N)]
        )
    return pairs.moments(hypothesis).distances(spec, unbiased)


def _auc_table(d0: np.ndarray, d1: np.ndarray, grid: list) -> dict:
    """AUC per grid column; None when more than 10% of the pairs failed."""
    table = {}
    for j, param in enumerate(grid):
        a, b = d0[:, j], d1[:, j]
        a, b = a[np.isfinite(a)], b[np.isfinite(b)]
        failed = 1 - min(a.size / d0.shape[0], b.size / d1.shape[0])
        table[param] = rank_auc(a, b) if failed <= MAX_FAILURE_FRACTION and a.size and b.size else None
    return table


def _argmax_auc(table: dict):
    best, best_auc = None, -math.inf
    for param in sorted(table):
        auc = table[param]
        if auc is not None and auc > best_auc:
            best, best_auc = param, auc
    if best is None:
        raise AllParametersInfeasible("no parameter of the grid could be evaluated on the pseudo pairs")
    return best


def select_parameter(
    x,
    y,
    family: Family,
    grid: Sequence | None,
    scheme: SamplingScheme,
    N: int,
    seed: int,
    unbiased_phi_k: bool = False,
):
    """Pick the k or p whose distance best separates null from alternative pseudo pairs.

    One set of pseudo pairs is shared by the whole grid. Ties go to the
    smallest parameter. Returns ``(best, auc_by_param)``, where parameters that
    failed on more than 10% of the pairs have AUC ``None``.
    """
    pairs = PseudoPairs(x, y, scheme, N, seed)
    best, table, _, _ = _select(pairs, family, grid, unbiased_phi_k)
    return best, table


def _select(pairs: PseudoPairs, family, grid, unbiased):
    family = Family(family)
    d = pairs.x.shape[1]
    grid = _check_grid(family, default_grid(family, d) if grid is None else grid, d)
    d0 = pairs.moments(H0).grid(family, grid, unbiased)
    d1 = pairs.moments(H1).grid(family, grid, unbiased)
    table = _auc_table(d0, d1, grid)
    return _argmax_auc(table), table, d0, grid


@dataclass
class TestConfig:
    """A fixed distance (``spec``) or a family plus a grid to select from."""

    __test__ = False  # not a pytest class

    spec: DistanceSpec | None = None
    family: Family | None = None
    grid: Sequence | None = None
    N: int | None = None
    scheme: SamplingScheme = field(default_factory=SamplingScheme)
    significance: float = 0.05
    master_seed: int = 0
    unbiased_phi_k: bool = False

    def __post_init__(self):
        if (self.spec is None) == (self.family is None):
            raise ParameterError("give either a distance spec or a family to select a parameter for")
        if self.family is not None:
            self.family = Family(self.family)
            if self.family not in GRID_FAMILIES:
                raise ParameterError(f"family {self.family.value} has no parameter to select")
        if self.N is not None and (int(self.N) != self.N or self.N < 10):
            raise ParameterError(f"N must be an integer >= 10, got {self.N!r}")
        if not 0 < self.significance <= 0.5:
            raise ParameterError(f"significance must lie in (0, 0.5], got {self.significance}")
        if int(self.master_seed) != self.master_seed or not 0 <= self.master_seed < 2**64:
            raise ParameterError("master_seed must be an unsigned 64-bit integer")

    def label(self) -> str:
        if self.spec is not None:
            return self.spec.label()
        return f"{self.family.value}(selected)"


@dataclass
class TestResult:
    __test__ = False

    statistic: float
    tau: float
    reject: bool
    selected_param: float | int | None
    auc_by_param: dict | None
    n_effective: int
    m_effective: int
    dropped_pairs: int = 0

    def to_dict(self) -> dict:
        out = asdict(self)
        if self.auc_by_param is not None:
            out["auc_by_param"] = [{"param": k, "auc": v} for k, v in self.auc_by_param.items()]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _trim(x, y, scheme: SamplingScheme, seed: int):
    if scheme.kind == "bootstrap" or scheme.r == 0:
        return x, y
    rng = stream(seed, TRIM, 0)
    n1, m1 = scheme.sizes(len(x), len(y))
    ix = np.sort(rng.permutation(len(x))[:n1])
    iy = np.sort(rng.permutation(len(y))[:m1])
    return x[ix], y[iy]


def _statistic(x, y, spec: DistanceSpec, unbiased: bool) -> float:
    if spec.family is Family.ENERGY:
        return energy_distance(x, y, spec.param)
    m1, c1 = batch_moments(x, np.arange(len(x))[None])
    m2, c2 = batch_moments(y, np.arange(len(y))[None])
    value = PairMoments(m1, c1, m2, c2, sizes=(len(x), len(y))).distances(spec, unbiased)[0]
    if not np.isfinite(value):
        raise NumericalError(f"{spec.label()} could not be evaluated on the observed samples")
    return float(value)


def _decide(pairs: PseudoPairs, config: TestConfig, x_t, y_t) -> TestResult:
    unbiased = config.unbiased_phi_k
    table = None
    if config.family is not None:
        best, table, d0_grid, grid = _select(pairs, config.family, config.grid, unbiased)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            spec = DistanceSpec(config.family, best)
        d0 = d0_grid[:, grid.index(best)]
        selected = best
    else:
        spec = config.spec
        spec.check_dim(pairs.x.shape[1])
        d0 = _spec_distances(pairs, H0, spec, unbiased)
        selected = None
    ok = np.isfinite(d0)
    dropped = int(d0.size - ok.sum())
    if dropped > MAX_FAILURE_FRACTION * d0.size:
        raise NumericalError(
            f"{spec.label()} failed on {dropped} of {d0.size} null pseudo pairs; results would be unreliable"
        )
    tau = calibrate_tau(d0[ok], config.significance)
    stat = _statistic(x_t, y_t, spec, unbiased)
    return TestResult(
        statistic=stat,
        tau=tau,
        reject=bool(stat > tau),
        selected_param=selected,
        auc_by_param=table,
        n_effective=len(x_t),
        m_effective=len(y_t),
        dropped_pairs=dropped,
    )


def run_tests(x, y, configs: Sequence[TestConfig]) -> list[TestResult]:
    """Run several tests that share seed, scheme and N on the same pseudo pairs."""
    x, y = _check_pair(x, y)
    if not configs:
        return []
    first = configs[0]
    for c in configs[1:]:
        if (c.master_seed, c.scheme, c.N) != (first.master_seed, first.scheme, first.N):
            raise ParameterError("configs must share master_seed, scheme and N")
    N = first.N if first.N is not None else len(x)
    pairs = PseudoPairs(x, y, first.scheme, max(N, 1), first.master_seed)
    x_t, y_t = _trim(x, y, first.scheme, first.master_seed)
    return [_decide(pairs, c, x_t, y_t) for c in configs]


def run_test(x, y, config: TestConfig) -> TestResult:
    """Calibrated test of H0: X and Y share mean and covariance.

    With a grid, the parameter is selected first. tau is the upper quantile of
    the distances over the null pseudo pairs; the statistic is the distance
    between X and Y after randomly dropping r points from each (no trimming
    for the bootstrap scheme). H0 is rejected when statistic > tau.
    """
    return run_tests(x, y, [config])[0]


# simulation presets

A_BLOCK = np.array([[2.0, -1.0], [-1.0, 2.0]])


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [-s, c]])


def preset_covariances(preset: int, param: float, d: int = 20) -> tuple[np.ndarray, np.ndarray]:
    """(Sigma_mu, Sigma_zeta) of the two simulation presets.

    Preset 1: blocks (A, 1e-3 I) versus (alpha A, 1e-3 I), alpha in [1, 2].
    Preset 2: blocks (A, I) versus (R A R^T, I), R a rotation by theta in [0, pi/4].
    """
    if d < 2:
        raise ParameterError("presets need d >= 2")
    if preset == 1:
        if not 1 <= param <= 2:
            raise ParameterError(f"preset 1 needs alpha in [1, 2], got {param}")
        tail = 1e-3
        B = param * A_BLOCK
    elif preset == 2:
        if not 0 <= param <= math.pi / 4 + 1e-12:
            raise ParameterError(f"preset 2 needs theta in [0, pi/4], got {param}")
        tail = 1.0
        R = rotation(param)
        B = R @ A_BLOCK @ R.T
    else:
        raise ParameterError(f"unknown preset {preset!r}; use 1 or 2")
    s_mu = np.eye(d) * tail
    s_mu[:2, :2] = A_BLOCK
    s_zeta = np.eye(d) * tail
    s_zeta[:2, :2] = B
    return s_mu, s_zeta


def _gaussian_draw(rng, mean, root, n):
    return mean + rng.standard_normal((n, mean.size)) @ root.T


def _roots(preset, param, d):
    s_mu, s_zeta = preset_covariances(preset, param, d)
    return np.linalg.cholesky(s_mu), np.linalg.cholesky(s_zeta)


def _simulated_pairs(preset, param, n, d, reps, seed):
    """Per replication: a null pair (both from mu) and an alternative pair (mu vs zeta)."""
    mean = np.ones(d)
    L_mu, L_zeta = _roots(preset, param, d)
    out = []
    for r in range(reps):
        rng = stream(seed, SIM, r)
        x0 = _gaussian_draw(rng, mean, L_mu, n)
        y0 = _gaussian_draw(rng, mean, L_mu, n)
        x1 = _gaussian_draw(rng, mean, L_mu, n)
        y1 = _gaussian_draw(rng, mean, L_zeta, n)
        out.append((x0, y0, x1, y1))
    return out


def _stack_moments(samples_a, samples_b) -> PairMoments:
    m1, c1 = zip(*[batch_moments(s, np.arange(len(s))[None]) for s in samples_a])
    m2, c2 = zip(*[batch_moments(s, np.arange(len(s))[None]) for s in samples_b])
    n1, n2 = len(samples_a[0]), len(samples_b[0])
    return PairMoments(np.concatenate(m1), np.concatenate(c1), np.concatenate(m2), np.concatenate(c2), (n1, n2))


def simulate_example(
    preset: int,
    param: float,
    n: int = 200,
    d: int = 20,
    reps: int = 1000,
    distances: Sequence[DistanceSpec] = (),
    seed: int = 0,
    significance: float = 0.05,
) -> dict:
    """Monte Carlo ROC study for a preset.

    For each replication one null pair and one alternative pair of Gaussian
    samples of size n are drawn; each distance gives null values d0 and
    alternative values d1. Returns, per distance label, the ROC curve, its
    AUC, and the false/true positive rates at the threshold calibrated on d0.
    """
    if reps < 1:
        raise ParameterError("reps must be >= 1")
    if not distances:
        raise ParameterError("no distances requested")
    data = _simulated_pairs(preset, param, n, d, reps, seed)
    null = _stack_moments([p[0] for p in data], [p[1] for p in data])
    alt = _stack_moments([p[2] for p in data], [p[3] for p in data])
    results = {}
    for spec in distances:
        spec.check_dim(d)
        if spec.family is Family.ENERGY:
            d0 = np.array([energy_distance(p[0], p[1], spec.param) for p in data])
            d1 = np.array([energy_distance(p[2], p[3], spec.param) for p in data])
        else:
            d0 = null.distances(spec)
            d1 = alt.distances(spec)
        d0, d1 = d0[np.isfinite(d0)], d1[np.isfinite(d1)]
        curve = roc(d0, d1)
        tau = calibrate_tau(d0, significance)
        results[spec.label()] = {
            "auc": curve.auc,
            "fp": float(np.mean(d0 > tau)),
            "tp": float(np.mean(d1 > tau)),
            "tau": tau,
            "roc": curve,
        }
    return results


def _rates_one(args):
    preset, param, n, d, configs, rep, seed = args
    mean = np.ones(d)
    L_mu, L_zeta = _roots(preset, param, d)
    rng = stream(seed, SIM, rep)
    out = []
    for hyp, L_y in ((H0, L_mu), (H1, L_zeta)):
        x = _gaussian_draw(rng, mean, L_mu, n)
        y = _gaussian_draw(rng, mean, L_y, n)
        rep_seed = int(np.random.SeedSequence(int(seed), spawn_key=(SIM, rep, hyp)).generate_state(1, np.uint64)[0])
        cfgs = [TestConfig(**{**c, "master_seed": rep_seed}) for c in configs]
        out.append(run_tests(x, y, cfgs))
    return out


def simulate_test_rates(
    preset: int,
    param: float,
    configs: Sequence[TestConfig],
    n: int = 200,
    d: int = 20,
    reps: int = 1000,
    seed: int = 0,
    workers: int = 1,
) -> dict:
    """False- and true-positive rates of full test procedures on a preset.

    Each replication draws a null pair (X, Y from mu) and an alternative pair
    (X from mu, Y from zeta) and runs every configured test on both, with a
    per-replication seed derived from ``seed``. The result is the same for any
    number of worker processes.
    """
    plain = []
    for c in configs:
        plain.append(
            {
                "spec": c.spec,
                "family": c.family,
                "grid": c.grid,
                "N": c.N,
                "scheme": c.scheme,
                "significance": c.significance,
                "unbiased_phi_k": c.unbiased_phi_k,
            }
        )
    jobs = [(preset, param, n, d, plain, r, seed) for r in range(reps)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            per_rep = list(pool.map(_rates_one, jobs, chunksize=max(1, reps // (4 * workers))))
    else:
        per_rep = [_rates_one(j) for j in jobs]
    summary = {}
    for j, c in enumerate(configs):
        null = [rep[0][j] for rep in per_rep]
        alt = [rep[1][j] for rep in per_rep]
        summary[c.label()] = {
            "fp": float(np.mean([r.reject for r in null])),
            "tp": float(np.mean([r.reject for r in alt])),
            "selected_null": [r.selected_param for r in null],
            "selected_alt": [r.selected_param for r in alt],
        }
    return summary
