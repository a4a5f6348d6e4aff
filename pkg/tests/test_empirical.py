import math

import numpy as np
import pytest

from bregdiv import design_criteria as dc
from bregdiv.empirical import (
    corrected_Phi_k,
    energy_distance,
    gaussian_sampler,
    mc_simplicial_dispersion,
    sample_distance,
    sample_moments,
    simplex_squared_volume,
    unbiased_phi_k_factor,
)
from bregdiv.errors import (
    BadExponent,
    DimensionMismatch,
    ParameterError,
    SampleTooSmall,
    TooFewObservations,
)
from bregdiv.gaussian_divergences import DistanceSpec, kl_symmetrized
from bregdiv.spectral import symmetric_eigen


class TestMoments:
    def test_scalar(self):
        g = sample_moments([0.0, 2.0])
        assert g.mean[0] == 1.0
        assert g.cov[0, 0] == 2.0

    def test_constant(self):
        g = sample_moments(np.ones((5, 3)))
        np.testing.assert_array_equal(g.cov, np.zeros((3, 3)))

    def test_triangle(self):
        g = sample_moments([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        np.testing.assert_allclose(g.mean, [1 / 3, 1 / 3])
        np.testing.assert_allclose(g.cov, [[1 / 3, -1 / 6], [-1 / 6, 1 / 3]])

    def test_matches_numpy(self, rng):
        x = rng.standard_normal((40, 4))
        np.testing.assert_allclose(sample_moments(x).cov, np.cov(x, rowvar=False))

    def test_too_few(self):
        with pytest.raises(TooFewObservations):
            sample_moments([[1.0, 2.0]])

    def test_non_finite(self):
        with pytest.raises(ParameterError):
            sample_moments([[1.0, np.inf], [0.0, 0.0]])


class TestUnbiasedFactor:
    @pytest.mark.parametrize("n", [3, 10, 500])
    def test_k1(self, n):
        assert unbiased_phi_k_factor(n, 1) == pytest.approx(1.0, rel=1e-12)

    def test_exact(self):
        assert unbiased_phi_k_factor(5, 2) == pytest.approx(4 / 3, rel=1e-13)

    def test_large(self):
        v = unbiased_phi_k_factor(200, 10)
        exact = math.factorial(189) * 199**10 / math.factorial(199)
        assert v == pytest.approx(exact, rel=1e-10)

    def test_too_small(self):
        with pytest.raises(SampleTooSmall):
            unbiased_phi_k_factor(4, 3)


class TestSimplexVolume:
    def test_segment(self):
        assert simplex_squared_volume([[0.0], [3.0]]) == pytest.approx(9)

    def test_triangle(self):
        assert simplex_squared_volume([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]) == pytest.approx(0.25)

    def test_collinear(self):
        assert simplex_squared_volume([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]) == pytest.approx(0, abs=1e-28)

    def test_gram_determinant(self, rng):
        for k, d in ((1, 3), (2, 3), (3, 5), (4, 4)):
            pts = rng.standard_normal((k + 1, d))
            E = pts[1:] - pts[0]
            ref = np.linalg.det(E @ E.T) / math.factorial(k) ** 2
            assert simplex_squared_volume(pts) == pytest.approx(ref, rel=1e-10)

    def test_invariances(self, rng):
        pts = rng.standard_normal((4, 5))
        Q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
        v = simplex_squared_volume(pts)
        assert simplex_squared_volume(pts @ Q.T) == pytest.approx(v, rel=1e-10)
        assert simplex_squared_volume(pts[[2, 0, 3, 1]]) == pytest.approx(v, rel=1e-10)

    def test_too_many_vertices(self):
        with pytest.raises(DimensionMismatch):
            simplex_squared_volume(np.zeros((4, 2)))


class TestMonteCarlo:
    def test_point_mass(self):
        est = mc_simplicial_dispersion(lambda rng, n: np.zeros((n, 3)), 2, 1000, seed=1)
        assert est.value == 0.0

    def test_identity_k1(self):
        est = mc_simplicial_dispersion(gaussian_sampler(np.zeros(2), np.eye(2)), 1, 10**6, seed=3)
        assert est.value == pytest.approx(4.0, rel=0.02)
        assert abs(est.value - 4.0) <= 4 * est.stderr

    def test_diag_k3(self):
        est = mc_simplicial_dispersion(gaussian_sampler(np.zeros(3), np.diag([1.0, 2.0, 3.0])), 3, 10**6, seed=4)
        assert est.value == pytest.approx(4.0, rel=0.03)

    def test_workers_do_not_change_result(self):
        s = gaussian_sampler(np.zeros(3), np.diag([1.0, 2.0, 3.0]))
        a = mc_simplicial_dispersion(s, 2, 100_000, seed=9, workers=1)
        b = mc_simplicial_dispersion(s, 2, 100_000, seed=9, workers=3)
        assert a == b

    def test_bad_args(self):
        s = gaussian_sampler(np.zeros(2), np.eye(2))
        with pytest.raises(ParameterError):
            mc_simplicial_dispersion(s, 1, 0, seed=1)
        with pytest.raises(DimensionMismatch):
            mc_simplicial_dispersion(s, 3, 10, seed=1)


class TestEnergy:
    def test_identical(self, rng):
        x = rng.standard_normal((20, 3))
        assert energy_distance(x, x) == pytest.approx(0, abs=1e-12)

    def test_enumerated(self):
        assert energy_distance([0.0, 2.0], [1.0, 3.0], 1.0) == pytest.approx(1.0)

    def test_delta_two(self):
        assert energy_distance([0.0], [1.0], 2.0) == pytest.approx(2.0)

    def test_delta_two_is_mean_gap(self, rng):
        x, y = rng.standard_normal((15, 3)), rng.standard_normal((9, 3)) + 1
        gap = x.mean(0) - y.mean(0)
        assert energy_distance(x, y, 2.0) == pytest.approx(2 * gap @ gap, rel=1e-10)

    def test_symmetric_and_translation_invariant(self, rng):
        x, y = rng.standard_normal((30, 2)), rng.standard_normal((25, 2)) * 2
        v = energy_distance(x, y, 1.3)
        assert energy_distance(y, x, 1.3) == pytest.approx(v, rel=1e-12)
        c = np.array([5.0, -3.0])
        assert energy_distance(x + c, y + c, 1.3) == pytest.approx(v, rel=1e-10)

    @pytest.mark.parametrize("delta", [0.0, -1.0, 2.5])
    def test_bad_delta(self, delta):
        with pytest.raises(BadExponent):
            energy_distance([0.0, 1.0], [1.0, 2.0], delta)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            energy_distance(np.zeros((3, 2)), np.zeros((3, 3)))


class TestCorrected:
    def test_unbiased(self):
        rng = np.random.default_rng(11)
        cov = np.diag([1.0, 2.0, 3.0])
        x = rng.standard_normal((2000, 20, 3)) * np.sqrt(np.diag(cov))
        for k in (1, 2, 3):
            vals = np.array([corrected_Phi_k(s, k) for s in x])
            target = dc.Phi_k(symmetric_eigen(cov), k)
            assert abs(vals.mean() - target) <= 4 * vals.std(ddof=1) / math.sqrt(vals.size)

    def test_sample_distance(self, rng):
        x, y = rng.standard_normal((30, 2)), rng.standard_normal((30, 2))
        assert sample_distance(DistanceSpec("kl"), x, y) == kl_symmetrized(sample_moments(x), sample_moments(y))
        assert sample_distance(DistanceSpec("energy", 1.0), x, y) == energy_distance(x, y)
