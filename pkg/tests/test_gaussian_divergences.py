import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import trapezoid
from scipy.stats import multivariate_normal

from bregdiv import design_criteria as dc
from bregdiv.errors import (
    BadExponent,
    DimensionMismatch,
    ParameterError,
    RankDeficient,
    SingularCovariance,
    UnsupportedForSummaries,
)
from bregdiv.gaussian_divergences import (
    DistanceSpec,
    Family,
    GaussianSummary,
    bhattacharyya,
    br_divergence,
    br_log_phi_p,
    br_log_simplicial,
    evaluate,
    jb_generic,
    jb_log_phi_p,
    jb_log_simplicial,
    jensen_shannon,
    kl_symmetrized,
    log_phi_p_criterion,
    log_phi_p_gradient,
    log_Phi_k_criterion,
    log_Phi_k_gradient,
    mixture_covariance,
    standardize_pair,
)
from bregdiv.spectral import EigenFloor, symmetric_eigen

from conftest import random_psd, random_spd, random_summary

G = GaussianSummary


def all_divergences(d):
    out = [kl_symmetrized, jensen_shannon, bhattacharyya]
    out += [lambda a, b, p=p: jb_log_phi_p(a, b, p) for p in (0, 0.3, 0.9)]
    out += [lambda a, b, p=p: br_log_phi_p(a, b, p) for p in (0, 0.5)]
    out += [lambda a, b, k=k: jb_log_simplicial(a, b, k) for k in range(1, d + 1)]
    out += [lambda a, b, k=k: br_log_simplicial(a, b, k) for k in range(1, d + 1)]
    return out


@pytest.fixture(autouse=True)
def _quiet_k1():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="k = 1")
        yield


class TestSummary:
    def test_read_only(self):
        g = G([0.0, 1.0], np.eye(2))
        with pytest.raises(ValueError):
            g.mean[0] = 3.0

    def test_dimension_check(self):
        with pytest.raises(ParameterError):
            G([0.0], np.eye(2))

    def test_not_psd(self):
        from bregdiv.errors import NotPSD

        with pytest.raises(NotPSD):
            G([0.0, 0.0], np.diag([1.0, -1.0]))

    def test_round_trip(self, rng):
        g = random_summary(rng, 4)
        h = G.from_dict(g.to_dict())
        np.testing.assert_array_equal(g.mean, h.mean)
        np.testing.assert_array_equal(g.cov, h.cov)

    def test_missing_field(self):
        with pytest.raises(ParameterError):
            G.from_dict({"mean": [0.0]})


class TestKL:
    def test_self(self, rng):
        g = random_summary(rng, 3)
        assert kl_symmetrized(g, g) <= 1e-10

    def test_scalar_variances(self):
        assert kl_symmetrized(G([0.0], [[1.0]]), G([0.0], [[2.0]])) == pytest.approx(0.125, rel=1e-14)

    def test_mean_gap(self):
        assert kl_symmetrized(G([0.0, 0.0], np.eye(2)), G([2.0, 0.0], np.eye(2))) == pytest.approx(2.0)

    @pytest.mark.parametrize(
        "g1,g2",
        [
            (G([0.0], [[1.0]]), G([0.0], [[2.0]])),
            (G([0.0, 0.0], np.eye(2)), G([2.0, 0.0], np.eye(2))),
        ],
    )
    def test_monte_carlo(self, g1, g2):
        rng = np.random.default_rng(7)
        p1 = multivariate_normal(g1.mean, g1.cov)
        p2 = multivariate_normal(g2.mean, g2.cov)
        x1 = p1.rvs(10**6, random_state=rng).reshape(10**6, -1)
        x2 = p2.rvs(10**6, random_state=rng).reshape(10**6, -1)
        kl12 = np.mean(p1.logpdf(x1) - p2.logpdf(x1))
        kl21 = np.mean(p2.logpdf(x2) - p1.logpdf(x2))
        assert 0.5 * (kl12 + kl21) == pytest.approx(kl_symmetrized(g1, g2), rel=0.01)

    def test_singular(self):
        with pytest.raises(SingularCovariance) as info:
            kl_symmetrized(G([0.0, 0.0], np.eye(2)), G([0.0, 0.0], np.diag([1.0, 0.0])))
        assert info.value.argument == "g2"

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            kl_symmetrized(G([0.0], [[1.0]]), G([0.0, 0.0], np.eye(2)))


class TestJSAndBhattacharyya:
    def test_js_scalar(self):
        assert jensen_shannon(G([0.0], [[1.0]]), G([0.0], [[4.0]])) == pytest.approx(0.5 * math.log(1.25), rel=1e-14)
        assert jensen_shannon(G([0.0], [[1.0]]), G([0.0], [[4.0]])) == pytest.approx(0.111571, abs=1e-6)

    def test_equal_means(self, rng):
        g1 = G(np.ones(3), random_spd(rng, 3))
        g2 = G(np.ones(3), random_spd(rng, 3))
        assert jensen_shannon(g1, g2) == pytest.approx(bhattacharyya(g1, g2), abs=1e-12)

    def test_bhattacharyya_mahalanobis(self):
        assert bhattacharyya(G([0.0, 0.0], np.eye(2)), G([2.0, 0.0], np.eye(2))) == pytest.approx(0.5)

    def test_bhattacharyya_hellinger_integral(self):
        g1 = G([0.0, 0.3], [[1.0, 0.3], [0.3, 0.8]])
        g2 = G([0.8, -0.2], [[1.5, -0.2], [-0.2, 0.6]])
        t = np.linspace(-9, 9, 1201)
        X, Y = np.meshgrid(t, t, indexing="ij")
        pts = np.stack([X, Y], axis=-1)
        root = np.sqrt(multivariate_normal(g1.mean, g1.cov).pdf(pts) * multivariate_normal(g2.mean, g2.cov).pdf(pts))
        H = trapezoid(trapezoid(root, t, axis=1), t)
        assert bhattacharyya(g1, g2) == pytest.approx(-math.log(H), rel=1e-6)

    def test_js_via_moment_matched_mixture(self):
        # JS of the closed form: KL of each normal to the moment-matched mixture normal
        g1, g2 = G([0.0], [[1.0]]), G([1.0], [[3.0]])
        m = G([0.5], [mixture_covariance(g1, g2)[0]])
        direct = 0.5 * (
            0.5 * math.log(m.cov[0, 0] / g1.cov[0, 0]) + 0.5 * math.log(m.cov[0, 0] / g2.cov[0, 0])
        )
        assert jensen_shannon(g1, g2) == pytest.approx(direct, rel=1e-12)

    def test_b_dominates_js(self, rng):
        for _ in range(100):
            d = rng.integers(1, 6)
            g1, g2 = random_summary(rng, d), random_summary(rng, d)
            assert bhattacharyya(g1, g2) >= jensen_shannon(g1, g2) - 1e-10


class TestJBLogPhiP:
    def test_self(self, rng):
        g = random_summary(rng, 4)
        for p in (0, 0.2, 0.7):
            assert jb_log_phi_p(g, g, p) <= 1e-10

    def test_p0_is_scaled_kl(self, rng):
        for d in range(1, 7):
            g1, g2 = random_summary(rng, d), random_summary(rng, d)
            assert jb_log_phi_p(g1, g2, 0) == pytest.approx(2 / d * kl_symmetrized(g1, g2), rel=1e-9)

    def test_worked_value(self):
        g1, g2 = G([0.0, 0.0], np.eye(2)), G([0.0, 0.0], np.diag([4.0, 1.0]))
        assert jb_log_phi_p(g1, g2, 0.5) == pytest.approx(0.5, rel=1e-14)
        assert jb_generic(g1, g2, log_phi_p_gradient(0.5)) == pytest.approx(0.5, rel=1e-14)

    def test_matches_generic(self, rng):
        for _ in range(20):
            d = rng.integers(1, 6)
            g1, g2 = random_summary(rng, d), random_summary(rng, d)
            for p in (0, 0.4, 0.95):
                assert jb_log_phi_p(g1, g2, p) == pytest.approx(jb_generic(g1, g2, log_phi_p_gradient(p)), rel=1e-9)

    def test_p_range(self, rng):
        g = random_summary(rng, 2)
        with pytest.raises(ParameterError):
            jb_log_phi_p(g, g, 1.0)
        with pytest.raises(ParameterError):
            jb_log_phi_p(g, g, -0.5)
        assert jb_log_phi_p(g, g, -0.5, allow_negative_p=True) <= 1e-10

    def test_singular_rejected_or_clamped(self):
        g1, g2 = G([0.0, 0.0], np.eye(2)), G([0.0, 0.0], np.diag([1.0, 0.0]))
        with pytest.raises(SingularCovariance):
            jb_log_phi_p(g1, g2, 0.5)
        assert math.isfinite(jb_log_phi_p(g1, g2, 0.5, EigenFloor.clamp(1e-6)))


class TestJBLogSimplicial:
    def test_self(self, rng):
        g = random_summary(rng, 4)
        for k in range(1, 5):
            assert jb_log_simplicial(g, g, k) <= 1e-10

    def test_k_equals_d(self, rng):
        for d in range(1, 7):
            g1, g2 = random_summary(rng, d), random_summary(rng, d)
            two_kl = 2 * kl_symmetrized(g1, g2)
            assert jb_log_simplicial(g1, g2, d) == pytest.approx(two_kl, rel=1e-9)
            assert jb_log_simplicial(g1, g2, d) == pytest.approx(d * jb_log_phi_p(g1, g2, 0), rel=1e-9)

    def test_worked_value_k1(self):
        # grad log Phi_1 = I / tr: (1/2)(tr(diag(4,1))/2 + tr(I)/5) - 1
        g1, g2 = G([0.0, 0.0], np.eye(2)), G([0.0, 0.0], np.diag([4.0, 1.0]))
        assert jb_log_simplicial(g1, g2, 1) == pytest.approx(0.45, rel=1e-14)
        assert jb_generic(g1, g2, log_Phi_k_gradient(1)) == pytest.approx(0.45, rel=1e-14)

    def test_matches_generic(self, rng):
        for _ in range(20):
            d = rng.integers(1, 7)
            g1, g2 = random_summary(rng, d), random_summary(rng, d)
            for k in range(1, d + 1):
                a = jb_log_simplicial(g1, g2, k)
                assert a == pytest.approx(jb_generic(g1, g2, log_Phi_k_gradient(k)), rel=1e-10, abs=1e-12)

    def test_rank_deficient(self):
        g1 = G([0.0, 0.0, 0.0], np.eye(3))
        g2 = G([0.0, 0.0, 0.0], np.diag([1.0, 1.0, 0.0]))
        assert math.isfinite(jb_log_simplicial(g1, g2, 2))
        with pytest.raises(RankDeficient) as info:
            jb_log_simplicial(g1, g2, 3)
        assert info.value.k == 3


class TestBurbeaRao:
    def test_self(self, rng):
        g = random_summary(rng, 3)
        assert br_divergence(g, g, log_Phi_k_criterion(2)) <= 1e-10

    def test_mixture_covariance(self):
        g1, g2 = G([0.0, 0.0], np.eye(2)), G([2.0, 0.0], np.eye(2))
        np.testing.assert_allclose(mixture_covariance(g1, g2), np.diag([2.0, 1.0]))

    def test_log_phi0_is_scaled_js(self, rng):
        for d in range(1, 7):
            g1, g2 = random_summary(rng, d), random_summary(rng, d)
            assert br_log_phi_p(g1, g2, 0) == pytest.approx(2 / d * jensen_shannon(g1, g2), rel=1e-9)

    @pytest.mark.parametrize("beta", [0.1, 0.5, 2.0, 7.0])
    def test_homogeneous_criterion_is_blind_to_scaling(self, rng, beta):
        S = random_spd(rng, 4)
        g1, g2 = G(np.zeros(4), S), G(np.zeros(4), beta * S)
        for k in range(1, 5):
            crit = lambda M, k=k: dc.Phi_k(symmetric_eigen(M), k) ** (1 / k)  # noqa: E731
            assert abs(br_divergence(g1, g2, crit)) <= 1e-9 * (1 + beta)

            def grad(M, k=k):
                s = symmetric_eigen(M)
                v = dc.Phi_k(s, k)
                return v ** (1 / k - 1) / k * dc.grad_Phi_k(M, s, k)

            assert abs(jb_generic(g1, g2, grad)) <= 1e-9 * (1 + beta)

    def test_log_criterion_detects_scaling(self, rng):
        S = random_spd(rng, 4)
        g1, g2 = G(np.zeros(4), S), G(np.zeros(4), 2.0 * S)
        for k in range(1, 5):
            assert br_log_simplicial(g1, g2, k) > 1e-3
            assert jb_log_simplicial(g1, g2, k) > 1e-3

    def test_rank_deficient_marginal(self):
        g1 = G([0.0, 0.0], np.eye(2))
        g2 = G([0.0, 0.0], np.diag([1.0, 0.0]))
        with pytest.raises(RankDeficient):
            br_log_simplicial(g1, g2, 2)

    def test_log_phi_p_matches_criterion(self, rng):
        g1, g2 = random_summary(rng, 3), random_summary(rng, 3)
        assert br_log_phi_p(g1, g2, 0.5) == pytest.approx(br_divergence(g1, g2, log_phi_p_criterion(0.5)))


class TestStandardize:
    def test_self(self, rng):
        g = random_summary(rng, 3)
        a, b = standardize_pair(g, g)
        np.testing.assert_allclose(a.mean, 0, atol=1e-14)
        np.testing.assert_allclose(b.mean, 0, atol=1e-12)
        np.testing.assert_allclose(a.cov, np.eye(3))
        np.testing.assert_allclose(b.cov, np.eye(3), atol=1e-12)

    def test_scalar(self):
        a, b = standardize_pair(G([0.0], [[4.0]]), G([2.0], [[8.0]]))
        np.testing.assert_allclose(b.mean, [1.0])
        np.testing.assert_allclose(b.cov, [[2.0]])
        np.testing.assert_allclose(a.cov, [[1.0]])

    def test_invariance(self, rng):
        for d in range(1, 8):
            g1, g2 = random_summary(rng, d), random_summary(rng, d)
            s1, s2 = standardize_pair(g1, g2)
            for f in (kl_symmetrized, jensen_shannon, bhattacharyya):
                assert f(s1, s2) == pytest.approx(f(g1, g2), rel=1e-8, abs=1e-12)

    def test_singular(self):
        with pytest.raises(SingularCovariance):
            standardize_pair(G([0.0, 0.0], np.diag([1.0, 0.0])), G([0.0, 0.0], np.eye(2)))


class TestProperties:
    def test_symmetry_and_self(self, rng):
        for _ in range(30):
            d = int(rng.integers(1, 6))
            g1, g2 = random_summary(rng, d), random_summary(rng, d)
            for f in all_divergences(d):
                assert abs(f(g1, g2) - f(g2, g1)) <= 1e-10 * max(1, f(g1, g2))
                assert 0 <= f(g1, g1) <= 1e-10
                assert f(g1, g2) >= 0

    def test_distinguishability(self, rng):
        for _ in range(30):
            d = int(rng.integers(2, 6))
            g1, g2 = random_summary(rng, d), random_summary(rng, d)
            if np.linalg.norm(g1.mean - g2.mean) + np.linalg.norm(g1.cov - g2.cov) < 0.1:
                continue
            for k in range(1, d + 1):
                assert jb_log_simplicial(g1, g2, k) > 1e-6
                assert br_log_simplicial(g1, g2, k) > 1e-6

    @given(
        st.integers(1, 4),
        st.integers(0, 2**32 - 1),
        st.floats(0.0, 0.95),
    )
    @settings(max_examples=40, deadline=None)
    def test_nonnegative_random(self, d, seed, p):
        rng = np.random.default_rng(seed)
        g1, g2 = random_summary(rng, d, spread=2.0), random_summary(rng, d, spread=2.0)
        assert jb_log_phi_p(g1, g2, p) >= 0
        assert br_log_phi_p(g1, g2, p) >= 0
        assert bhattacharyya(g1, g2) >= jensen_shannon(g1, g2) - 1e-10


class TestSpecAndEvaluate:
    def test_dispatch(self, rng):
        g1, g2 = random_summary(rng, 3), random_summary(rng, 3)
        assert evaluate(DistanceSpec("kl"), g1, g1) <= 1e-10
        assert evaluate(DistanceSpec("logphi-p-jb", 0), g1, g2) == pytest.approx(2 / 3 * kl_symmetrized(g1, g2))
        assert evaluate(DistanceSpec("js"), g1, g2) == jensen_shannon(g1, g2)
        assert evaluate(DistanceSpec("bhattacharyya"), g1, g2) == bhattacharyya(g1, g2)
        assert evaluate(DistanceSpec("logphi-p-br", 0.5), g1, g2) == br_log_phi_p(g1, g2, 0.5)
        assert evaluate(DistanceSpec("logsimplicial-jb", 2), g1, g2) == jb_log_simplicial(g1, g2, 2)
        assert evaluate(DistanceSpec("logsimplicial-br", 2), g1, g2) == br_log_simplicial(g1, g2, 2)

    def test_energy_unsupported(self, rng):
        g = random_summary(rng, 2)
        with pytest.raises(UnsupportedForSummaries):
            evaluate(DistanceSpec(Family.ENERGY, 1.0), g, g)

    def test_k_above_dimension(self, rng):
        g = random_summary(rng, 2)
        with pytest.raises(ParameterError):
            evaluate(DistanceSpec("logsimplicial-jb", 3), g, g)

    def test_parameter_validation(self):
        with pytest.raises(ParameterError):
            DistanceSpec("kl", 1.0)
        with pytest.raises(ParameterError):
            DistanceSpec("logphi-p-jb")
        with pytest.raises(ParameterError):
            DistanceSpec("logphi-p-jb", 1.0)
        with pytest.raises(ParameterError):
            DistanceSpec("logsimplicial-br", 0)
        with pytest.raises(BadExponent):
            DistanceSpec("energy", 2.5)
        with pytest.raises(ValueError):
            DistanceSpec("nope")

    def test_k1_warns(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            with pytest.raises(UserWarning):
                DistanceSpec("logsimplicial-jb", 1)

    def test_labels(self):
        assert DistanceSpec("logphi-p-jb", 0.5).label() == "logphi-p-jb(p=0.5)"
        assert DistanceSpec("kl").label() == "kl"
