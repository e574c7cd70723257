"""Gaussian synthesis: factorization, jitter ladder, stream determinism, and
distributional checks against the model covariance."""

import numpy as np
import pytest
from scipy.stats import norm

from mfbm import ModelSpec, PathSampler, SimConfig, covariance_matrix, empirical_variogram, gaussian_vector, simulate_path
from mfbm.errors import ResourceLimitError, SimulationError
from mfbm.simulate import inverse_normal_cdf, standard_normals

from conftest import FBM06


class TestInverseNormalCdf:
    def test_against_scipy(self):
        u = np.concatenate([
            np.array([1e-12, 1e-6, 0.02, 0.024, 0.025, 0.5, 0.975, 0.999999]),
            np.linspace(0.001, 0.999, 199),
        ])
        got = inverse_normal_cdf(u)
        want = norm.ppf(u)
        assert np.max(np.abs((got - want) / np.where(np.abs(want) > 1, want, 1.0))) < 1.2e-9

    def test_symmetry(self):
        u = np.linspace(0.01, 0.49, 25)
        assert np.allclose(inverse_normal_cdf(u), -inverse_normal_cdf(1 - u), atol=1e-11)


class TestStreams:
    def test_determinism(self):
        a = standard_normals(1000, seed=5, stream=2)
        b = standard_normals(1000, seed=5, stream=2)
        assert np.array_equal(a, b)

    def test_streams_differ(self):
        a = standard_normals(1000, seed=5, stream=0)
        b = standard_normals(1000, seed=5, stream=1)
        c = standard_normals(1000, seed=6, stream=0)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)


class TestGaussianVector:
    def test_identity_statistics(self):
        draws = np.stack([gaussian_vector(np.eye(3), seed=1, stream=s) for s in range(10_000)])
        assert abs(draws.mean()) < 0.05
        assert abs(draws.var() - 1.0) < 0.05

    def test_zero_matrix(self):
        assert np.array_equal(gaussian_vector(np.zeros((4, 4)), seed=0), np.zeros(4))

    def test_rank_one(self):
        cov = np.ones((2, 2))
        for s in range(20):
            x = gaussian_vector(cov, seed=3, stream=s)
            assert abs(x[0] - x[1]) <= 1e-4 * (1.0 + abs(x[0]))

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            gaussian_vector(np.array([[1.0, 0.5], [0.0, 1.0]]), seed=0)

    def test_indefinite_fails_with_eigenvalue(self):
        cov = np.diag([1.0, -0.5])
        with pytest.raises(SimulationError, match="eigenvalue"):
            gaussian_vector(cov, seed=0)


class TestSimulatePath:
    def test_bitwise_determinism(self):
        cfg = SimConfig(model=ModelSpec.fbm(0.7, 1.0), n=64, delta=0.1, seed=9)
        a = simulate_path(cfg)
        b = simulate_path(cfg)
        assert np.array_equal(a.values, b.values)

    def test_size_cap(self):
        with pytest.raises(ResourceLimitError, match="cap"):
            SimConfig(model=ModelSpec.fbm(0.5, 1.0), n=9000, delta=0.01)
        cfg = SimConfig(model=ModelSpec.fbm(0.5, 1.0), n=9000, delta=0.01, max_n=10_000)
        assert cfg.n == 9000  # explicit override accepted

    def test_brownian_increments_uncorrelated(self):
        sampler = PathSampler(ModelSpec.fbm(0.5, 1.0), 2000, 0.05)
        for s in range(10):
            inc = np.diff(sampler.draw(seed=31, stream=s).values)
            r1 = np.corrcoef(inc[:-1], inc[1:])[0, 1]
            assert abs(r1) <= 3.0 / np.sqrt(inc.size)

    def test_empirical_variogram_slope(self, fbm06_paths):
        """log V_N vs log lag over lags 1..100 has slope near 2H = 1.2."""
        lags = np.unique(np.geomspace(1, 100, 25).astype(int))
        slopes = []
        for path in fbm06_paths:
            v = [empirical_variogram(path, int(lag)) for lag in lags]
            slopes.append(np.polyfit(np.log(lags), np.log(v), 1)[0])
        assert abs(np.mean(slopes) - 2 * FBM06["hurst"]) <= 0.1

    def test_sample_covariance_matches_model(self):
        """Entrywise agreement with the exact covariance within 5 standard errors."""
        model = ModelSpec(hurst=(0.3, 0.7), sigma=(1.0, 0.5), omega=(2.0,))
        n, draws = 24, 50_000
        sampler = PathSampler(model, n, 0.21)
        z = standard_normals(n * draws, seed=17).reshape(n, draws)
        sample = sampler._lower @ z
        emp = (sample @ sample.T) / draws
        cov = covariance_matrix(model, 0.21 * np.arange(1, n + 1))
        se = np.sqrt((np.outer(np.diag(cov), np.diag(cov)) + cov**2) / draws)
        assert np.max(np.abs(emp - cov) / se) <= 5.0

    def test_stationary_increments(self):
        """Variance of the lag-4 increment does not depend on its position."""
        model = ModelSpec(hurst=(0.25, 0.6), sigma=(1.0, 1.0), omega=(1.0,))
        n, draws, lag, groups = 64, 4000, 4, 6
        sampler = PathSampler(model, n, 0.1)
        z = standard_normals(n * draws, seed=23).reshape(n, draws)
        sample = sampler._lower @ z
        inc = sample[lag:, :] - sample[:-lag, :]
        positions = np.linspace(0, inc.shape[0] - 1, groups).astype(int)
        variances = inc[positions].var(axis=1, ddof=1)
        # Bartlett-style homogeneity statistic ~ chi2(groups - 1) under equality
        pooled = variances.mean()
        stat = draws * np.sum(np.log(pooled / variances) + variances / pooled - 1.0)
        from mfbm.inference import chi2_upper_tail

        assert chi2_upper_tail(float(stat), groups - 1) > 0.01
