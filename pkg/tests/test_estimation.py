"""Tests for the likelihood, MLE and MOM estimators."""

import logging

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.optimize import minimize as scipy_minimize

from sphdir.core.distribution import log_density, mean, uniform_density
from sphdir.core.estimation import (
    SampleMatrix,
    fit,
    fit_mle,
    fit_mom,
    neg_log_likelihood,
    nll_gradient,
    norm_error_pct,
    stationarity_residual,
)
from sphdir.core.sampling import RandomSource, sample_sdd
from sphdir.exceptions import DataError, DimensionMismatchError, DomainError, NotOnSphereError
from sphdir.schemas.estimation import FitMethod, MethodChoice, Tolerances
from tests.conftest import TABLE1_ALPHAS


def _exact_moments(alpha):
    summary = mean(alpha)
    return SampleMatrix.from_moments(summary.mean, summary.second_raw)


class TestSampleMatrix:
    def test_statistics(self):
        rows = np.array([[0.6, 0.8], [0.8, 0.6], [1.0, 0.0]])
        data = SampleMatrix.from_rows(rows)
        assert (data.n, data.p) == (3, 2)
        assert_allclose(data.moments1, rows.mean(axis=0))
        assert_allclose(data.moments2, (rows**2).mean(axis=0))
        assert data.suffstats[0] == pytest.approx(np.log(0.6) + np.log(0.8))
        assert data.suffstats[1] == -np.inf
        assert data.has_zeros

    def test_rows_are_read_only(self):
        data = SampleMatrix.from_rows([[0.6, 0.8]])
        with pytest.raises(ValueError):
            data.rows[0, 0] = 1.0

    def test_off_sphere(self):
        with pytest.raises(NotOnSphereError):
            SampleMatrix.from_rows([[0.6, 0.8], [0.5, 0.5]])

    def test_single_column(self):
        with pytest.raises(DimensionMismatchError):
            SampleMatrix.from_rows([[1.0], [1.0]])

    def test_from_moments_has_no_likelihood(self):
        data = _exact_moments((2.0, 3.0))
        with pytest.raises(DataError):
            fit_mle(data)


class TestLikelihood:
    """Negative log-likelihood and its gradient."""

    def test_matches_sum_of_log_densities(self, sample_222):
        for alpha in [(2.0, 2.0, 2.0), (0.7, 3.0, 12.0)]:
            expected = -np.sum(log_density(sample_222.rows, alpha))
            assert neg_log_likelihood(alpha, sample_222) == pytest.approx(expected, rel=1e-10)

    def test_gradient_against_finite_differences(self):
        """Central differences on 50 random (alpha, data) instances, relative error <= 1e-6."""
        rng = np.random.default_rng(314)
        for i in range(50):
            p = int(rng.integers(2, 6))
            data = sample_sdd(rng.uniform(0.5, 10.0, size=p), 50, RandomSource(1000 + i))
            alpha = rng.uniform(0.5, 10.0, size=p)
            grad = nll_gradient(alpha, data)
            fd = np.empty(p)
            for k in range(p):
                h = 1e-5 * alpha[k]
                up, down = alpha.copy(), alpha.copy()
                up[k] += h
                down[k] -= h
                fd[k] = (neg_log_likelihood(up, data) - neg_log_likelihood(down, data)) / (2 * h)
            assert np.linalg.norm(fd - grad) / max(np.linalg.norm(grad), 1.0) <= 1e-6

    def test_stationarity_residual_is_per_observation_gradient(self, sample_222):
        alpha = (1.0, 2.0, 3.0)
        assert_allclose(stationarity_residual(alpha, sample_222), nll_gradient(alpha, sample_222) / sample_222.n)

    @pytest.mark.parametrize("p", [2, 3, 6])
    def test_uniform_likelihood_ignores_data(self, p):
        """At alpha = 1/2 the sufficient statistics drop out: -log L = -n ln(uniform density)."""
        alpha = (0.5,) * p
        first = sample_sdd((2.0,) + (5.0,) * (p - 1), 200, RandomSource(11))
        second = sample_sdd((0.7,) * p, 200, RandomSource(12))
        expected = -200 * np.log(uniform_density(p))
        assert neg_log_likelihood(alpha, first) == pytest.approx(expected, rel=1e-12)
        assert neg_log_likelihood(alpha, second) == pytest.approx(expected, rel=1e-12)

    def test_zero_coordinates(self):
        data = SampleMatrix.from_rows([[0.6, 0.8], [1.0, 0.0]])
        with pytest.raises(DataError, match="log-shift"):
            neg_log_likelihood((1.0, 1.0), data)

    def test_dimension_mismatch(self, sample_222):
        with pytest.raises(DimensionMismatchError):
            nll_gradient((1.0, 1.0), sample_222)


def test_norm_error_pct():
    assert norm_error_pct((2.1, 2.0, 2.0), (2.0, 2.0, 2.0)) == pytest.approx(100 * 0.1 / np.sqrt(12.0), rel=1e-12)
    with pytest.raises(DimensionMismatchError):
        norm_error_pct((1.0, 1.0), (1.0, 1.0, 1.0))


class TestMOM:
    """Method of moments: exact recovery from analytic moments and behaviour on samples."""

    @pytest.mark.parametrize(
        "alpha",
        [
            (2.0, 3.5),
            (0.3, 7.0),
            (2.0, 2.0, 2.0),
            (5.0, 15.0, 2.0),
            (0.5, 0.5, 2.0),
            (4.0, 0.8, 1.5, 9.0, 0.25),
            (1.2817, 0.41, 0.63, 0.52, 0.47, 0.58, 0.61, 0.77, 0.69),
        ],
    )
    def test_exact_moments_recover_alpha(self, alpha):
        result = fit_mom(_exact_moments(alpha), Tolerances(delta=1e-13))
        assert result.converged
        assert_allclose(result.alpha_hat.array, alpha, rtol=1e-8)
        assert result.method is FitMethod.MOM
        assert result.log_likelihood is None

    def test_auto_moment_coordinate(self):
        alpha = (0.7, 6.0, 2.0)
        result = fit_mom(_exact_moments(alpha), Tolerances(delta=1e-13), moment_coordinate="auto")
        assert_allclose(result.alpha_hat.array, alpha, rtol=1e-8)

    def test_unaccelerated_iteration(self):
        alpha = (2.0, 5.0, 3.0)
        tol = Tolerances(delta=1e-10, mom_accelerate=False, mom_max_iter=50_000)
        plain = fit_mom(_exact_moments(alpha), tol)
        fast = fit_mom(_exact_moments(alpha), Tolerances(delta=1e-10))
        assert plain.converged and fast.converged
        assert_allclose(plain.alpha_hat.array, alpha, rtol=1e-6)
        assert fast.iterations < plain.iterations

    def test_non_convergence_is_reported(self, caplog):
        tol = Tolerances(mom_max_iter=1, mom_accelerate=False)
        with caplog.at_level(logging.WARNING):
            result = fit_mom(_exact_moments((2.0, 3.0, 4.0)), tol)
        assert not result.converged
        assert result.termination_reason == "max_iter"
        assert result.iterations == 1
        assert "did not converge" in caplog.text

    @pytest.mark.parametrize("rows", [[[0.6, 0.8]], [[0.6, 0.8]] * 5], ids=["single-row", "identical-rows"])
    def test_zero_variance(self, rows):
        with pytest.raises(DataError, match="zero sample variance"):
            fit_mom(SampleMatrix.from_rows(rows))

    def test_mle_restart_skips_degenerate_moments(self, caplog):
        """MLE on one row still returns; the MOM restart is refused instead of iterating."""
        data = SampleMatrix.from_rows([[0.6, 0.8]])
        with caplog.at_level(logging.WARNING):
            result = fit_mle(data, tolerances=Tolerances(max_iter=20))
        assert result.method is FitMethod.MLE
        assert "MOM restart unavailable" in caplog.text

    def test_impossible_moments(self):
        with pytest.raises(DomainError):
            fit_mom(SampleMatrix.from_moments([1.2, 0.3], [0.5, 0.5]))

    def test_bad_coordinate(self):
        with pytest.raises(DomainError):
            fit_mom(_exact_moments((2.0, 3.0)), moment_coordinate=5)

    def test_sample_fit_has_log_likelihood(self, sample_222):
        result = fit_mom(sample_222, truth=(2.0, 2.0, 2.0))
        assert result.log_likelihood == pytest.approx(-neg_log_likelihood(result.alpha_hat, sample_222))
        assert result.norm_error_vs_truth < 5.0


class TestMLE:
    def test_stationary_at_optimum(self, sample_222):
        result = fit_mle(sample_222)
        assert result.converged
        assert result.method is FitMethod.MLE
        assert np.max(np.abs(stationarity_residual(result.alpha_hat, sample_222))) < 1e-6
        assert result.log_likelihood == pytest.approx(-neg_log_likelihood(result.alpha_hat, sample_222), rel=1e-12)

    def test_agrees_with_scipy(self, sample_222):
        ours = fit_mle(sample_222)
        n = sample_222.n

        def objective(a):
            return neg_log_likelihood(a, sample_222) / n, nll_gradient(a, sample_222) / n

        ref = scipy_minimize(objective, np.ones(3), jac=True, method="L-BFGS-B", bounds=[(1e-6, None)] * 3,
                             options={"gtol": 1e-10, "ftol": 1e-15})
        assert_allclose(ours.alpha_hat.array, ref.x, rtol=1e-4)

    def test_start_dimension(self, sample_222):
        with pytest.raises(DimensionMismatchError):
            fit_mle(sample_222, start=(1.0, 1.0))

    def test_few_observations_warns(self, caplog):
        data = sample_sdd((2.0, 3.0, 4.0, 5.0), 3, RandomSource(5))
        with caplog.at_level(logging.WARNING):
            fit_mle(data, tolerances=Tolerances(max_iter=50))
        assert "n = 3 observations for p = 4" in caplog.text

    def test_zero_coordinates(self):
        data = SampleMatrix.from_rows([[0.6, 0.8], [1.0, 0.0], [0.8, 0.6]])
        with pytest.raises(DataError, match="log-shift"):
            fit_mle(data)


class TestRecovery:
    """The four simulation scenarios at n = 10^4."""

    @pytest.mark.parametrize("index", range(len(TABLE1_ALPHAS)))
    def test_both_estimators_within_five_percent(self, index, table1_samples):
        alpha = TABLE1_ALPHAS[index]
        mom, mle = fit(table1_samples[index], MethodChoice.BOTH, truth=alpha)
        assert mom.method is FitMethod.MOM and mle.method is FitMethod.MLE
        assert mom.converged and mle.converged
        assert mom.norm_error_vs_truth <= 5.0
        assert mle.norm_error_vs_truth <= 5.0
        assert mle.iterations <= 100

    @pytest.mark.parametrize("index", range(len(TABLE1_ALPHAS)))
    def test_mle_likelihood_dominates_mom(self, index, table1_samples):
        mom, mle = fit(table1_samples[index], MethodChoice.BOTH)
        assert mle.log_likelihood >= mom.log_likelihood - 1e-9 * abs(mom.log_likelihood)

    def test_mom_and_mle_agree_on_large_sample(self):
        data = sample_sdd((2.0, 5.0, 3.0), 100_000, RandomSource(77))
        mom, mle = fit(data, "both")
        distance = np.linalg.norm(mom.alpha_hat.array - mle.alpha_hat.array) / np.linalg.norm(mle.alpha_hat.array)
        assert distance <= 0.02

    def test_single_method(self, sample_222):
        results = fit(sample_222, MethodChoice.MLE)
        assert [r.method for r in results] == [FitMethod.MLE]
