from fractions import Fraction

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate

from qmix.errors import ArgumentError, PriorError
from qmix.mixture import CoefficientPolynomial, multicopy_expand, occupation_vectors, orthogonal_mixture, qubit_pair
from qmix.pointwise import occupation_sum_check
from qmix.prior import (Prior, dirichlet_moment, dirichlet_moment_exact, flat_average_polynomial,
                        flat_linear_covariance, flat_multicopy_cross, prior_moments, simplex_average, simplex_grid,
                        simplex_quadrature)


class TestDirichletMoments:

    def test_exact(self):
        assert dirichlet_moment_exact((1, 1)) == Fraction(1, 6)
        assert dirichlet_moment_exact((1, 2, 0)) == Fraction(1, 60)

    @pytest.mark.parametrize('k', [(0, 0), (1, 0), (3, 2), (2, 2)])
    def test_one_dimensional_integral(self, k):
        value, _ = integrate.quad(lambda x: x ** k[0] * (1 - x) ** k[1], 0, 1)
        assert_allclose(float(dirichlet_moment_exact(k)), value, atol=1e-10)

    @pytest.mark.parametrize('k', [(1, 2, 0), (3, 0, 1), (2, 2, 2), (0, 0, 0)])
    def test_nested_integral(self, k):
        value, _ = integrate.dblquad(lambda y, x: x ** k[0] * y ** k[1] * (1 - x - y) ** k[2],
                                     0, 1, 0, lambda x: 1 - x)
        assert_allclose(float(dirichlet_moment_exact(k)), value, atol=1e-10)

    def test_large_exponents_use_log_gamma(self):
        k = (30, 25, 10)
        expected = np.exp(sum(np.log(np.arange(1, kr + 1)).sum() for kr in k) - np.log(np.arange(1, 68)).sum())
        assert_allclose(dirichlet_moment(k), expected, rtol=1e-10)

    def test_negative_exponent(self):
        with pytest.raises(ArgumentError):
            dirichlet_moment_exact((-1, 2))

    def test_flat_average(self):
        # <lambda_1^2> = 1/6 for three weights
        assert_allclose(flat_average_polynomial(CoefficientPolynomial.monomial((2, 0, 0))), 1 / 6, atol=1e-15)


class TestQuadrature:

    def test_cell_count(self):
        assert sum(len(c) for c in simplex_grid(3, 10)) == 100
        assert sum(len(c) for c in simplex_grid(4, 6)) == 216

    def test_points_on_simplex(self):
        for chunk in simplex_grid(4, 5):
            assert np.all(chunk > 0)
            assert_allclose(chunk.sum(axis=1), 1, atol=1e-12)

    @pytest.mark.parametrize('M', [2, 3, 4])
    def test_exact_for_linear(self, M):
        assert_allclose(simplex_quadrature(lambda x: np.ones(len(x)), M, 8), 1.0, atol=1e-12)
        assert_allclose(simplex_quadrature(lambda x: x, M, 8), np.full(M, 1 / M), atol=1e-12)

    def test_converges_to_moment(self):
        value = simplex_quadrature(lambda x: x[:, 0] ** 2 * x[:, 1], 3, 60)
        exact = flat_average_polynomial(CoefficientPolynomial.monomial((2, 1, 0)))
        assert_allclose(value, exact, rtol=5e-3)

    def test_error_shrinks_with_resolution(self):
        exact = 2 * (np.e - 2)
        errors = [abs(simplex_quadrature(lambda x: np.exp(x[:, 0]), 3, n) - exact) for n in (4, 8, 16, 32)]
        assert all(b <= a for a, b in zip(errors, errors[1:]))

    def test_extrapolation(self):
        # midpoint error for x^2 is exactly -1/(12 n^2), removed by one Richardson step
        value = simplex_average(lambda lam: lam[0] ** 2, 2, 8, extrapolate=True)
        assert_allclose(value, 1 / 3, atol=1e-12)

    def test_resolution(self):
        with pytest.raises(ArgumentError):
            next(simplex_grid(3, 1))


class TestPrior:

    def test_dirichlet_validation(self):
        with pytest.raises(PriorError):
            Prior.dirichlet([0.5, 2.0])
        assert Prior.dirichlet([1, 1, 1]).is_flat

    def test_custom_normalization(self):
        with pytest.raises(PriorError):
            Prior.custom(2, lambda x: 2 * np.ones(len(x)), resolution=20)
        prior = Prior.custom(2, lambda x: 6 * x[:, 0] * x[:, 1], resolution=50)
        assert not prior.is_flat

    def test_flat_sampling(self, rng):
        samples = Prior.flat(3).sample(rng, 20000)
        assert_allclose(samples.sum(axis=1), 1, atol=1e-12)
        assert_allclose(samples.mean(axis=0), np.full(3, 1 / 3), atol=0.01)

    def test_custom_sampling_refused(self, rng):
        prior = Prior.custom(2, lambda x: 6 * x[:, 0] * x[:, 1], resolution=50)
        with pytest.raises(PriorError):
            prior.sample(rng, 10)


class TestMoments:

    @pytest.mark.parametrize('M', [2, 3, 4])
    def test_flat_covariance(self, M):
        moments = prior_moments(Prior.flat(M), orthogonal_mixture(M))
        assert_allclose(moments.mean, np.full(M, 1 / M), atol=1e-15)
        assert_allclose(moments.covariance, flat_linear_covariance(M), atol=1e-15)

    def test_flat_multicopy_cross(self):
        M, N = 3, 2
        expanded = multicopy_expand(orthogonal_mixture(M), N)
        moments = prior_moments(Prior.flat(M), expanded)
        expected = flat_multicopy_cross(M, N, list(occupation_vectors(M, N)))
        assert_allclose(moments.cross, expected, atol=1e-14)

    def test_dirichlet(self):
        mix = qubit_pair([0, 0, 1], [1, 0, 0])
        moments = prior_moments(Prior.dirichlet([2, 3]), mix)
        assert_allclose(moments.mean, [0.4, 0.6], atol=1e-14)
        assert_allclose(moments.covariance[0, 0], 0.04, atol=1e-14)

    def test_custom_matches_dirichlet(self):
        mix = qubit_pair([0, 0, 1], [1, 0, 0])
        custom = Prior.custom(2, lambda x: 12 * x[:, 0] * x[:, 1] ** 2, resolution=400)
        moments = prior_moments(custom, mix, resolution=400)
        assert_allclose(moments.mean, [0.4, 0.6], atol=1e-5)
        assert_allclose(moments.covariance[0, 0], 0.04, atol=1e-5)

    def test_size_mismatch(self):
        with pytest.raises(ArgumentError):
            prior_moments(Prior.flat(3), orthogonal_mixture(2))


class TestOccupationSum:

    @pytest.mark.parametrize('M', range(1, 6))
    @pytest.mark.parametrize('N', range(1, 6))
    def test_formula(self, M, N):
        occupation_sum_check(M, N)

    def test_small_value(self):
        assert occupation_sum_check(2, 2) == 10
