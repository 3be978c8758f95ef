from fractions import Fraction

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qmix.bayes import Povm, orthogonal_mse
from qmix.errors import ArgumentError, RankDeficiencyError
from qmix.hermitian import min_eigenvalue
from qmix.mixture import (commuting_pair, density_to_bloch, multicopy_expand, orthogonal_mixture, qubit_pair,
                          symmetric_pure_pair)
from qmix.pointwise import (PointwiseModel, asymptotic_bayes_error, commuting_asymptotic_error, commuting_exact_error,
                            eliminate, elimination_matrix, fisher_info, orthogonal_asymptotic_error,
                            project_and_invert, pure_pair_asymptotic_error, pure_pair_qfi, qfi_pointwise,
                            qubit_pair_asymptotic_error, qubit_pair_asymptotic_error_trace, two_state_qfi_bloch)
from qmix.prior import Prior, simplex_average

from .conftest import random_mixture, random_point


def random_bloch(rng, max_length=0.95):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v) * rng.uniform(0.1, max_length)


class TestPointwiseModel:

    def test_partials(self, rng):
        mix = random_mixture(rng, 3, 2)
        model = PointwiseModel.at(mix, random_point(rng, 3))
        for r in range(3):
            assert_allclose(model.partials[r], mix.components[r], atol=0)

    def test_multicopy_partials(self, rng):
        mix = random_mixture(rng, 2, 2)
        lam = random_point(rng, 2)
        model = PointwiseModel.at(multicopy_expand(mix, 2), lam)
        rho = mix.state(lam)
        d0 = np.kron(mix.components[0], rho) + np.kron(rho, mix.components[0])
        assert_allclose(model.partials[0], d0, atol=1e-12)

    def test_boundary(self, orthogonal_qubits):
        with pytest.raises(ArgumentError):
            PointwiseModel.at(orthogonal_qubits, [1.0, 0.0])

    def test_elimination_matrix(self):
        J = elimination_matrix(3, 0)
        assert_allclose(J, [[-1, -1], [1, 0], [0, 1]], atol=0)
        with pytest.raises(ArgumentError):
            elimination_matrix(3, 3)


class TestProjection:

    def test_matches_elimination(self, rng):
        mix = random_mixture(rng, 3, 2)
        H = qfi_pointwise(PointwiseModel.at(mix, random_point(rng, 3)))
        projected = project_and_invert(H)
        for drop in range(3):
            J = elimination_matrix(3, drop)
            assert_allclose(projected.pseudo_inverse, J @ np.linalg.inv(eliminate(H, drop)) @ J.T, atol=1e-9)
        assert_allclose(projected.pseudo_inverse @ np.ones(3), 0, atol=1e-10)

    def test_rank_deficient(self, four_states):
        H = qfi_pointwise(PointwiseModel.at(four_states, np.full(4, 0.25)))
        with pytest.raises(RankDeficiencyError):
            project_and_invert(H)

    def test_orthogonal(self):
        lam = np.array([0.2, 0.3, 0.5])
        H = qfi_pointwise(PointwiseModel.at(orthogonal_mixture(3), lam))
        assert_allclose(project_and_invert(H).pseudo_inverse, np.diag(lam) - np.outer(lam, lam), atol=1e-12)


class TestInformation:

    def test_braunstein_caves(self, rng):
        for _ in range(20):
            mix = random_mixture(rng, 3, 3)
            model = PointwiseModel.at(mix, random_point(rng, 3))
            povm = Povm.from_basis(np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))[0])
            gap = qfi_pointwise(model) - fisher_info(model, povm)
            assert min_eigenvalue(eliminate(gap).astype(complex)) >= -1e-8

    def test_qfi_additivity(self, rng):
        mix = random_mixture(rng, 3, 2)
        lam = random_point(rng, 3)
        H1 = eliminate(qfi_pointwise(PointwiseModel.at(mix, lam)))
        for N in (2, 3):
            HN = eliminate(qfi_pointwise(PointwiseModel.at(multicopy_expand(mix, N), lam)))
            assert_allclose(HN, N * H1, rtol=1e-8, atol=1e-10)

    def test_fisher_additivity(self, rng):
        mix = random_mixture(rng, 2, 2)
        lam = random_point(rng, 2)
        povm = Povm.from_basis(np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))[0])
        F1 = eliminate(fisher_info(PointwiseModel.at(mix, lam), povm))
        F2 = eliminate(fisher_info(PointwiseModel.at(multicopy_expand(mix, 2), lam), povm.tensor_power(2)))
        assert_allclose(F2, 2 * F1, rtol=1e-8, atol=1e-10)

    def test_dimension_mismatch(self, orthogonal_qubits):
        with pytest.raises(ArgumentError):
            fisher_info(PointwiseModel.at(orthogonal_qubits, [0.5, 0.5]), Povm.computational(3))


class TestTwoComponentForms:

    def test_bloch_qfi(self, rng):
        for _ in range(10):
            r1, r2 = random_bloch(rng), random_bloch(rng)
            lam = rng.uniform(0.1, 0.9)
            H = eliminate(qfi_pointwise(PointwiseModel.at(qubit_pair(r1, r2), [lam, 1 - lam])))
            assert_allclose(H[0, 0], two_state_qfi_bloch(r1, r2, lam), rtol=1e-9)

    @pytest.mark.parametrize('theta', [0.3, 0.7, 1.2])
    def test_pure_pair_qfi(self, theta):
        lam = 0.3
        H = eliminate(qfi_pointwise(PointwiseModel.at(symmetric_pure_pair(theta), [lam, 1 - lam])))
        assert_allclose(H[0, 0], pure_pair_qfi(np.cos(theta), lam), rtol=1e-9)

    def test_bloch_and_trace_forms(self, rng):
        for _ in range(10):
            mix = qubit_pair(random_bloch(rng), random_bloch(rng))
            r1, r2 = (density_to_bloch(rho) for rho in mix.components)
            assert_allclose(qubit_pair_asymptotic_error(r1, r2), qubit_pair_asymptotic_error_trace(*mix.components),
                            rtol=1e-10)

    @pytest.mark.parametrize('eps', [0.2, 0.5, 0.9])
    def test_commuting_limit(self, eps):
        assert_allclose(qubit_pair_asymptotic_error([0, 0, 1 - 2 * eps], [0, 0, 1]), commuting_asymptotic_error(eps),
                        atol=1e-12)
        assert_allclose(qubit_pair_asymptotic_error_trace(*commuting_pair(eps).components),
                        commuting_asymptotic_error(eps), atol=1e-12)

    @pytest.mark.parametrize('theta', [0.4, 0.9])
    def test_pure_limit(self, theta):
        r1, r2 = [np.sin(theta), 0, np.cos(theta)], [-np.sin(theta), 0, np.cos(theta)]
        assert_allclose(qubit_pair_asymptotic_error(r1, r2), pure_pair_asymptotic_error(np.cos(theta)), rtol=1e-10)

    def test_averaged_pointwise_matches_closed_form(self, rng):
        r1, r2 = random_bloch(rng, 0.8), random_bloch(rng, 0.8)
        mix = qubit_pair(r1, r2)

        def integrand(lam):
            return 1 / eliminate(qfi_pointwise(PointwiseModel.at(mix, lam)))[0, 0]

        value = simplex_average(integrand, 2, 64, extrapolate=True)
        assert_allclose(value, qubit_pair_asymptotic_error(r1, r2), rtol=1e-5)


class TestAsymptoticError:

    @pytest.mark.parametrize('M', [2, 3])
    def test_orthogonal(self, M):
        avg = asymptotic_bayes_error(orthogonal_mixture(M), resolution=8, extrapolate=True)
        assert_allclose(np.trace(avg), float(orthogonal_asymptotic_error(M)), atol=1e-10)
        assert orthogonal_asymptotic_error(3) == Fraction(1, 2)

    def test_scales_with_copies(self, orthogonal_qubits):
        one = asymptotic_bayes_error(orthogonal_qubits, resolution=8)
        assert_allclose(asymptotic_bayes_error(orthogonal_qubits, N=4, resolution=8), one / 4, atol=1e-15)

    def test_dirichlet_prior(self, orthogonal_qubits):
        # <lambda (1 - lambda)> = 0.4 - 0.2 under Beta(2, 3)
        avg = asymptotic_bayes_error(orthogonal_qubits, Prior.dirichlet([2, 3]), resolution=64, extrapolate=True)
        assert_allclose(avg[0, 0], 0.2, atol=1e-5)

    def test_unidentifiable(self, four_states):
        with pytest.raises(RankDeficiencyError):
            asymptotic_bayes_error(four_states, resolution=4)


class TestCommutingExact:

    @pytest.mark.parametrize('N', range(1, 11))
    def test_orthogonal_limit(self, N):
        assert_allclose(commuting_exact_error(1, N), float(orthogonal_mse(2, N)) / 2, atol=1e-12)

    def test_single_copy(self):
        # N = 1: Delta = 1/12 - (1/4) sum B^2 / A with A = (1 - eps/2, eps/2), B = (1/2 - eps/3, eps/3) * 2 - A
        eps = 0.5
        a = np.array([1 - eps / 2, eps / 2])
        b = 2 * np.array([1 / 2 - eps / 3, eps / 3]) - a
        assert_allclose(commuting_exact_error(eps, 1), 1 / 12 - np.sum(b ** 2 / a) / 4, atol=1e-14)

    @pytest.mark.slow
    @pytest.mark.parametrize('eps', [0.3, 0.5, 0.7])
    def test_asymptotic(self, eps):
        N = 256
        assert abs(N * commuting_exact_error(eps, N) - commuting_asymptotic_error(eps)) <= 0.02

    def test_arguments(self):
        with pytest.raises(ArgumentError):
            commuting_exact_error(0, 4)
        with pytest.raises(ArgumentError):
            commuting_exact_error(0.5, 0)
