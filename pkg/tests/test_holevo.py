import dataclasses

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qmix.errors import ArgumentError, InternalConsistencyError, RankDeficiencyError
from qmix.holevo import (LocalModel, averaged_holevo_mse, check_redundant, cr_holevo_relation_check,
                         eliminated_weight, holevo_bound, holevo_objective, reparametrize, solve_constraints,
                         tetrahedron_im_integrand, tetrahedron_objective, tetrahedron_re_average,
                         tetrahedron_x_operators, tetrahedron_z_matrix, unidentifiable_error, z_matrix)
from qmix.mixture import orthogonal_mixture
from qmix.pointwise import PointwiseModel, eliminate, qfi_pointwise
from qmix.prior import simplex_quadrature

from .conftest import random_mixture, random_point


class TestConstraints:

    def test_satisfied(self, rng):
        mix = random_mixture(rng, 3, 3)
        model = PointwiseModel.at(mix, random_point(rng, 3))
        family = solve_constraints(model)
        free = rng.normal(size=family.free_dim)
        partials = model.eliminated_partials()
        for X in (family.particular, family.operators(free)):
            for r, Xr in enumerate(X):
                assert_allclose(Xr, Xr.conj().T, atol=1e-12)
                assert_allclose(np.trace(model.state @ Xr).real, 0, atol=1e-10)
                for s, D in enumerate(partials):
                    assert_allclose(np.trace(D @ Xr).real, float(r == s), atol=1e-10)

    def test_free_dimension(self, rng, tetrahedron):
        assert solve_constraints(PointwiseModel.at(tetrahedron, random_point(rng, 4))).free_dim == 0
        # qutrit: 9 operator coordinates, 3 constraints per row, 2 rows
        qutrit = PointwiseModel.at(random_mixture(rng, 3, 3), random_point(rng, 3))
        assert solve_constraints(qutrit).free_dim == 12

    def test_unidentifiable(self, four_states):
        with pytest.raises(RankDeficiencyError):
            solve_constraints(PointwiseModel.at(four_states, np.full(4, 0.25)))


class TestTetrahedron:

    def test_x_operators(self, rng, tetrahedron):
        for _ in range(5):
            lam = random_point(rng, 4)
            family = solve_constraints(PointwiseModel.at(tetrahedron, lam))
            for X, Y in zip(family.particular, tetrahedron_x_operators(lam)):
                assert_allclose(X, Y, atol=1e-9)

    def test_z_matrix(self, rng, tetrahedron):
        lam = random_point(rng, 4)
        model = PointwiseModel.at(tetrahedron, lam)
        z = z_matrix(model, tetrahedron_x_operators(lam))
        expected = tetrahedron_z_matrix(lam)
        assert_allclose(z.re, expected.re, atol=1e-12)
        assert_allclose(z.im, expected.im, atol=1e-12)
        assert_allclose(holevo_objective(np.eye(3), z), tetrahedron_objective(lam), atol=1e-12)

    def test_holevo_bound(self, rng, tetrahedron):
        for _ in range(20):
            lam = random_point(rng, 4)
            result = holevo_bound(PointwiseModel.at(tetrahedron, lam))
            assert result.free_dim == 0
            assert result.converged
            assert_allclose(result.value, tetrahedron_objective(lam), atol=1e-9)

    def test_relation(self, rng, tetrahedron):
        for _ in range(20):
            check = cr_holevo_relation_check(PointwiseModel.at(tetrahedron, random_point(rng, 4)))
            assert check.distance < 1e-8
        assert cr_holevo_relation_check(PointwiseModel.at(tetrahedron, np.full(4, 0.25))).max_commutator > 0.1

    def test_re_average(self):
        assert_allclose(tetrahedron_re_average(), 63 / 40, atol=1e-12)

    @pytest.mark.slow
    def test_im_average(self):
        im = simplex_quadrature(tetrahedron_im_integrand, 4, 200)
        assert_allclose(im, 0.43, atol=5e-3)
        assert abs(tetrahedron_re_average() + im - 2.01) <= 0.01

    @pytest.mark.slow
    def test_engine_average(self, tetrahedron):
        averaged = averaged_holevo_mse(tetrahedron, resolution=16, extrapolate=True)
        exact = tetrahedron_re_average() + simplex_quadrature(tetrahedron_im_integrand, 4, 100)
        assert_allclose(averaged.coefficient, exact, atol=0.01)
        assert_allclose(averaged.re_part, 63 / 40, atol=1e-6)
        assert 'heuristic' in averaged.caveat


class TestHolevoBound:

    def test_dominates_cr(self, rng):
        for _ in range(3):
            model = PointwiseModel.at(random_mixture(rng, 3, 3), random_point(rng, 3))
            cr = np.trace(np.linalg.inv(eliminate(qfi_pointwise(model))))
            result = holevo_bound(model, restarts=2)
            assert result.value >= cr - 1e-8
            assert result.value <= 2 * cr + 1e-8

    def test_commuting_model_equals_cr(self, rng):
        model = PointwiseModel.at(orthogonal_mixture(3), random_point(rng, 3))
        cr = np.trace(np.linalg.inv(eliminate(qfi_pointwise(model))))
        result = holevo_bound(model, restarts=2)
        assert_allclose(result.value, cr, atol=1e-8)
        assert_allclose(result.im_part, 0, atol=1e-8)

    def test_elimination_invariance(self, rng, tetrahedron):
        model = PointwiseModel.at(tetrahedron, random_point(rng, 4))
        values = [holevo_bound(model, eliminated_weight(np.eye(4), d), drop_index=d).value for d in range(4)]
        assert_allclose(values, values[0], atol=1e-9)

    def test_weight_shape(self, rng, tetrahedron):
        with pytest.raises(ArgumentError):
            holevo_bound(PointwiseModel.at(tetrahedron, random_point(rng, 4)), np.eye(4))

    def test_local_model(self, rng):
        model = PointwiseModel.at(random_mixture(rng, 2, 2), random_point(rng, 2))
        local = LocalModel.from_pointwise(model)
        assert local.n_params == 1
        # one parameter: the bound is the inverse QFI
        assert_allclose(holevo_bound(local).value, 1 / eliminate(qfi_pointwise(model))[0, 0], rtol=1e-8)


class TestUnidentifiable:

    def test_reparametrization(self, rng, four_states):
        rep = reparametrize(four_states)
        assert rep.informative_count == 2
        assert rep.redundant_directions.shape == (1, 4)
        assert_allclose(abs(rep.redundant_directions[0] @ np.array([1, 1, -1, -1]) / 2), 1, atol=1e-10)
        O = rep.orthogonal_map
        assert_allclose(O @ O.T, np.eye(4), atol=1e-10)
        lam = random_point(rng, 4)
        assert_allclose(rep.state(rep.xi(lam)), four_states.state(lam), atol=1e-12)

    def test_identifiable_has_no_redundancy(self, tetrahedron):
        rep = reparametrize(tetrahedron)
        assert rep.informative_count == 3
        assert rep.redundant_directions.shape == (0, 4)

    def test_holevo_on_informative_coordinates(self, rng, four_states):
        rep = reparametrize(four_states)
        for _ in range(10):
            lam = random_point(rng, 4)
            xi = rep.xi(lam)
            assert_allclose(holevo_bound(rep.local_model(lam)).value, 1 - xi @ xi, atol=1e-4)

    def test_intrinsic_error(self, four_states):
        result = unidentifiable_error(four_states, resolution=2, restarts=1)
        assert_allclose(result.intrinsic, 1 / 20, atol=1e-10)
        assert_allclose(result.total, result.intrinsic + result.asymptotic_coeff, atol=1e-15)

    @pytest.mark.slow
    def test_asymptotic_coefficient(self, four_states):
        result = unidentifiable_error(four_states, N=10, resolution=8, extrapolate=True)
        assert_allclose(result.asymptotic_coeff, 9 / 10, atol=1e-3)
        assert_allclose(result.total, 1 / 20 + 9 / 100, atol=1e-4)

    def test_copies(self, four_states):
        with pytest.raises(ArgumentError):
            unidentifiable_error(four_states, N=0)

    def test_state_constant_along_redundant_direction(self, rng, four_states):
        eta = reparametrize(four_states).redundant_directions[0]
        for _ in range(10):
            lam = random_point(rng, 4)
            for t in (-0.01, 0.01):
                assert np.linalg.norm(four_states.state(lam + t * eta) - four_states.state(lam)) < 1e-10

    def test_check_redundant(self, four_states):
        stack = four_states.stacked
        check_redundant(reparametrize(four_states).redundant_directions, stack)
        with pytest.raises(InternalConsistencyError):
            check_redundant(np.array([[1.0, -1.0, 0.0, 0.0]]) / np.sqrt(2), stack)


def rotated(family, rng):
    n0 = family.null_coefficients.shape[1]
    Q, _ = np.linalg.qr(rng.normal(size=(n0, n0)))
    null = family.null_coefficients @ Q
    return dataclasses.replace(family, null_coefficients=null,
                               null_basis=tuple(np.tensordot(null.T, family.basis, axes=1)))


class TestNullBasisInvariance:

    @pytest.mark.parametrize('M', [2, 3])
    def test_qubit_mixtures(self, rng, M):
        for _ in range(3):
            model = PointwiseModel.at(random_mixture(rng, M, 2), random_point(rng, M))
            family = solve_constraints(model)
            assert family.free_dim > 0
            expected = holevo_bound(model, family=family).value
            assert_allclose(holevo_bound(model, family=rotated(family, rng)).value, expected, atol=1e-8)

    def test_informative_coordinates(self, rng, four_states):
        rep = reparametrize(four_states)
        for _ in range(3):
            local = rep.local_model(random_point(rng, 4))
            family = solve_constraints(local)
            expected = holevo_bound(local, family=family).value
            assert_allclose(holevo_bound(local, family=rotated(family, rng)).value, expected, atol=1e-8)
