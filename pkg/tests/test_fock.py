# Copyright (C) 2024  The sqztomo authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
import math

import numpy as np
import pytest

from sqztomo.errors import ContractViolation, InvalidDimension, NumericFailure
from sqztomo.fock import (
    annihilation,
    DensityMatrix,
    embed,
    hermitian_eigendecomposition,
    matrix_exponential,
    number_operator,
    Operator,
    quadrature_operator,
    quadrature_square,
    rotation_operator,
    sqrtm_psd,
    squeeze_operator,
    SqueezeParams,
)

from .mocks import random_density


class TestLadderOperators:

    def test_annihilation_elements(self):
        a = annihilation(4).elements
        assert a[0, 1] == 1
        assert a[1, 2] == pytest.approx(math.sqrt(2))
        assert a[2, 3] == pytest.approx(math.sqrt(3))
        assert np.count_nonzero(a) == 3

    def test_number_operator_is_exact(self):
        assert np.array_equal(np.diag(number_operator(5).elements).real,
                              np.arange(5))

    @pytest.mark.parametrize('dim', [0, 1, -3, 2.5])
    def test_bad_dimension(self, dim):
        with pytest.raises(InvalidDimension):
            annihilation(dim)

    def test_quadrature_square_matches_product_away_from_edge(self):
        dim = 8
        x = quadrature_operator(0.3, dim)
        square = quadrature_square(0.3, dim).elements
        product = (x @ x).elements
        assert np.allclose(square[:dim - 1, :dim - 1],
                           product[:dim - 1, :dim - 1])
        assert not np.isclose(square[-1, -1], product[-1, -1])

    def test_quadrature_operator_is_hermitian(self):
        x = quadrature_operator(1.1, 6)
        assert np.allclose(x.elements, x.dagger.elements)


class TestSqueezeParams:

    def test_db_round_trip(self):
        params = SqueezeParams.from_db(10.0, 0.5)
        assert params.r == pytest.approx(math.log(10) / 2)
        assert params.level_db == pytest.approx(10.0)

    def test_phi_wrapped(self):
        assert SqueezeParams(0.1, -math.pi / 2).phi == pytest.approx(
            3 * math.pi / 2)

    def test_negated(self):
        params = SqueezeParams(0.2, 0.5).negated()
        assert params.xi == pytest.approx(-SqueezeParams(0.2, 0.5).xi)

    @pytest.mark.parametrize('r', [-0.1, float('nan'), float('inf')])
    def test_bad_r(self, r):
        with pytest.raises(ContractViolation):
            SqueezeParams(r)


class TestDensityMatrix:

    def test_accepts_physical_matrix(self):
        rho = DensityMatrix(random_density(4))
        assert rho.dim == 4
        assert sum(rho.photon_distribution) == pytest.approx(1)

    def test_elements_are_frozen(self):
        rho = DensityMatrix(random_density(3))
        with pytest.raises(ValueError):
            rho.elements[0, 0] = 1

    @pytest.mark.parametrize('matrix', [
        np.array([[0.5, 0.1], [0.0, 0.5]]),
        np.diag([0.5, 0.6]),
        np.diag([1.2, -0.2]),
        np.ones((2, 3)) / 2,
    ])
    def test_rejects_unphysical_matrix(self, matrix):
        with pytest.raises(ContractViolation):
            DensityMatrix(matrix)

    def test_rejects_non_finite(self):
        with pytest.raises(NumericFailure):
            DensityMatrix(np.array([[np.nan, 0], [0, 1]]))

    def test_from_matrix_normalises(self):
        rho = DensityMatrix.from_matrix(np.diag([2.0, 2.0]))
        assert np.allclose(rho.elements, np.eye(2) / 2)

    def test_from_matrix_rejects_zero_trace(self):
        with pytest.raises(ContractViolation):
            DensityMatrix.from_matrix(np.zeros((3, 3)))

    def test_from_ket(self):
        rho = DensityMatrix.from_ket(np.array([1.0, 1.0j]))
        assert np.allclose(rho.elements, [[0.5, -0.5j], [0.5j, 0.5]])

    def test_expectation_of_number_operator(self):
        rho = DensityMatrix(np.diag([0.25, 0.25, 0.5]).astype(complex))
        assert rho.expectation(number_operator(3)).real == pytest.approx(
            1.25)


class TestUnitaries:

    @pytest.mark.parametrize('r,phi', [(0.3, 0.0), (0.8, 1.3)])
    def test_squeeze_operator_is_unitary(self, r, phi):
        s = squeeze_operator(SqueezeParams(r, phi), 20).elements
        assert np.allclose(s @ s.conj().T, np.eye(20), atol=1e-10)

    @pytest.mark.parametrize('r,phi', [(0.4, 0.0), (0.9, 2.1)])
    def test_negated_squeeze_is_adjoint(self, r, phi):
        params = SqueezeParams(r, phi)
        forward = squeeze_operator(params, 30).elements
        backward = squeeze_operator(params.negated(), 30).elements
        assert np.allclose(backward[:10, :10], forward.conj().T[:10, :10],
                           atol=1e-10)

    def test_zero_squeeze_is_identity(self):
        assert np.array_equal(
            squeeze_operator(SqueezeParams(0.0), 5).elements, np.eye(5))

    def test_rotation_operator(self):
        u = rotation_operator(0.5, 3).elements
        assert np.allclose(np.diag(u), np.exp(-0.5j * np.arange(3)))

    def test_matrix_exponential_of_diagonal(self):
        result = matrix_exponential(Operator(np.diag([0.0, 1.0])))
        assert np.allclose(result.elements, np.diag([1, math.e]))

    def test_matrix_exponential_overflow(self):
        with pytest.raises(NumericFailure):
            matrix_exponential(Operator(np.eye(2) * 1000))


class TestLinearAlgebra:

    def test_eigendecomposition_sorted_descending(self):
        values, vectors = hermitian_eigendecomposition(np.diag([0.1, 0.7,
                                                                0.2]))
        assert list(values) == pytest.approx([0.7, 0.2, 0.1])
        assert abs(vectors[1, 0]) == pytest.approx(1)

    def test_eigendecomposition_rejects_non_hermitian(self):
        with pytest.raises(ContractViolation):
            hermitian_eigendecomposition(np.array([[0, 1], [0, 0]]))

    def test_sqrtm_psd(self):
        matrix = random_density(5, seed=3)
        root = sqrtm_psd(matrix)
        assert np.allclose(root @ root, matrix)

    def test_embed_pads_and_crops(self):
        matrix = np.arange(4).reshape(2, 2)
        padded = embed(matrix, 3)
        assert padded.shape == (3, 3)
        assert np.array_equal(padded[:2, :2], matrix)
        assert np.array_equal(embed(padded, 2), matrix)
