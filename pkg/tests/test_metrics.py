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
from scipy.stats import unitary_group

from sqztomo.errors import ContractViolation
from sqztomo.fock import DensityMatrix, Operator, SqueezeParams
from sqztomo.homodyne import quadrature_pdf
from sqztomo.metrics import (
    decompose,
    fidelity,
    match_squeezed_thermal,
    purity,
    purity_from_levels,
    squeezing_levels,
    trace_distance,
    wigner,
)
from sqztomo.states import (
    fock_state,
    maximally_mixed,
    squeezed_thermal,
    ThermalParams,
    vacuum,
)

from .mocks import random_density, squeezed


class TestDistances:

    def test_fidelity_with_itself(self):
        rho = DensityMatrix(random_density(5))
        assert fidelity(rho, rho) == pytest.approx(1)

    def test_fidelity_of_orthogonal_states(self):
        assert fidelity(fock_state(0, 3), fock_state(2, 3)) == \
            pytest.approx(0)

    def test_fidelity_is_symmetric(self):
        rho = DensityMatrix(random_density(4, seed=1))
        sigma = DensityMatrix(random_density(4, seed=2))
        assert fidelity(rho, sigma) == pytest.approx(fidelity(sigma, rho))

    def test_fidelity_with_pure_state(self):
        rho = DensityMatrix(random_density(4, seed=1))
        assert fidelity(vacuum(4), rho) == pytest.approx(
            rho.elements[0, 0].real)

    def test_dim_mismatch(self):
        with pytest.raises(ContractViolation):
            fidelity(vacuum(3), vacuum(4))
        with pytest.raises(ContractViolation):
            trace_distance(vacuum(3), vacuum(4))

    def test_purity(self):
        assert purity(vacuum(4)) == pytest.approx(1)
        assert purity(maximally_mixed(4)) == pytest.approx(0.25)

    @pytest.mark.parametrize('seed', range(5))
    def test_invariant_under_unitaries(self, seed):
        u = Operator(unitary_group.rvs(5, random_state=seed))
        rho = DensityMatrix(random_density(5, seed=seed))
        sigma = DensityMatrix(random_density(5, seed=seed + 100))
        rotated_rho, rotated_sigma = rho.transformed(u), sigma.transformed(u)
        assert fidelity(rotated_rho, rotated_sigma) == pytest.approx(
            fidelity(rho, sigma), abs=1e-9)
        assert purity(rotated_rho) == pytest.approx(purity(rho), abs=1e-12)

    def test_trace_distance(self):
        assert trace_distance(fock_state(0, 3), fock_state(1, 3)) == \
            pytest.approx(1)
        assert trace_distance(vacuum(3), vacuum(3)) == pytest.approx(0)


class TestSqueezingLevels:

    @pytest.mark.parametrize('phi', [0.0, 1.0, 2.5])
    def test_squeezed_vacuum(self, phi):
        levels = squeezing_levels(squeezed(6.0, phi, dim=30))
        assert levels.sq_db == pytest.approx(6.0, abs=1e-4)
        assert levels.as_db == pytest.approx(6.0, abs=1e-4)
        assert levels.angle_min == pytest.approx(phi / 2, abs=1e-6)

    def test_vacuum(self):
        levels = squeezing_levels(vacuum(4))
        assert levels.sq_db == pytest.approx(0, abs=1e-9)
        assert levels.as_db == pytest.approx(0, abs=1e-9)

    def test_purity_from_levels(self):
        assert purity_from_levels(3.0, 3.0) == pytest.approx(1)
        assert purity_from_levels(0.0, 10 * math.log10(4)) == \
            pytest.approx(0.5)

    def test_gaussian_purity_matches_state(self):
        rho = squeezed_thermal(SqueezeParams(0.3), ThermalParams(0.25), 40)
        levels = squeezing_levels(rho)
        assert purity_from_levels(levels.sq_db, levels.as_db) == \
            pytest.approx(purity(rho), rel=1e-6)


class TestWigner:

    def test_vacuum_peak(self):
        grid = wigner(vacuum(4), np.array([0.0, 1.0]), np.array([0.0]))
        assert grid.values[0, 0] == pytest.approx(1 / math.pi)
        assert grid.values[1, 0] == pytest.approx(math.exp(-1) / math.pi)

    def test_single_photon_is_negative_at_origin(self):
        grid = wigner(fock_state(1, 3), np.array([0.0]), np.array([0.0]))
        assert grid.values[0, 0] == pytest.approx(-1 / math.pi)

    def test_normalised_on_default_grid(self):
        grid = wigner(squeezed(3.0, 0.4, dim=15))
        assert grid.normalization() == pytest.approx(1, abs=1e-3)

    def test_marginal_is_quadrature_pdf(self):
        rho = squeezed(3.0, 0.4, dim=15)
        axis = np.linspace(-6, 6, 241)
        grid = wigner(rho, axis, axis)
        assert np.allclose(grid.marginal_x(), quadrature_pdf(rho, 0.0, axis),
                           atol=1e-4)

    def test_rows(self):
        grid = wigner(vacuum(3), np.array([0.0, 1.0]), np.array([0.0, 2.0]))
        rows = grid.rows()
        assert len(rows) == 4
        assert rows[1][:2] == (0.0, 2.0)


class TestDecompose:

    def test_pure_state(self):
        parts = decompose(squeezed(3.0, dim=10))
        assert parts.sigma1 == pytest.approx(1)
        assert parts.sigma_non == pytest.approx(0, abs=1e-12)
        assert np.allclose(parts.residual.elements,
                           maximally_mixed(10).elements)
        assert not parts.ambiguous

    def test_mixture(self):
        rho = DensityMatrix(np.diag([0.7, 0.3, 0.0]).astype(complex))
        parts = decompose(rho)
        assert parts.sigma1 == pytest.approx(0.7)
        assert parts.sigma_non == pytest.approx(0.3)
        assert np.allclose(parts.residual.elements,
                           fock_state(1, 3).elements)

    def test_dominant_phase_convention(self):
        ket = np.array([-0.6, 0.8j])
        parts = decompose(DensityMatrix.from_ket(ket))
        assert np.allclose(parts.dominant.elements,
                           DensityMatrix.from_ket(ket).elements)

    def test_degenerate(self, caplog):
        assert decompose(maximally_mixed(3)).ambiguous
        assert 'degenerate' in caplog.text

    def test_reassembles(self):
        rho = DensityMatrix(random_density(5, seed=4))
        parts = decompose(rho)
        rebuilt = (parts.sigma1 * parts.dominant.elements
                   + parts.sigma_non * parts.residual.elements)
        assert np.allclose(rebuilt, rho.elements)


class TestSqueezedThermalMatch:

    @pytest.mark.slow
    def test_recovers_squeezed_thermal_state(self):
        target = squeezed_thermal(SqueezeParams.from_db(3.0, 0.4),
                                  ThermalParams(0.1), 20, 1e-2)
        best = match_squeezed_thermal(target)
        assert best.fidelity > 0.999
        assert best.squeeze.r == pytest.approx(
            SqueezeParams.from_db(3.0).r, abs=0.02)
        assert best.thermal.nbar == pytest.approx(0.1, abs=0.02)
