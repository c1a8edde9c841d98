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

from sqztomo.channels import predicted_levels
from sqztomo.errors import ContractViolation, TruncationOverflow
from sqztomo.fock import number_operator, SqueezeParams
from sqztomo.homodyne import quadrature_variance
from sqztomo.metrics import squeezing_levels
from sqztomo.seeding import generator
from sqztomo.states import (
    crop,
    degraded_state,
    draw_training_state,
    fock_state,
    maximally_mixed,
    squeezed_thermal,
    squeezed_vacuum,
    thermal,
    thermal_populations,
    ThermalParams,
    TrainingLimits,
    vacuum,
    working_dim,
)


class TestSimpleStates:

    def test_vacuum(self):
        assert list(vacuum(3).photon_distribution) == [1, 0, 0]

    def test_fock_state(self):
        assert fock_state(2, 4).photon_distribution[2] == 1

    @pytest.mark.parametrize('n', [-1, 4])
    def test_fock_state_out_of_range(self, n):
        with pytest.raises(ContractViolation):
            fock_state(n, 4)

    def test_maximally_mixed(self):
        assert np.allclose(maximally_mixed(5).photon_distribution, 0.2)

    def test_working_dim(self):
        assert working_dim(35) == 80


class TestThermal:

    def test_populations_are_bose_einstein(self):
        populations = thermal_populations(1.0, 4)
        assert list(populations) == pytest.approx([0.5, 0.25, 0.125,
                                                   0.0625])

    def test_mean_photon_number(self):
        rho = thermal(ThermalParams(0.5), 40)
        assert rho.expectation(number_operator(40)).real == pytest.approx(
            0.5, rel=1e-9)

    def test_overflow(self):
        with pytest.raises(TruncationOverflow) as excinfo:
            thermal(ThermalParams(5.0), 4)
        assert excinfo.value.dim == 4
        assert excinfo.value.tail == pytest.approx((5 / 6) ** 4)

    @pytest.mark.parametrize('nbar', [-0.1, float('nan')])
    def test_bad_nbar(self, nbar):
        with pytest.raises(ContractViolation):
            ThermalParams(nbar)

    def test_crop_respects_tolerance(self):
        matrix = np.diag([0.9, 0.05, 0.05]).astype(complex)
        assert crop(matrix, 2, tail_tolerance=0.1).dim == 2
        with pytest.raises(TruncationOverflow):
            crop(matrix, 2, tail_tolerance=0.01)


class TestSqueezedStates:

    @pytest.mark.parametrize('phi', [0.0, 1.0, 4.0])
    def test_quadrature_variances(self, phi):
        sq = SqueezeParams.from_db(6.0, phi)
        rho = squeezed_vacuum(sq, 40)
        assert quadrature_variance(rho, phi / 2) == pytest.approx(
            0.5 * math.exp(-2 * sq.r), rel=1e-5)
        assert quadrature_variance(rho, phi / 2 + math.pi / 2) == \
            pytest.approx(0.5 * math.exp(2 * sq.r), rel=1e-5)

    def test_only_even_photon_numbers(self):
        rho = squeezed_vacuum(SqueezeParams(0.5), 30)
        assert np.allclose(rho.photon_distribution[1::2], 0)

    def test_mean_photon_number(self):
        sq = SqueezeParams(0.4)
        rho = squeezed_vacuum(sq, 40)
        assert rho.expectation(number_operator(40)).real == pytest.approx(
            math.sinh(0.4) ** 2, rel=1e-6)

    def test_squeezed_thermal_variance(self):
        sq = SqueezeParams(0.3, 0.8)
        rho = squeezed_thermal(sq, ThermalParams(0.2), 40)
        assert quadrature_variance(rho, 0.4) == pytest.approx(
            0.7 * math.exp(-0.6), rel=1e-5)

    def test_squeezed_thermal_without_reservoir_is_pure(self):
        sq = SqueezeParams(0.3)
        a = squeezed_thermal(sq, ThermalParams(0.0), 20)
        b = squeezed_vacuum(sq, 20)
        assert np.allclose(a.elements, b.elements)

    def test_strong_squeezing_overflows_small_truncation(self):
        with pytest.raises(TruncationOverflow):
            squeezed_vacuum(SqueezeParams.from_db(15.0), 6)


class TestDegradedState:

    def test_levels_follow_variance_law(self):
        rho = degraded_state({'sq_db': 6.0, 'phi': 0.7, 'loss': 0.2,
                              'phase_noise': 0.05}, 30)
        expected_sq, expected_as = predicted_levels(6.0, 0.2, 0.05)
        levels = squeezing_levels(rho)
        assert levels.sq_db == pytest.approx(float(expected_sq), abs=1e-3)
        assert levels.as_db == pytest.approx(float(expected_as), abs=1e-3)

    def test_missing_keys_default_to_zero(self):
        assert np.allclose(degraded_state({}, 4).elements,
                           vacuum(4).elements)


class TestTrainingStates:

    def test_limits_as_dict(self):
        limits = TrainingLimits(max_sq_db=3.0)
        assert limits.as_dict()['max_sq_db'] == 3.0

    def test_bad_limits(self):
        with pytest.raises(ContractViolation):
            TrainingLimits(min_nbar=0.5, max_nbar=0.1)

    def test_draw_is_deterministic(self):
        limits = TrainingLimits(max_sq_db=3.0, max_nbar=0.1)
        first = draw_training_state(generator(7, 'state', 2), limits, 12,
                                    tail_tolerance=1e-2)
        second = draw_training_state(generator(7, 'state', 2), limits, 12,
                                     tail_tolerance=1e-2)
        assert first[0] == second[0]
        assert np.array_equal(first[1].elements, second[1].elements)

    def test_draw_respects_limits(self):
        limits = TrainingLimits(max_sq_db=3.0, max_nbar=0.1, max_loss=0.2,
                                max_phase_noise=0.05)
        for index in range(5):
            params, state = draw_training_state(
                generator(0, 'state', index), limits, 12,
                tail_tolerance=1e-2)
            assert 0 <= params['sq_db'] <= 3.0
            assert 1e-3 <= params['nbar'] <= 0.1
            assert 0 <= params['loss'] <= 0.2
            assert 0 <= params['phase_noise'] <= 0.05
            assert state.dim == 12
