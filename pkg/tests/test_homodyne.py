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

from sqztomo.errors import ContractViolation, MalformedFile
from sqztomo.homodyne import (
    hermite_functions,
    load_record,
    pdf_normalization,
    PhaseSchedule,
    quadrature_covariance,
    quadrature_mean,
    quadrature_pdf,
    quadrature_pdf_grid,
    quadrature_variance,
    QuadratureRecord,
    sample,
    sampling_grid,
    save_record,
)
from sqztomo.states import fock_state, vacuum

from .mocks import squeezed


class TestQuadratureRecord:

    def test_phases_wrapped(self):
        record = QuadratureRecord([-math.pi / 2, 7.0], [0.1, 0.2])
        assert record.phases[0] == pytest.approx(3 * math.pi / 2)
        assert record.phases[1] == pytest.approx(7.0 - 2 * math.pi)

    @pytest.mark.parametrize('phases,values', [
        ([0.0, 1.0], [0.5]),
        ([], []),
        ([0.0], [float('nan')]),
        ([float('inf')], [0.0]),
    ])
    def test_rejects_bad_data(self, phases, values):
        with pytest.raises(ContractViolation):
            QuadratureRecord(phases, values)

    def test_immutable(self):
        record = QuadratureRecord([0.0], [1.0])
        with pytest.raises(ValueError):
            record.values[0] = 2.0

    def test_iteration_and_length(self):
        record = QuadratureRecord([0.0, 1.0], [0.5, -0.5])
        assert len(record) == 2
        assert list(record) == [(0.0, 0.5), (1.0, -0.5)]

    def test_head(self):
        record = QuadratureRecord([0.0, 1.0, 2.0], [0.5, -0.5, 0.1])
        assert record.head(2) == QuadratureRecord([0.0, 1.0], [0.5, -0.5])


class TestPhaseSchedule:

    def test_linear_scan(self):
        phases = PhaseSchedule().phases(4, np.random.default_rng(0))
        assert list(phases) == pytest.approx([0, math.pi / 4, math.pi / 2,
                                              3 * math.pi / 4])

    def test_fixed_set_blocks(self):
        schedule = PhaseSchedule('fixed-set', phases=[0.0, 1.0])
        phases = schedule.phases(5, np.random.default_rng(0))
        assert list(phases) == [0.0, 0.0, 0.0, 1.0, 1.0]

    def test_random_uniform_within_span(self):
        schedule = PhaseSchedule('random-uniform', span=2 * math.pi)
        phases = schedule.phases(1000, np.random.default_rng(0))
        assert phases.min() >= 0
        assert phases.max() < 2 * math.pi

    @pytest.mark.parametrize('kwargs', [
        {'kind': 'spiral'},
        {'kind': 'fixed-set'},
        {'span': 1.0},
    ])
    def test_bad_schedule(self, kwargs):
        with pytest.raises(ContractViolation):
            PhaseSchedule(**kwargs)


class TestDistributions:

    def test_hermite_functions_orthonormal(self):
        x = np.linspace(-15, 15, 6001)
        psi = hermite_functions(x, 10)
        gram = psi.T @ psi * (x[1] - x[0])
        assert np.allclose(gram, np.eye(10), atol=1e-8)

    @pytest.mark.parametrize('theta', [0.0, 0.9, 2.5])
    def test_vacuum_pdf_is_gaussian(self, theta):
        x = np.linspace(-3, 3, 13)
        assert np.allclose(quadrature_pdf(vacuum(6), theta, x),
                           np.exp(-x ** 2) / math.sqrt(math.pi))

    def test_single_photon_pdf_vanishes_at_origin(self):
        assert quadrature_pdf(fock_state(1, 4), 0.3, 0.0)[0] == \
            pytest.approx(0)

    @pytest.mark.parametrize('theta', [0.0, 0.4, 1.9])
    def test_pdf_normalised(self, theta):
        assert pdf_normalization(squeezed(6.0, 0.5, dim=30), theta) == \
            pytest.approx(1, abs=1e-8)

    def test_grid_matches_pointwise(self):
        rho = squeezed(3.0, 1.2)
        thetas = np.array([0.0, 0.7, 2.0])
        x = np.linspace(-4, 4, 17)
        grid = quadrature_pdf_grid(rho, thetas, x)
        assert grid.shape == (3, 17)
        for row, theta in zip(grid, thetas):
            assert np.allclose(row, quadrature_pdf(rho, theta, x))

    def test_vacuum_moments(self):
        assert quadrature_mean(vacuum(5), 0.3) == pytest.approx(0)
        assert np.allclose(quadrature_covariance(vacuum(5)),
                           np.eye(2) / 2)

    def test_covariance_reproduces_variance(self):
        rho = squeezed(4.0, 0.8, dim=25)
        vx, cxp, vp = (quadrature_covariance(rho)[0, 0],
                       quadrature_covariance(rho)[0, 1],
                       quadrature_covariance(rho)[1, 1])
        theta = 1.1
        expected = (vx * math.cos(theta) ** 2 + vp * math.sin(theta) ** 2
                    + 2 * cxp * math.sin(theta) * math.cos(theta))
        assert quadrature_variance(rho, theta) == pytest.approx(expected)

    def test_sampling_grid_covers_state(self):
        grid = sampling_grid(squeezed(6.0, dim=30))
        assert grid[0] == -grid[-1]
        assert grid[-1] > 6


class TestSample:

    def test_deterministic_in_seed(self):
        rho = squeezed(3.0)
        first = sample(rho, PhaseSchedule(), 200, 11)
        assert first == sample(rho, PhaseSchedule(), 200, 11)
        assert first != sample(rho, PhaseSchedule(), 200, 12)

    def test_accepts_generator(self):
        rho = vacuum(4)
        first = sample(rho, PhaseSchedule(), 50, np.random.default_rng(3))
        assert first == sample(rho, PhaseSchedule(), 50, 3)

    def test_length_and_phases(self):
        record = sample(vacuum(4), PhaseSchedule(), 64, 0)
        assert len(record) == 64
        assert np.all(record.phases < math.pi)

    def test_bad_length(self):
        with pytest.raises(ContractViolation):
            sample(vacuum(4), PhaseSchedule(), 0, 0)

    def test_vacuum_statistics(self):
        schedule = PhaseSchedule('fixed-set', phases=[0.0, 1.0])
        record = sample(vacuum(6), schedule, 4000, 5)
        assert np.mean(record.values) == pytest.approx(0, abs=0.05)
        assert np.var(record.values) == pytest.approx(0.5, abs=0.05)

    def test_squeezed_statistics(self):
        phi = 0.6
        rho = squeezed(6.0, phi, dim=30)
        schedule = PhaseSchedule(
            'fixed-set', phases=[phi / 2, phi / 2 + math.pi / 2])
        record = sample(rho, schedule, 8000, 9)
        low, high = record.values[:4000], record.values[4000:]
        assert np.var(low) == pytest.approx(
            quadrature_variance(rho, phi / 2), rel=0.1)
        assert np.var(high) == pytest.approx(
            quadrature_variance(rho, phi / 2 + math.pi / 2), rel=0.1)


class TestLoadRecord:

    def test_reads_what_save_record_wrote(self, tmpdir):
        record = sample(vacuum(4), PhaseSchedule(), 64, 5)
        path = str(tmpdir.join('record.csv'))
        save_record(record, path)
        assert load_record(path) == record

    def test_missing_file(self, tmpdir):
        with pytest.raises(MalformedFile):
            load_record(str(tmpdir.join('absent.csv')))
