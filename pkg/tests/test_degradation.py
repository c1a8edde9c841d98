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
import numpy as np
import pytest

from sqztomo.channels import predicted_levels
from sqztomo.degradation import (
    DegradationFit,
    fit,
    initial_loss,
    LevelPoint,
    MEASURED_MARKERS,
    predict_band,
    purity_vs_antisqueezing,
    solve_levels,
    state_for_levels,
)
from sqztomo.errors import ContractViolation, InsufficientData
from sqztomo.metrics import decompose, purity_from_levels, squeezing_levels

IDEAL = (3.0, 6.0, 9.0, 12.0, 15.0)
SIX_IDEAL = (2.5, 5.0, 7.5, 10.0, 12.5, 15.0)


def _synthetic_points(loss, theta, noise=0.0, seed=0, ideal=IDEAL):
    rng = np.random.default_rng(seed)
    sq, as_ = predicted_levels(np.array(ideal), loss, theta)
    sq = sq + rng.normal(0, noise, size=len(ideal)) if noise else sq
    as_ = as_ + rng.normal(0, noise, size=len(ideal)) if noise else as_
    return [LevelPoint(float(s), float(a)) for s, a in zip(sq, as_)]


class TestLevelPoint:

    @pytest.mark.parametrize('sq_db,as_db', [
        (-1.0, 3.0),
        (5.0, 3.0),
        (float('nan'), 3.0),
    ])
    def test_bad_point(self, sq_db, as_db):
        with pytest.raises(ContractViolation):
            LevelPoint(sq_db, as_db)

    def test_markers(self):
        assert sorted(MEASURED_MARKERS) == ['A', 'B', 'C', 'D']
        assert MEASURED_MARKERS['C'].pump_mw == 77


class TestFit:

    def test_recovers_noiseless_parameters(self):
        result = fit(_synthetic_points(0.2, 0.05))
        assert result.loss == pytest.approx(0.2, abs=1e-3)
        assert result.theta == pytest.approx(0.05, abs=1e-3)
        assert result.residual_rms < 1e-4
        assert result.converged
        assert result.n_points == 5

    def test_point_order_does_not_matter(self):
        points = _synthetic_points(0.15, 0.03, noise=0.05)
        forward = fit(points)
        reverse = fit(list(reversed(points)))
        assert forward.loss == pytest.approx(reverse.loss)
        assert forward.theta == pytest.approx(reverse.theta)

    def test_too_few_points(self):
        with pytest.raises(InsufficientData):
            fit([LevelPoint(3.0, 4.0)])

    def test_identical_points(self):
        with pytest.raises(InsufficientData):
            fit([LevelPoint(3.0, 4.0), LevelPoint(3.0, 4.0)])

    def test_known_noise_sets_covariance(self):
        points = _synthetic_points(0.2, 0.05)
        narrow = fit(points, sigma_db=0.05)
        wide = fit(points, sigma_db=0.5)
        assert np.allclose(wide.transformed_covariance,
                           100 * narrow.transformed_covariance)
        assert narrow.contains(0.2, 0.05)

    def test_measured_markers(self):
        result = fit(list(MEASURED_MARKERS.values()))
        assert 0 < result.loss < 1
        assert 0 < result.theta < 1.5
        assert result.residual_rms < 2.0

    def test_dict_round_trip(self):
        result = fit(_synthetic_points(0.2, 0.05), sigma_db=0.1)
        again = DegradationFit.from_dict(result.as_dict())
        assert again.loss == result.loss
        assert np.allclose(again.covariance, result.covariance)

    @pytest.mark.slow
    def test_recovers_random_noiseless_parameters(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            loss, theta = rng.uniform(0, 0.4), rng.uniform(0, 0.15)
            result = fit(_synthetic_points(loss, theta, ideal=SIX_IDEAL))
            assert result.loss == pytest.approx(loss, rel=0.02, abs=1e-3)
            assert result.theta == pytest.approx(theta, rel=0.02, abs=1e-3)

    @pytest.mark.slow
    def test_two_sigma_coverage(self):
        hits = 0
        trials = 200
        for trial in range(trials):
            points = _synthetic_points(0.2, 0.05, noise=0.2, seed=trial)
            hits += fit(points, sigma_db=0.2).contains(0.2, 0.05)
        assert hits / trials >= 0.90

    @pytest.mark.parametrize('loss,theta', [
        (0.0, 0.05),
        (0.2, 0.0),
        (1.0, 0.0),
    ])
    def test_contains_at_parameter_edges(self, loss, theta):
        result = fit(_synthetic_points(0.2, 0.05), sigma_db=0.01)
        assert result.contains(loss, theta) is False


class TestBand:

    def test_band_follows_curve(self):
        result = fit(_synthetic_points(0.2, 0.05), sigma_db=0.1)
        ideal = np.linspace(0, 20, 11)
        band = predict_band(result, ideal)
        sq, as_ = predicted_levels(ideal, result.loss, result.theta)
        assert np.allclose(band.sq_db, sq)
        assert np.allclose(band.as_db, as_)
        assert np.all(band.sq_sigma >= 0)
        assert len(band.rows()) == 11

    def test_band_widens_with_noise(self):
        points = _synthetic_points(0.2, 0.05)
        narrow = predict_band(fit(points, sigma_db=0.05), [10.0])
        wide = predict_band(fit(points, sigma_db=0.5), [10.0])
        assert wide.as_sigma[0] > narrow.as_sigma[0]


class TestPurity:

    def test_marker_purity_ordering(self):
        purities = [float(purity_from_levels(m.sq_db, m.as_db))
                    for m in (MEASURED_MARKERS[k] for k in 'ABC')]
        assert purities[0] > purities[1] > purities[2]
        assert purities[0] == pytest.approx(0.985, abs=0.01)

    def test_purity_table(self):
        result = DegradationFit(0.2, 0.05, 0.0, np.zeros((2, 2)))
        table = purity_vs_antisqueezing(result, [1.0, 3.0, 5.0], 25,
                                        tail_tolerance=1e-3)
        purities = [row[2] for row in table]
        assert purities[0] > purities[1] > purities[2]
        for ideal, as_db, state_purity, gaussian in table:
            assert state_purity == pytest.approx(gaussian, abs=0.02)
        assert table[1][1] == pytest.approx(
            float(predicted_levels(3.0, 0.2, 0.05)[1]), abs=1e-3)


class TestSynthesis:

    def test_initial_loss_explains_point(self):
        point = LevelPoint(3.0, 6.0)
        loss = initial_loss(point)
        ideal, solved = solve_levels(point)
        assert solved == pytest.approx(loss, abs=1e-6)

    def test_solve_levels_reproduces_point(self):
        point = MEASURED_MARKERS['B']
        ideal, loss = solve_levels(point, theta=0.02)
        sq, as_ = predicted_levels(ideal, loss, 0.02)
        assert float(sq) == pytest.approx(point.sq_db, abs=1e-6)
        assert float(as_) == pytest.approx(point.as_db, abs=1e-6)

    def test_state_for_marker_a(self):
        rho = state_for_levels(MEASURED_MARKERS['A'], 20)
        levels = squeezing_levels(rho)
        assert levels.sq_db == pytest.approx(3.76, abs=0.01)
        assert levels.as_db == pytest.approx(3.89, abs=0.01)
        assert decompose(rho).sigma1 == pytest.approx(0.9764, abs=0.03)
