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
"""
Fit the loss / phase-noise model to measured squeezing levels.

The model maps an ideal squeezing level s (dB) to the measured pair

    (sq(s; L, theta), as(s; L, theta))

(see sqztomo.channels.predicted_levels).  A fit minimises the summed
squared orthogonal distances, in dB, between the measured points and that
curve; s is profiled out per point.
"""
import logging
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares, minimize_scalar
from scipy.special import expit, logit
from scipy.stats import chi2

from sqztomo.channels import predicted_levels
from sqztomo.errors import ContractViolation, InsufficientData
from sqztomo.fock import DensityMatrix
from sqztomo.metrics import purity, purity_from_levels, squeezing_levels
from sqztomo.states import DEFAULT_TAIL_TOLERANCE, degraded_state

LOGGER = logging.getLogger(__name__)

IDEAL_GRID = np.linspace(0, 40, 201)
MAX_PHASE_NOISE = 1.5
# Probability of the 1-D two-sigma interval.
TWO_SIGMA = 0.9545
# Distance from 0 and 1 at which logit and log inputs are clamped.
EDGE = 1e-12


class LevelPoint:
    """A measured (squeezing : anti-squeezing) pair in dB."""

    def __init__(self, sq_db: float, as_db: float,
                 label: Optional[str] = None,
                 pump_mw: Optional[float] = None) -> None:
        """
        Create a LevelPoint.

        :param sq_db:
            Squeezing below the vacuum, >= 0.
        :param as_db:
            Anti-squeezing above the vacuum; at least sq_db - 0.5.
        :param label:
            Optional marker name.
        :param pump_mw:
            Optional pump power the point was measured at.
        """
        if not (math.isfinite(sq_db) and math.isfinite(as_db)):
            raise ContractViolation('levels must be finite')
        if sq_db < 0 or as_db < 0:
            raise ContractViolation(
                'levels must be >= 0 dB, got {}:{}'.format(sq_db, as_db))
        if as_db < sq_db - 0.5:
            raise ContractViolation(
                'anti-squeezing {} dB is below squeezing {} dB'.format(
                    as_db, sq_db))
        self.sq_db = float(sq_db)
        self.as_db = float(as_db)
        self.label = label
        self.pump_mw = pump_mw

    def __repr__(self) -> str:
        return 'LevelPoint({!r}, {!r}, label={!r})'.format(
            self.sq_db, self.as_db, self.label)


MEASURED_MARKERS = {
    'A': LevelPoint(3.76, 3.89, label='A', pump_mw=5),
    'B': LevelPoint(7.39, 12.16, label='B', pump_mw=55),
    'C': LevelPoint(7.91, 18.56, label='C', pump_mw=77),
    'D': LevelPoint(9.38, 19.69, label='D', pump_mw=80),
}


def _params(x: np.ndarray) -> Tuple[float, float]:
    """(logit L, log theta) -> (L, theta)."""
    return (float(expit(x[0])),
            min(float(math.exp(min(x[1], 10.0))), MAX_PHASE_NOISE))


def _unbounded(loss: float, theta: float) -> np.ndarray:
    """(L, theta) -> (logit L, log theta), clamped into the open domain."""
    return np.array([logit(float(np.clip(loss, EDGE, 1 - EDGE))),
                     math.log(max(float(theta), EDGE))])


def _curve(ideal: np.ndarray, loss: float,
           theta: float) -> Tuple[np.ndarray, np.ndarray]:
    return predicted_levels(ideal, loss, theta)


def _closest_ideal(point: LevelPoint, loss: float, theta: float) -> float:
    """The ideal squeezing whose model point is nearest to point."""
    sq, as_ = _curve(IDEAL_GRID, loss, theta)
    distance = (sq - point.sq_db) ** 2 + (as_ - point.as_db) ** 2
    best = int(np.argmin(distance))
    step = IDEAL_GRID[1] - IDEAL_GRID[0]
    low = max(IDEAL_GRID[0], IDEAL_GRID[best] - step)
    high = min(IDEAL_GRID[-1], IDEAL_GRID[best] + step)

    def squared(s: float) -> float:
        sq_s, as_s = _curve(np.asarray(s), loss, theta)
        return float((sq_s - point.sq_db) ** 2 + (as_s - point.as_db) ** 2)

    result = minimize_scalar(squared, bounds=(low, high), method='bounded',
                             options={'xatol': 1e-10})
    return float(result.x)


def _signed_distance(point: LevelPoint, loss: float, theta: float) -> float:
    """
    Signed orthogonal distance from point to the model curve.

    The offset is projected on the curve normal, so an error in the located
    ideal level only enters at second order.
    """
    ideal = _closest_ideal(point, loss, theta)
    sq, as_ = _curve(np.asarray(ideal), loss, theta)
    offset = np.array([point.sq_db - float(sq), point.as_db - float(as_)])
    step = 1e-5
    lo, hi = max(ideal - step, 0.0), ideal + step
    sq_lo, as_lo = _curve(np.asarray(lo), loss, theta)
    sq_hi, as_hi = _curve(np.asarray(hi), loss, theta)
    tangent = np.array([float(sq_hi - sq_lo), float(as_hi - as_lo)])
    normal = np.array([-tangent[1], tangent[0]])
    length = float(np.linalg.norm(normal))
    if length == 0:
        return float(np.linalg.norm(offset))
    along = float(offset @ normal) / length
    if ideal > IDEAL_GRID[0] + step:
        return along
    # Clamped at the start of the curve: the nearest point is the end.
    return math.copysign(float(np.linalg.norm(offset)), along)


def _residuals(x: np.ndarray, points: Sequence[LevelPoint]) -> np.ndarray:
    """Signed orthogonal distances of every point from the model curve."""
    loss, theta = _params(x)
    return np.array([_signed_distance(p, loss, theta) for p in points])


def initial_loss(point: LevelPoint) -> float:
    """
    Loss that explains point with no phase noise.

    With linear variances a, b this solves (a - L)(b - L) = (1 - L)^2.
    """
    a = 10 ** (-point.sq_db / 10)
    b = 10 ** (point.as_db / 10)
    denominator = a + b - 2
    if abs(denominator) < 1e-12:
        return 1e-3
    return float(np.clip((a * b - 1) / denominator, 1e-3, 0.95))


def _initial_guess(points: Sequence[LevelPoint]) -> np.ndarray:
    strongest = max(points, key=lambda p: (p.sq_db, p.as_db))
    loss = initial_loss(strongest)
    thetas = np.geomspace(1e-3, 0.5, 40)
    costs = [np.sum(_residuals(np.array([logit(loss), math.log(t)]),
                               points) ** 2) for t in thetas]
    theta = float(thetas[int(np.argmin(costs))])
    return np.array([logit(loss), math.log(theta)])


class DegradationFit:
    """
    Fitted loss and phase noise with their uncertainty.

    :param loss:
        Fitted L.
    :param theta:
        Fitted phase noise in radians.
    :param residual_rms:
        Root mean square orthogonal distance of the points, in dB.
    :param transformed_covariance:
        Covariance of (logit L, log theta).
    :param converged:
        Whether the optimiser reported success.
    :param n_points:
        Number of points fitted.
    """

    def __init__(self, loss: float, theta: float, residual_rms: float,
                 transformed_covariance: np.ndarray, converged: bool = True,
                 n_points: int = 0) -> None:
        self.loss = loss
        self.theta = theta
        self.residual_rms = residual_rms
        self.transformed_covariance = np.asarray(transformed_covariance,
                                                 dtype=np.float64)
        self.converged = converged
        self.n_points = n_points

    @property
    def covariance(self) -> np.ndarray:
        """Covariance of (L, theta), propagated to first order."""
        scale = np.diag([self.loss * (1 - self.loss), self.theta])
        return scale @ self.transformed_covariance @ scale

    def contains(self, loss: float, theta: float,
                 probability: float = TWO_SIGMA) -> bool:
        """Whether (loss, theta) lies inside the confidence ellipse."""
        delta = _unbounded(loss, theta) - _unbounded(self.loss, self.theta)
        inverse = np.linalg.pinv(self.transformed_covariance)
        return bool(float(delta @ inverse @ delta) <= chi2.ppf(probability, 2))

    def as_dict(self) -> Dict[str, Any]:
        """Return the fit as a JSON-friendly dict."""
        return {
            'loss': self.loss,
            'theta': self.theta,
            'residual_rms': self.residual_rms,
            'covariance': self.covariance.tolist(),
            'transformed_covariance': self.transformed_covariance.tolist(),
            'converged': self.converged,
            'n_points': self.n_points,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'DegradationFit':
        """Rebuild a fit from as_dict output."""
        return cls(float(data['loss']), float(data['theta']),
                   float(data['residual_rms']),
                   np.asarray(data['transformed_covariance']),
                   bool(data.get('converged', True)),
                   int(data.get('n_points', 0)))


def fit(points: Sequence[LevelPoint],
        sigma_db: Optional[float] = None) -> DegradationFit:
    """
    Fit L and theta to measured points.

    :param points:
        At least two points, not all identical.
    :param sigma_db:
        Known standard deviation of the dB noise on each coordinate.  When
        omitted it is estimated from the residuals.
    :raises InsufficientData:
        on fewer than two distinct points.
    """
    if len(points) < 2:
        raise InsufficientData(
            'need at least 2 points to fit, got {}'.format(len(points)))
    if len({(p.sq_db, p.as_db) for p in points}) < 2:
        raise InsufficientData('all points are identical')
    ordered = sorted(points, key=lambda p: (p.sq_db, p.as_db))
    result = least_squares(_residuals, _initial_guess(ordered),
                           args=(ordered,), method='lm',
                           xtol=1e-12, ftol=1e-12, gtol=1e-12,
                           max_nfev=2000)
    loss, theta = _params(result.x)
    squared = float(np.sum(result.fun ** 2))
    residual_rms = math.sqrt(squared / len(ordered))
    if sigma_db is None:
        variance = squared / max(len(ordered) - 2, 1)
    else:
        variance = sigma_db ** 2
    jac = result.jac
    transformed = variance * np.linalg.pinv(jac.T @ jac)
    converged = bool(result.status > 0)
    if not converged:
        LOGGER.warning('degradation fit did not converge: %s',
                       result.message)
    LOGGER.debug('fitted L=%.6g theta=%.6g rms=%.3g dB after %d '
                 'evaluations', loss, theta, residual_rms, result.nfev)
    return DegradationFit(loss, theta, residual_rms, transformed, converged,
                          len(ordered))


class Band:
    """Model curve with a one-sigma envelope on both coordinates."""

    def __init__(self, ideal_db: np.ndarray, sq_db: np.ndarray,
                 sq_sigma: np.ndarray, as_db: np.ndarray,
                 as_sigma: np.ndarray) -> None:
        self.ideal_db = ideal_db
        self.sq_db = sq_db
        self.sq_sigma = sq_sigma
        self.as_db = as_db
        self.as_sigma = as_sigma

    def rows(self) -> List[Tuple[float, ...]]:
        """(ideal, sq, sq_lo, sq_hi, as, as_lo, as_hi) for every sample."""
        return [tuple(float(v) for v in row) for row in zip(
            self.ideal_db, self.sq_db, self.sq_db - self.sq_sigma,
            self.sq_db + self.sq_sigma, self.as_db,
            self.as_db - self.as_sigma, self.as_db + self.as_sigma)]


def predict_band(result: DegradationFit,
                 ideal_sq_range: Sequence[float]) -> Band:
    """
    Sample the fitted curve and its one-sigma envelope.

    The envelope propagates the (logit L, log theta) covariance through
    central-difference derivatives of the model.
    """
    ideal = np.asarray(ideal_sq_range, dtype=np.float64)
    sq, as_ = _curve(ideal, result.loss, result.theta)
    centre = _unbounded(result.loss, result.theta)
    step = 1e-6
    gradients = []
    for axis in range(2):
        offset = np.zeros(2)
        offset[axis] = step
        up = _curve(ideal, *_params(centre + offset))
        down = _curve(ideal, *_params(centre - offset))
        gradients.append(((up[0] - down[0]) / (2 * step),
                          (up[1] - down[1]) / (2 * step)))
    cov = result.transformed_covariance
    sigmas = []
    for coordinate in range(2):
        g = np.stack([gradients[0][coordinate], gradients[1][coordinate]])
        variance = np.einsum('ik,ij,jk->k', g, cov, g)
        sigmas.append(np.sqrt(np.clip(variance, 0, None)))
    return Band(ideal, sq, sigmas[0], as_, sigmas[1])


def purity_vs_antisqueezing(
        result: DegradationFit, ideal_sq_range: Sequence[float], dim: int,
        tail_tolerance: float = DEFAULT_TAIL_TOLERANCE,
        phase_noise_mode: str = 'two-point',
        ) -> List[Tuple[float, float, float, float]]:
    """
    Tabulate purity against measured anti-squeezing along the fitted curve.

    Every row is (ideal_db, as_db, purity, gaussian_purity): as_db and
    purity are measured on the synthesised degraded state and
    gaussian_purity is 1/sqrt(V_sq V_as) from the model levels.
    """
    table = []
    for ideal in ideal_sq_range:
        rho = degraded_state({'sq_db': ideal, 'loss': result.loss,
                              'phase_noise': result.theta}, dim,
                             tail_tolerance, phase_noise_mode)
        levels = squeezing_levels(rho)
        sq, as_ = _curve(np.asarray(ideal), result.loss, result.theta)
        table.append((float(ideal), levels.as_db, purity(rho),
                      float(purity_from_levels(sq, as_))))
    return table


def solve_levels(point: LevelPoint, theta: float = 0.0) -> Tuple[float,
                                                                   float]:
    """
    Return the (ideal_sq_db, L) that produce point at phase noise theta.

    :raises ContractViolation:
        if no loss in [0, 1) reproduces the point.
    """
    def mismatch(x: np.ndarray) -> np.ndarray:
        sq, as_ = _curve(np.asarray(max(x[0], 0.0)), float(expit(x[1])),
                         theta)
        return np.array([sq - point.sq_db, as_ - point.as_db])

    loss = initial_loss(point)
    a = 10 ** (-point.sq_db / 10)
    ideal = -10 * math.log10(max((a - loss) / (1 - loss), 1e-6))
    solution = least_squares(mismatch, np.array([ideal, logit(loss)]),
                             method='lm', xtol=1e-12, ftol=1e-12)
    if np.max(np.abs(solution.fun)) > 1e-6:
        raise ContractViolation(
            'no degradation reproduces {!r} at theta={}'.format(point,
                                                                  theta))
    return float(max(solution.x[0], 0.0)), float(expit(solution.x[1]))


def state_for_levels(point: LevelPoint, dim: int, theta: float = 0.0,
                     tail_tolerance: float = DEFAULT_TAIL_TOLERANCE,
                     phi: float = 0.0) -> DensityMatrix:
    """Synthesise a degraded squeezed vacuum whose levels match point."""
    ideal, loss = solve_levels(point, theta)
    return degraded_state({'sq_db': ideal, 'phi': phi, 'loss': loss,
                           'phase_noise': theta}, dim, tail_tolerance)


def load_points(path: str) -> List[LevelPoint]:
    """Read a points CSV with header sq_db,as_db[,label,pump_mw]."""
    from sqztomo import io
    return io.read_points(path)
