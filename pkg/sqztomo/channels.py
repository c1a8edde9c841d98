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
Loss and phase-noise channels acting on density matrices.

Both reproduce the variance law of the degradation model: with vacuum-
normalised variances,

    V_sq = (1 - L) [V_sq_id cos^2(theta) + V_as_id sin^2(theta)] + L
    V_as = (1 - L) [V_as_id cos^2(theta) + V_sq_id sin^2(theta)] + L
"""
import logging
import math
from typing import Tuple, Union

import numpy as np
from scipy.special import comb

from sqztomo.errors import ContractViolation
from sqztomo.fock import DensityMatrix

LOGGER = logging.getLogger(__name__)

PHASE_NOISE_MODES = ('two-point', 'gaussian')
CHANNEL_ORDERS = ('phase-noise-then-loss', 'loss-then-phase-noise')

ArrayOrFloat = Union[float, np.ndarray]


class LossParam:
    """Power loss fraction L of an optical channel."""

    def __init__(self, value: float) -> None:
        """Create a LossParam, checking 0 <= L <= 1."""
        if not 0 <= value <= 1:
            raise ContractViolation(
                'loss must be within [0, 1], got {!r}'.format(value))
        self.value = float(value)

    @property
    def transmission(self) -> float:
        """eta = 1 - L."""
        return 1 - self.value


class PhaseNoiseParam:
    """Phase-noise magnitude theta, in radians."""

    def __init__(self, value: float) -> None:
        """Create a PhaseNoiseParam, checking 0 <= theta < pi/2."""
        if not 0 <= value < math.pi / 2:
            raise ContractViolation(
                'phase noise must be within [0, pi/2), got {!r}'.format(
                    value))
        self.value = float(value)


def _loss(value: Union[float, LossParam]) -> LossParam:
    return value if isinstance(value, LossParam) else LossParam(value)


def _phase_noise(value: Union[float, PhaseNoiseParam]) -> PhaseNoiseParam:
    if isinstance(value, PhaseNoiseParam):
        return value
    return PhaseNoiseParam(value)


def loss_kraus_operators(loss: Union[float, LossParam],
                         dim: int) -> np.ndarray:
    """
    Return the Kraus operators of the pure-loss channel.

    A_k maps |n> to sqrt(C(n, k) eta^(n-k) (1-eta)^k) |n-k>; the result has
    shape (dim, dim, dim), indexed by k first.
    """
    eta = _loss(loss).transmission
    n = np.arange(dim)
    kraus = np.zeros((dim, dim, dim))
    for k in range(dim):
        photons = n[k:]
        kraus[k, photons - k, photons] = np.sqrt(
            comb(photons, k) * eta ** (photons - k) * (1 - eta) ** k)
    return kraus


def apply_loss(rho: DensityMatrix,
               loss: Union[float, LossParam]) -> DensityMatrix:
    """Send rho through a beam splitter of transmission 1 - L."""
    loss = _loss(loss)
    if loss.value == 0:
        return rho
    kraus = loss_kraus_operators(loss, rho.dim)
    out = np.sum(kraus @ rho.elements @ kraus.transpose(0, 2, 1), axis=0)
    return DensityMatrix.from_matrix(out)


def apply_phase_noise(rho: DensityMatrix,
                      phase_noise: Union[float, PhaseNoiseParam],
                      mode: str = 'two-point') -> DensityMatrix:
    """
    Dephase rho by a random rotation.

    In the default two-point mode the rotation is +theta or -theta with equal
    probability, i.e. rho_mn -> rho_mn cos((m - n) theta), which reproduces
    the cos^2/sin^2 variance mixing exactly.  The gaussian mode draws the
    rotation from a normal distribution of standard deviation theta.
    """
    theta = _phase_noise(phase_noise).value
    if mode not in PHASE_NOISE_MODES:
        raise ContractViolation(
            'unknown phase noise mode {!r}'.format(mode))
    if theta == 0:
        return rho
    n = np.arange(rho.dim)
    delta = n[:, np.newaxis] - n[np.newaxis, :]
    if mode == 'two-point':
        damping = np.cos(delta * theta)
    else:
        damping = np.exp(-(delta * theta) ** 2 / 2)
    return DensityMatrix.from_matrix(rho.elements * damping)


def degrade(rho: DensityMatrix, loss: float, phase_noise: float,
            mode: str = 'two-point',
            order: str = 'phase-noise-then-loss') -> DensityMatrix:
    """Apply both channels in the given order."""
    if order not in CHANNEL_ORDERS:
        raise ContractViolation('unknown channel order {!r}'.format(order))
    if order == 'phase-noise-then-loss':
        return apply_loss(apply_phase_noise(rho, phase_noise, mode), loss)
    return apply_phase_noise(apply_loss(rho, loss), phase_noise, mode)


def db_to_variance(level_db: ArrayOrFloat) -> ArrayOrFloat:
    """Convert a squeezing level in dB to a vacuum-normalised variance."""
    return 10 ** (-np.asarray(level_db, dtype=np.float64) / 10)


def predicted_variances(
        ideal_sq_db: ArrayOrFloat, loss: ArrayOrFloat,
        phase_noise: ArrayOrFloat) -> Tuple[np.ndarray, np.ndarray]:
    """Vacuum-normalised (V_sq, V_as) of a degraded pure squeezed vacuum."""
    v_sq_id = db_to_variance(ideal_sq_db)
    v_as_id = 1 / v_sq_id
    cos2 = np.cos(phase_noise) ** 2
    sin2 = np.sin(phase_noise) ** 2
    v_sq = (1 - loss) * (v_sq_id * cos2 + v_as_id * sin2) + loss
    v_as = (1 - loss) * (v_as_id * cos2 + v_sq_id * sin2) + loss
    return v_sq, v_as


def predicted_levels(
        ideal_sq_db: ArrayOrFloat, loss: ArrayOrFloat,
        phase_noise: ArrayOrFloat) -> Tuple[np.ndarray, np.ndarray]:
    """
    Return the measured (squeezing, anti-squeezing) levels in dB.

    Squeezing is reported as a positive number of dB below the vacuum and
    anti-squeezing as dB above it.
    """
    if np.any(np.asarray(ideal_sq_db) < 0):
        raise ContractViolation('ideal squeezing must be >= 0 dB')
    v_sq, v_as = predicted_variances(ideal_sq_db, loss, phase_noise)
    return -10 * np.log10(v_sq), 10 * np.log10(v_as)
