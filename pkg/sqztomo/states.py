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
"""Factories for vacuum, thermal and squeezed (thermal) density matrices."""
import logging
import math
from typing import Dict, Optional, Tuple

import numpy as np

from sqztomo.channels import degrade
from sqztomo.errors import ContractViolation, TruncationOverflow
from sqztomo.fock import (
    _check_dim,
    DensityMatrix,
    squeeze_operator,
    SqueezeParams,
)

LOGGER = logging.getLogger(__name__)

DEFAULT_TAIL_TOLERANCE = 1e-6


class ThermalParams:
    """A thermal reservoir, described by its mean photon number."""

    def __init__(self, nbar: float) -> None:
        """Create ThermalParams, checking nbar is finite and >= 0."""
        if not math.isfinite(nbar) or nbar < 0:
            raise ContractViolation(
                'mean photon number must be >= 0, got {!r}'.format(nbar))
        self.nbar = float(nbar)

    def __repr__(self) -> str:
        return 'ThermalParams(nbar={!r})'.format(self.nbar)


def working_dim(dim: int) -> int:
    """Padded dimension in which states are built before cropping to dim."""
    return 2 * dim + 10


def crop(matrix: np.ndarray, dim: int,
         tail_tolerance: float = DEFAULT_TAIL_TOLERANCE) -> DensityMatrix:
    """
    Truncate a unit-trace matrix to its leading dim x dim block.

    :raises TruncationOverflow:
        if the discarded probability is tail_tolerance or more.
    """
    _check_dim(dim)
    kept = float(np.trace(matrix[:dim, :dim]).real)
    tail = max(0.0, 1 - kept)
    if tail >= tail_tolerance:
        raise TruncationOverflow(dim, tail, tail_tolerance)
    return DensityMatrix.from_matrix(matrix[:dim, :dim])


def vacuum(dim: int) -> DensityMatrix:
    """Return |0><0|."""
    return fock_state(0, dim)


def fock_state(n: int, dim: int) -> DensityMatrix:
    """Return the number state |n><n|."""
    _check_dim(dim)
    if not 0 <= n < dim:
        raise ContractViolation(
            'Fock state {} does not fit in dim={}'.format(n, dim))
    elements = np.zeros((dim, dim), dtype=np.complex128)
    elements[n, n] = 1
    return DensityMatrix(elements)


def maximally_mixed(dim: int) -> DensityMatrix:
    """Return I / dim."""
    _check_dim(dim)
    return DensityMatrix(np.eye(dim, dtype=np.complex128) / dim)


def thermal_populations(nbar: float, dim: int) -> np.ndarray:
    """Bose-Einstein populations p_n = nbar^n / (1 + nbar)^(n+1), n < dim."""
    n = np.arange(dim)
    if nbar == 0:
        return (n == 0).astype(np.float64)
    return (nbar / (1 + nbar)) ** n / (1 + nbar)


def thermal(params: ThermalParams, dim: int,
            tail_tolerance: float = DEFAULT_TAIL_TOLERANCE) -> DensityMatrix:
    """Return the thermal state of mean photon number params.nbar."""
    _check_dim(dim)
    populations = thermal_populations(params.nbar, dim)
    return crop(np.diag(populations).astype(np.complex128), dim,
                tail_tolerance)


def squeezed_vacuum(sq: SqueezeParams, dim: int,
                    tail_tolerance: float = DEFAULT_TAIL_TOLERANCE,
                    ) -> DensityMatrix:
    """Return S(xi) |0><0| S(xi)^dagger."""
    _check_dim(dim)
    work = working_dim(dim)
    ket = squeeze_operator(sq, work).elements[:, 0]
    return crop(np.outer(ket, ket.conj()), dim, tail_tolerance)


def squeezed_thermal(sq: SqueezeParams, th: ThermalParams, dim: int,
                     tail_tolerance: float = DEFAULT_TAIL_TOLERANCE,
                     ) -> DensityMatrix:
    """Return S(xi) rho_th S(xi)^dagger."""
    if th.nbar == 0:
        return squeezed_vacuum(sq, dim, tail_tolerance)
    _check_dim(dim)
    work = working_dim(dim)
    rho_th = np.diag(thermal_populations(th.nbar, work))
    s = squeeze_operator(sq, work).elements
    return crop(s @ rho_th @ s.conj().T, dim, tail_tolerance)


class TrainingLimits:
    """
    Ranges the training state family is drawn from.

    Squeezing is uniform in dB, the squeezing angle uniform over a full turn,
    the reservoir occupation log-uniform and both degradations uniform.
    """

    def __init__(self, max_sq_db: float = 8.0, min_nbar: float = 1e-3,
                 max_nbar: float = 0.5, max_loss: float = 0.3,
                 max_phase_noise: float = 0.1) -> None:
        """Create TrainingLimits; see the class docstring for semantics."""
        if not 0 < min_nbar <= max_nbar:
            raise ContractViolation('need 0 < min_nbar <= max_nbar')
        self.max_sq_db = max_sq_db
        self.min_nbar = min_nbar
        self.max_nbar = max_nbar
        self.max_loss = max_loss
        self.max_phase_noise = max_phase_noise

    def as_dict(self) -> Dict[str, float]:
        """Return the limits as a JSON-friendly dict."""
        return dict(vars(self))


def draw_training_state(
        rng: np.random.Generator, limits: TrainingLimits, dim: int,
        tail_tolerance: float = DEFAULT_TAIL_TOLERANCE,
        phase_noise_mode: str = 'two-point',
        channel_order: str = 'phase-noise-then-loss',
        ) -> Tuple[Dict[str, float], DensityMatrix]:
    """
    Draw one member of the training family.

    The squeezed thermal state is built and degraded in the padded working
    dimension and only then cropped to dim, so loss pulls photons back in to
    the truncation before the tail is judged.
    """
    params = {
        'sq_db': rng.uniform(0, limits.max_sq_db),
        'phi': rng.uniform(0, 2 * math.pi),
        'nbar': float(np.exp(rng.uniform(math.log(limits.min_nbar),
                                          math.log(limits.max_nbar)))),
        'loss': rng.uniform(0, limits.max_loss),
        'phase_noise': rng.uniform(0, limits.max_phase_noise),
    }
    state = degraded_state(params, dim, tail_tolerance, phase_noise_mode,
                           channel_order=channel_order)
    return params, state


def degraded_state(params: Dict[str, float], dim: int,
                   tail_tolerance: float = DEFAULT_TAIL_TOLERANCE,
                   phase_noise_mode: str = 'two-point',
                   work_dim: Optional[int] = None,
                   channel_order: str = 'phase-noise-then-loss',
                   ) -> DensityMatrix:
    """
    Build a degraded squeezed thermal state from a parameter dict.

    params holds sq_db, phi, nbar, loss and phase_noise; missing keys default
    to zero.
    """
    work = work_dim or working_dim(dim)
    sq = SqueezeParams.from_db(params.get('sq_db', 0.0),
                               params.get('phi', 0.0))
    th = ThermalParams(params.get('nbar', 0.0))
    # The padded state only has to be a valid matrix; the tail test happens
    # once, after degradation, in crop.
    ideal = squeezed_thermal(sq, th, work, tail_tolerance=1.0)
    noisy = degrade(ideal, params.get('loss', 0.0),
                    params.get('phase_noise', 0.0), phase_noise_mode,
                    channel_order)
    LOGGER.debug('built degraded state %s at dim=%d', params, dim)
    return crop(noisy.elements, dim, tail_tolerance)
