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
"""Figures of merit for reconstructed states."""
import logging
import math
from typing import List, NamedTuple, Optional, Tuple, Union

import numpy as np
from scipy.optimize import minimize
from scipy.special import eval_genlaguerre, gammaln

from sqztomo.errors import ContractViolation, NumericFailure, SqztomoError
from sqztomo.fock import (
    DensityMatrix,
    hermitian_eigendecomposition,
    sqrtm_psd,
    SqueezeParams,
    VACUUM_VARIANCE,
)
from sqztomo.homodyne import quadrature_covariance
from sqztomo.states import maximally_mixed, squeezed_thermal, ThermalParams

LOGGER = logging.getLogger(__name__)

__all__ = [
    'Decomposition',
    'decompose',
    'fidelity',
    'match_squeezed_thermal',
    'purity',
    'purity_from_levels',
    'quadrature_covariance',
    'squeezing_levels',
    'trace_distance',
    'wigner',
    'WignerGrid',
]

IMAGINARY_TOLERANCE = 1e-10
DEGENERACY_GAP = 1e-9
WIGNER_POINTS = 201
WIGNER_SIGMAS = 6

ArrayOrFloat = Union[float, np.ndarray]


def _same_dim(rho: DensityMatrix, sigma: DensityMatrix) -> None:
    if rho.dim != sigma.dim:
        raise ContractViolation(
            'cannot compare states of dim {} and {}'.format(rho.dim,
                                                            sigma.dim))


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Return |tr sqrt(sqrt(rho) sigma sqrt(rho))|^2, clipped to [0, 1]."""
    _same_dim(rho, sigma)
    root = sqrtm_psd(rho.elements)
    inner = root @ sigma.elements @ root
    values = np.linalg.eigvalsh((inner + inner.conj().T) / 2)
    value = float(np.sum(np.sqrt(np.clip(values, 0, None))) ** 2)
    return min(max(value, 0.0), 1.0)


def purity(rho: DensityMatrix) -> float:
    """Return tr(rho^2)."""
    value = float(np.sum(np.abs(rho.elements) ** 2))
    return min(max(value, 1 / rho.dim), 1.0)


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Return tr|rho - sigma| / 2."""
    _same_dim(rho, sigma)
    diff = rho.elements - sigma.elements
    return float(np.sum(np.abs(np.linalg.eigvalsh(diff))) / 2)


class SqueezingLevels(NamedTuple):
    """Squeezing below and anti-squeezing above the vacuum, in dB."""

    sq_db: float
    as_db: float
    angle_min: float


def squeezing_levels(rho: DensityMatrix) -> SqueezingLevels:
    """
    Return the extreme quadrature noise levels of rho.

    The extremes are the eigenvalues of the (x, p) covariance matrix; the
    angle of the least noisy quadrature is reported in [0, pi).
    """
    values, vectors = np.linalg.eigh(quadrature_covariance(rho))
    if values[0] <= 0:
        raise NumericFailure(
            'non-positive quadrature variance {!r}'.format(values[0]))
    angle = math.atan2(vectors[1, 0], vectors[0, 0]) % math.pi
    return SqueezingLevels(
        sq_db=-10 * math.log10(values[0] / VACUUM_VARIANCE),
        as_db=10 * math.log10(values[1] / VACUUM_VARIANCE),
        angle_min=angle)


def purity_from_levels(sq_db: ArrayOrFloat,
                       as_db: ArrayOrFloat) -> ArrayOrFloat:
    """Purity of a Gaussian state with the given levels, 1/sqrt(V_sq V_as)."""
    v_sq = 10 ** (-np.asarray(sq_db, dtype=np.float64) / 10)
    v_as = 10 ** (np.asarray(as_db, dtype=np.float64) / 10)
    return 1 / np.sqrt(v_sq * v_as)


class WignerGrid:
    """
    W(x, p) sampled on a rectangular grid.

    values[i, j] is W(x_axis[i], p_axis[j]).
    """

    def __init__(self, x_axis: np.ndarray, p_axis: np.ndarray,
                 values: np.ndarray) -> None:
        self.x_axis = np.asarray(x_axis, dtype=np.float64)
        self.p_axis = np.asarray(p_axis, dtype=np.float64)
        self.values = np.asarray(values, dtype=np.float64)

    @property
    def dx(self) -> float:
        """Grid step along x."""
        return float(self.x_axis[1] - self.x_axis[0])

    @property
    def dp(self) -> float:
        """Grid step along p."""
        return float(self.p_axis[1] - self.p_axis[0])

    def normalization(self) -> float:
        """Riemann sum of W over the grid."""
        return float(self.values.sum() * self.dx * self.dp)

    def marginal_x(self) -> np.ndarray:
        """Integral of W over p at every x."""
        return self.values.sum(axis=1) * self.dp

    def rows(self) -> List[Tuple[float, float, float]]:
        """Flatten to (x, p, W) triples, x major."""
        return [(float(x), float(p), float(self.values[i, j]))
                for i, x in enumerate(self.x_axis)
                for j, p in enumerate(self.p_axis)]


def default_axis(rho: DensityMatrix,
                 points: int = WIGNER_POINTS) -> np.ndarray:
    """A symmetric axis spanning WIGNER_SIGMAS of the noisiest quadrature."""
    widest = max(float(np.linalg.eigvalsh(quadrature_covariance(rho))[-1]),
                 VACUUM_VARIANCE)
    half = WIGNER_SIGMAS * math.sqrt(widest)
    return np.linspace(-half, half, points)


def _kernel(x: np.ndarray, p: np.ndarray, m: int, n: int) -> np.ndarray:
    """Fock-basis Wigner kernel W_mn for m >= n."""
    r2 = x ** 2 + p ** 2
    k = m - n
    log_coeff = 0.5 * (k * math.log(2) + gammaln(n + 1) - gammaln(m + 1))
    return (np.exp(-r2 + log_coeff) / math.pi * (-1) ** n
            * (x - 1j * p) ** k * eval_genlaguerre(n, k, 2 * r2))


def wigner(rho: DensityMatrix, x_axis: Optional[np.ndarray] = None,
           p_axis: Optional[np.ndarray] = None) -> WignerGrid:
    """
    Return the Wigner function of rho on a grid.

    W = sum_{m,n} rho_mn W_mn, with W_mn for m < n the conjugate of W_nm.

    :raises NumericFailure:
        if the sum keeps an imaginary part above IMAGINARY_TOLERANCE.
    """
    x_axis = default_axis(rho) if x_axis is None else np.asarray(x_axis)
    p_axis = default_axis(rho) if p_axis is None else np.asarray(p_axis)
    x, p = np.meshgrid(x_axis, p_axis, indexing='ij')
    total = np.zeros(x.shape, dtype=np.complex128)
    elements = rho.elements
    for m in range(rho.dim):
        for n in range(m + 1):
            kernel = _kernel(x, p, m, n)
            total += elements[m, n] * kernel
            if m != n:
                total += elements[n, m] * kernel.conj()
    residue = float(np.max(np.abs(total.imag)))
    if residue > IMAGINARY_TOLERANCE:
        raise NumericFailure(
            'Wigner function has imaginary residue {:.3g}'.format(residue))
    return WignerGrid(x_axis, p_axis, total.real)


class Decomposition:
    """
    rho = sigma1 |v1><v1| + sigma_non residual.

    :param sigma1:
        The largest eigenvalue of rho.
    :param dominant:
        The pure state |v1><v1|.
    :param sigma_non:
        1 - sigma1.
    :param residual:
        The normalised remainder; I/dim when rho is pure.
    :param ambiguous:
        True when the top eigenvalue is degenerate within DEGENERACY_GAP.
    """

    def __init__(self, sigma1: float, dominant: DensityMatrix,
                 sigma_non: float, residual: DensityMatrix,
                 ambiguous: bool) -> None:
        self.sigma1 = sigma1
        self.dominant = dominant
        self.sigma_non = sigma_non
        self.residual = residual
        self.ambiguous = ambiguous


def _fix_phase(vector: np.ndarray) -> np.ndarray:
    """Make the first non-negligible component real and positive."""
    for component in vector:
        if abs(component) > 1e-12:
            return vector * (abs(component) / component)
    return vector


def decompose(rho: DensityMatrix) -> Decomposition:
    """Split rho into its dominant pure component and the rest."""
    values, vectors = hermitian_eigendecomposition(rho.elements)
    values = np.clip(values, 0, None)
    sigma1 = float(values[0])
    ambiguous = bool(values[0] - values[1] < DEGENERACY_GAP)
    if ambiguous:
        LOGGER.warning('top eigenvalue is degenerate; dominant component '
                       'is a convention')
    dominant = DensityMatrix.from_ket(_fix_phase(vectors[:, 0]))
    sigma_non = 1 - sigma1
    rest = (vectors[:, 1:] * values[1:]) @ vectors[:, 1:].conj().T
    if values[1:].sum() > 1e-12:
        residual = DensityMatrix.from_matrix(rest)
    else:
        residual = maximally_mixed(rho.dim)
    return Decomposition(sigma1, dominant, sigma_non, residual, ambiguous)


class SqueezedThermalMatch(NamedTuple):
    """The squeezed thermal state closest to a target, and its fidelity."""

    squeeze: SqueezeParams
    thermal: ThermalParams
    fidelity: float


def _moment_guess(rho: DensityMatrix) -> np.ndarray:
    levels = squeezing_levels(rho)
    v_min = VACUUM_VARIANCE * 10 ** (-levels.sq_db / 10)
    v_max = VACUUM_VARIANCE * 10 ** (levels.as_db / 10)
    nbar = max(math.sqrt(v_min * v_max) / (2 * VACUUM_VARIANCE) - 0.5, 0.0)
    r = max(math.log(v_max / v_min) / 4, 0.0)
    return np.array([r, 2 * levels.angle_min, nbar])


def match_squeezed_thermal(rho: DensityMatrix,
                           tail_tolerance: float = 1e-2,
                           max_evaluations: int = 200,
                           ) -> SqueezedThermalMatch:
    """
    Find the squeezed thermal state of highest fidelity to rho.

    The search starts from the state with the same covariance matrix and is
    refined with Nelder-Mead over (r, phi, nbar).
    """
    def build(params: np.ndarray) -> Tuple[SqueezeParams, ThermalParams]:
        r, phi, nbar = params
        return SqueezeParams(abs(r), phi), ThermalParams(abs(nbar))

    def cost(params: np.ndarray) -> float:
        sq, th = build(params)
        try:
            candidate = squeezed_thermal(sq, th, rho.dim, tail_tolerance)
        except SqztomoError:
            return 1.0
        return 1 - fidelity(rho, candidate)

    result = minimize(cost, _moment_guess(rho), method='Nelder-Mead',
                      options={'maxfev': max_evaluations,
                               'xatol': 1e-6, 'fatol': 1e-10})
    sq, th = build(result.x)
    LOGGER.debug('best squeezed thermal match %r %r, fidelity %.6f',
                 sq, th, 1 - result.fun)
    return SqueezedThermalMatch(sq, th, float(1 - result.fun))
