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
Balanced homodyne detection of a density matrix.

p(x | theta) = <x_theta| rho |x_theta>, with <x_theta|n> = exp(-i n theta)
psi_n(x) and psi_n the Hermite functions.
"""
import logging
import math
from typing import Iterator, Optional, Sequence, Tuple, Union

import numpy as np

from sqztomo.errors import ContractViolation
from sqztomo.fock import (
    DensityMatrix,
    quadrature_operator,
    quadrature_square,
    VACUUM_VARIANCE,
)

LOGGER = logging.getLogger(__name__)

DEFAULT_RECORD_LENGTH = 2048
GRID_NODES = 4096
SCHEDULE_KINDS = ('linear-scan', 'fixed-set', 'random-uniform')

_PHASE_CHUNK = 256

Seed = Union[int, np.random.Generator]


class QuadratureRecord:
    """
    An ordered sequence of (LO phase, quadrature value) measurements.

    Phases are wrapped in to [0, 2*pi) on construction; values must be
    finite and the record non-empty.
    """

    def __init__(self, phases: Sequence[float],
                 values: Sequence[float]) -> None:
        """
        Create a QuadratureRecord.

        :param phases:
            Local-oscillator phase of each point, in radians.
        :param values:
            Measured quadrature amplitude of each point.
        """
        phases = np.array(phases, dtype=np.float64).ravel()
        values = np.array(values, dtype=np.float64).ravel()
        if phases.shape != values.shape:
            raise ContractViolation(
                'got {} phases but {} values'.format(len(phases),
                                                     len(values)))
        if len(values) == 0:
            raise ContractViolation('a quadrature record needs >= 1 point')
        if not (np.all(np.isfinite(phases)) and np.all(np.isfinite(values))):
            raise ContractViolation('quadrature record has non-finite data')
        phases = np.mod(phases, 2 * math.pi)
        phases.setflags(write=False)
        values.setflags(write=False)
        self.phases = phases
        self.values = values

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self) -> Iterator[Tuple[float, float]]:
        return zip(self.phases.tolist(), self.values.tolist())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QuadratureRecord):
            return NotImplemented
        return (np.array_equal(self.phases, other.phases)
                and np.array_equal(self.values, other.values))

    def head(self, length: int) -> 'QuadratureRecord':
        """Return the first length points."""
        return QuadratureRecord(self.phases[:length], self.values[:length])

    def __repr__(self) -> str:
        return '<QuadratureRecord length={}>'.format(len(self))


class PhaseSchedule:
    """
    How the local-oscillator phase moves during a record.

    ``linear-scan`` sweeps [0, span) evenly, ``fixed-set`` steps through the
    given phases in equal consecutive blocks and ``random-uniform`` draws
    each phase uniformly from [0, span).
    """

    def __init__(self, kind: str = 'linear-scan', span: float = math.pi,
                 phases: Optional[Sequence[float]] = None) -> None:
        """Create a PhaseSchedule; see the class docstring."""
        if kind not in SCHEDULE_KINDS:
            raise ContractViolation(
                'unknown phase schedule {!r}'.format(kind))
        if kind == 'fixed-set' and not phases:
            raise ContractViolation('a fixed-set schedule needs phases')
        if span < math.pi - 1e-12:
            raise ContractViolation(
                'a schedule must cover at least [0, pi), got span '
                '{!r}'.format(span))
        self.kind = kind
        self.span = float(span)
        self.fixed = tuple(float(p) for p in phases or ())

    def phases(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Return the n phases of a record."""
        if self.kind == 'linear-scan':
            return self.span * np.arange(n) / n
        if self.kind == 'random-uniform':
            return rng.uniform(0, self.span, size=n)
        block = np.arange(n) * len(self.fixed) // n
        return np.asarray(self.fixed)[block]


def hermite_functions(x: np.ndarray, dim: int) -> np.ndarray:
    """
    Evaluate psi_0 .. psi_{dim-1} at x.

    Uses the upward recurrence on the normalised functions, which stays
    finite where raw Hermite polynomials overflow.

    :returns:
        An array of shape (len(x), dim).
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    psi = np.empty((len(x), dim))
    psi[:, 0] = math.pi ** -0.25 * np.exp(-x ** 2 / 2)
    if dim > 1:
        psi[:, 1] = math.sqrt(2) * x * psi[:, 0]
    for n in range(1, dim - 1):
        psi[:, n + 1] = (math.sqrt(2 / (n + 1)) * x * psi[:, n]
                         - math.sqrt(n / (n + 1)) * psi[:, n - 1])
    return psi


def quadrature_amplitudes(theta: float, x: np.ndarray,
                          dim: int) -> np.ndarray:
    """Return rows <x_theta|n> for every x, shape (len(x), dim)."""
    phase = np.exp(-1j * theta * np.arange(dim))
    return hermite_functions(x, dim) * phase


def quadrature_pdf(rho: DensityMatrix, theta: float,
                   x: Union[float, np.ndarray]) -> np.ndarray:
    """Return p(x | theta), clipped at zero against rounding."""
    amplitudes = quadrature_amplitudes(theta, np.atleast_1d(x), rho.dim)
    density = np.einsum('km,mn,kn->k', amplitudes, rho.elements,
                        amplitudes.conj()).real
    return np.clip(density, 0, None)


def _diagonal_profiles(rho: DensityMatrix,
                       psi: np.ndarray) -> np.ndarray:
    """g_d(x) = sum_m rho[m, m-d] psi_m(x) psi_{m-d}(x) for d >= 0."""
    dim = rho.dim
    profiles = np.empty((dim, psi.shape[0]), dtype=np.complex128)
    for d in range(dim):
        band = np.diagonal(rho.elements, offset=-d)
        profiles[d] = (psi[:, d:] * psi[:, :dim - d]) @ band
    return profiles


def quadrature_pdf_grid(rho: DensityMatrix, thetas: np.ndarray,
                        x: np.ndarray) -> np.ndarray:
    """
    Return p(x | theta) for every pair of thetas and x.

    p is written as g_0 + 2 sum_d Re[exp(-i d theta) g_d], which turns the
    whole grid in to two real matrix products.

    :returns:
        An array of shape (len(thetas), len(x)).
    """
    thetas = np.atleast_1d(np.asarray(thetas, dtype=np.float64))
    profiles = _diagonal_profiles(rho, hermite_functions(x, rho.dim))
    d = np.arange(1, rho.dim)
    angles = thetas[:, np.newaxis] * d[np.newaxis, :]
    density = (profiles[0].real[np.newaxis, :]
               + 2 * (np.cos(angles) @ profiles[1:].real
                      + np.sin(angles) @ profiles[1:].imag))
    return np.clip(density, 0, None)


def pdf_normalization(rho: DensityMatrix, theta: float,
                      nodes: int = 200) -> float:
    """Integrate p(x | theta) over x with Gauss-Hermite quadrature."""
    x, weights = np.polynomial.hermite.hermgauss(nodes)
    return float(np.sum(weights * np.exp(x ** 2)
                        * quadrature_pdf(rho, theta, x)))


def quadrature_mean(rho: DensityMatrix, theta: float) -> float:
    """Return <x_theta>."""
    return rho.expectation(quadrature_operator(theta, rho.dim)).real


def quadrature_variance(rho: DensityMatrix, theta: float) -> float:
    """Return <x_theta^2> - <x_theta>^2 from the matrix elements."""
    second = rho.expectation(quadrature_square(theta, rho.dim)).real
    return second - quadrature_mean(rho, theta) ** 2


def quadrature_covariance(rho: DensityMatrix) -> np.ndarray:
    """
    Return the 2x2 covariance matrix of (x, p).

    The off-diagonal is the symmetrised covariance, so that
    V(theta) = Vx cos^2 + Vp sin^2 + 2 Cxp sin cos.
    """
    vx = quadrature_variance(rho, 0.0)
    vp = quadrature_variance(rho, math.pi / 2)
    vd = quadrature_variance(rho, math.pi / 4)
    cxp = vd - (vx + vp) / 2
    return np.array([[vx, cxp], [cxp, vp]])


def sampling_grid(rho: DensityMatrix, nodes: int = GRID_NODES) -> np.ndarray:
    """
    Return the x grid inverse-CDF sampling uses for rho.

    It spans (6 + 3 e^r) vacuum standard deviations, with e^r read off the
    largest quadrature variance, and never less than the reach of the
    highest Fock function in the truncation.
    """
    largest = float(np.linalg.eigvalsh(quadrature_covariance(rho))[-1])
    stretch = math.sqrt(max(largest, VACUUM_VARIANCE) / VACUUM_VARIANCE)
    sigma_vac = math.sqrt(VACUUM_VARIANCE)
    offset = math.hypot(quadrature_mean(rho, 0.0),
                        quadrature_mean(rho, math.pi / 2))
    half_width = max((6 + 3 * stretch) * sigma_vac,
                     math.sqrt(2 * rho.dim + 1) + 4) + offset
    return np.linspace(-half_width, half_width, nodes)


def _inverse_cdf(density: np.ndarray, grid: np.ndarray,
                 uniforms: np.ndarray) -> np.ndarray:
    """Invert row-wise piecewise-linear CDFs at one uniform per row."""
    steps = (density[:, 1:] + density[:, :-1]) / 2 * np.diff(grid)
    cdf = np.concatenate([np.zeros((len(density), 1)),
                          np.cumsum(steps, axis=1)], axis=1)
    cdf /= cdf[:, -1:]
    idx = np.sum(cdf < uniforms[:, np.newaxis], axis=1)
    idx = np.clip(idx, 1, len(grid) - 1)
    rows = np.arange(len(density))
    lo, hi = cdf[rows, idx - 1], cdf[rows, idx]
    frac = np.where(hi > lo, (uniforms - lo) / np.where(hi > lo, hi - lo, 1),
                    0.5)
    return grid[idx - 1] + frac * (grid[idx] - grid[idx - 1])


def sample(rho: DensityMatrix, schedule: PhaseSchedule, n: int,
           seed: Seed) -> QuadratureRecord:
    """
    Simulate a homodyne record of n points.

    Each point is an independent draw from p(x | theta_i), taken by
    inverting the CDF on a fixed grid; distinct phases are evaluated once.
    The result is a deterministic function of (rho, schedule, n, seed).
    """
    if n < 1:
        raise ContractViolation('need at least one sample, got {}'.format(n))
    rng = seed if isinstance(seed, np.random.Generator) else \
        np.random.default_rng(seed)
    phases = schedule.phases(n, rng)
    uniforms = rng.random(n)
    grid = sampling_grid(rho)
    unique, inverse = np.unique(phases, return_inverse=True)
    values = np.empty(n)
    for start in range(0, len(unique), _PHASE_CHUNK):
        chunk = unique[start:start + _PHASE_CHUNK]
        density = quadrature_pdf_grid(rho, chunk, grid)
        mask = (inverse >= start) & (inverse < start + len(chunk))
        rows = density[inverse[mask] - start]
        values[mask] = _inverse_cdf(rows, grid, uniforms[mask])
    LOGGER.debug('sampled %d points at %d distinct phases', n, len(unique))
    return QuadratureRecord(phases, values)


def load_record(path: str) -> QuadratureRecord:
    """Read a record from CSV or the binary record format."""
    from sqztomo import io
    return io.read_record(path)


def save_record(record: QuadratureRecord, path: str,
                binary: bool = False) -> None:
    """Write a record as CSV, or in the binary record format."""
    from sqztomo import io
    io.write_record(record, path, binary=binary)
