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
Truncated Fock-basis linear algebra.

Quadratures follow x = (a + a^dagger)/sqrt(2) with hbar = 1, so the vacuum
has variance 1/2 in every quadrature.
"""
import math
from typing import Tuple

import numpy as np
import scipy.linalg

from sqztomo.errors import ContractViolation, InvalidDimension, NumericFailure

DEFAULT_DIM = 35
VACUUM_VARIANCE = 0.5

HERMITIAN_TOLERANCE = 1e-12
TRACE_TOLERANCE = 1e-10
PSD_TOLERANCE = 1e-10


def _check_dim(dim: int) -> None:
    if int(dim) != dim or dim < 2:
        raise InvalidDimension(
            'Fock truncation must be an integer >= 2, got {}'.format(dim))


class Operator:
    """A finite complex matrix acting on the truncated Fock space."""

    def __init__(self, elements: np.ndarray) -> None:
        """
        Create an Operator.

        :param elements:
            A square array; it is copied and frozen.
        """
        matrix = np.array(elements, dtype=np.complex128)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ContractViolation(
                'operator must be square, got shape {}'.format(matrix.shape))
        if not np.all(np.isfinite(matrix)):
            raise NumericFailure('operator has non-finite entries')
        matrix.setflags(write=False)
        self.elements = matrix

    @property
    def dim(self) -> int:
        """Size of the truncated Fock basis."""
        return int(self.elements.shape[0])

    @property
    def dagger(self) -> 'Operator':
        """The Hermitian conjugate."""
        return Operator(self.elements.conj().T)

    def __matmul__(self, other: 'Operator') -> 'Operator':
        return Operator(self.elements @ other.elements)


class SqueezeParams:
    """Squeezing parameter xi = r * exp(i * phi)."""

    def __init__(self, r: float, phi: float = 0.0) -> None:
        """
        Create SqueezeParams.

        :param r:
            Squeezing factor, >= 0.
        :param phi:
            Squeezing angle in radians; wrapped in to [0, 2*pi).  The
            quadrature at angle phi/2 is the squeezed one.
        """
        if not math.isfinite(r) or r < 0:
            raise ContractViolation(
                'squeezing factor must be >= 0, got {}'.format(r))
        self.r = float(r)
        self.phi = float(phi) % (2 * math.pi)

    @classmethod
    def from_db(cls, level_db: float, phi: float = 0.0) -> 'SqueezeParams':
        """Build from a squeezing level in dB, i.e. 20 r / ln 10."""
        return cls(level_db * math.log(10) / 20, phi)

    @property
    def xi(self) -> complex:
        """The complex squeezing parameter."""
        return complex(self.r * np.exp(1j * self.phi))

    @property
    def level_db(self) -> float:
        """Squeezing level of the ideal squeezed vacuum, in dB."""
        return 20 * self.r / math.log(10)

    def negated(self) -> 'SqueezeParams':
        """Return the parameters for -xi."""
        return SqueezeParams(self.r, self.phi + math.pi)

    def __repr__(self) -> str:
        return 'SqueezeParams(r={!r}, phi={!r})'.format(self.r, self.phi)


class DensityMatrix:
    """
    A Hermitian, positive semi-definite, unit-trace matrix in the Fock basis.

    Instances are immutable; every constructor validates all three
    properties and raises ContractViolation when one fails.
    """

    def __init__(self, elements: np.ndarray) -> None:
        """
        Create a DensityMatrix from already-physical elements.

        :param elements:
            A square complex array.  Use from_matrix to symmetrise and
            renormalise a nearly-physical matrix first.
        """
        matrix = np.array(elements, dtype=np.complex128)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ContractViolation(
                'density matrix must be square, got shape {}'.format(
                    matrix.shape))
        _check_dim(matrix.shape[0])
        if not np.all(np.isfinite(matrix)):
            raise NumericFailure('density matrix has non-finite entries')
        asymmetry = np.max(np.abs(matrix - matrix.conj().T))
        if asymmetry > HERMITIAN_TOLERANCE:
            raise ContractViolation(
                'density matrix is not Hermitian (off by {:.3g})'.format(
                    asymmetry))
        trace = np.trace(matrix).real
        if abs(trace - 1) > TRACE_TOLERANCE:
            raise ContractViolation(
                'density matrix trace is {!r}, not 1'.format(trace))
        smallest = np.linalg.eigvalsh(matrix)[0]
        if smallest < -PSD_TOLERANCE:
            raise ContractViolation(
                'density matrix has eigenvalue {:.3g} < 0'.format(smallest))
        matrix.setflags(write=False)
        self.elements = matrix

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> 'DensityMatrix':
        """Hermitise and trace-normalise matrix, then validate it."""
        matrix = np.asarray(matrix, dtype=np.complex128)
        matrix = (matrix + matrix.conj().T) / 2
        trace = np.trace(matrix).real
        if not trace > 0:
            raise ContractViolation(
                'cannot normalise a matrix with trace {!r}'.format(trace))
        return cls(matrix / trace)

    @classmethod
    def from_ket(cls, ket: np.ndarray) -> 'DensityMatrix':
        """Build the projector on to a (not necessarily normalised) ket."""
        ket = np.asarray(ket, dtype=np.complex128)
        return cls.from_matrix(np.outer(ket, ket.conj()))

    @property
    def dim(self) -> int:
        """Size of the truncated Fock basis."""
        return int(self.elements.shape[0])

    @property
    def photon_distribution(self) -> np.ndarray:
        """Fock populations, the real diagonal."""
        return np.clip(np.diagonal(self.elements).real, 0, None)

    def expectation(self, operator: Operator) -> complex:
        """Return tr(rho O)."""
        return complex(np.trace(self.elements @ operator.elements))

    def transformed(self, unitary: Operator) -> 'DensityMatrix':
        """Return U rho U^dagger."""
        u = unitary.elements
        return DensityMatrix.from_matrix(u @ self.elements @ u.conj().T)

    def __repr__(self) -> str:
        return '<DensityMatrix dim={}>'.format(self.dim)


def annihilation(dim: int) -> Operator:
    """Return the truncated ladder operator a, with a[n-1][n] = sqrt(n)."""
    _check_dim(dim)
    return Operator(np.diag(np.sqrt(np.arange(1, dim)), k=1))


def number_operator(dim: int) -> Operator:
    """Return a^dagger a, exact on the truncation."""
    _check_dim(dim)
    return Operator(np.diag(np.arange(dim, dtype=np.float64)))


def quadrature_operator(theta: float, dim: int) -> Operator:
    """Return x_theta = (a exp(-i theta) + a^dagger exp(i theta)) / sqrt(2)."""
    a = annihilation(dim).elements
    return Operator(
        (a * np.exp(-1j * theta) + a.T * np.exp(1j * theta)) / math.sqrt(2))


def quadrature_square(theta: float, dim: int) -> Operator:
    """
    Return x_theta squared.

    This is built from a^2, a^dagger^2 and the exact a a^dagger = n + 1 rather
    than by squaring the truncated x_theta, which is wrong in the last row.
    """
    a = annihilation(dim).elements
    a2 = a @ a
    n = number_operator(dim).elements
    square = (a2 * np.exp(-2j * theta) + a2.T * np.exp(2j * theta)
              + 2 * n + np.eye(dim)) / 2
    return Operator(square)


def matrix_exponential(op: Operator) -> Operator:
    """
    Return exp(op).

    scipy's scaling-and-squaring Pade implementation does the work; an
    overflowing result raises NumericFailure.
    """
    try:
        with np.errstate(over='ignore', invalid='ignore'):
            result = scipy.linalg.expm(op.elements)
    except (OverflowError, ValueError) as exc:
        raise NumericFailure('matrix exponential failed: {}'.format(exc))
    if not np.all(np.isfinite(result)):
        raise NumericFailure('matrix exponential overflowed')
    return Operator(result)


def squeeze_generator(params: SqueezeParams, dim: int) -> Operator:
    """Return (xi* a^2 - xi a^dagger^2) / 2, the exponent of S(xi)."""
    a = annihilation(dim).elements
    a2 = a @ a
    xi = params.xi
    return Operator((np.conj(xi) * a2 - xi * a2.T) / 2)


def squeeze_operator(params: SqueezeParams, dim: int) -> Operator:
    """Return S(xi) = exp[(xi* a^2 - xi a^dagger^2) / 2] on the truncation."""
    _check_dim(dim)
    if params.r == 0:
        return Operator(np.eye(dim))
    return matrix_exponential(squeeze_generator(params, dim))


def rotation_operator(theta: float, dim: int) -> Operator:
    """Return U(theta) = exp(-i theta a^dagger a)."""
    _check_dim(dim)
    return Operator(np.diag(np.exp(-1j * theta * np.arange(dim))))


def hermitian_eigendecomposition(
        matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Diagonalise a Hermitian matrix.

    :returns:
        (eigenvalues, eigenvectors) with the eigenvalues real and sorted in
        descending order and the eigenvectors as matching columns.
    """
    matrix = np.asarray(matrix, dtype=np.complex128)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ContractViolation(
            'cannot diagonalise a matrix of shape {}'.format(matrix.shape))
    scale = max(1.0, float(np.max(np.abs(matrix), initial=0.0)))
    if np.max(np.abs(matrix - matrix.conj().T), initial=0.0) > 1e-8 * scale:
        raise ContractViolation('matrix is not Hermitian')
    values, vectors = np.linalg.eigh((matrix + matrix.conj().T) / 2)
    return values[::-1], vectors[:, ::-1]


def sqrtm_psd(matrix: np.ndarray) -> np.ndarray:
    """Square root of a PSD matrix, clamping slightly negative eigenvalues."""
    values, vectors = hermitian_eigendecomposition(matrix)
    roots = np.sqrt(np.clip(values, 0, None))
    return (vectors * roots) @ vectors.conj().T


def embed(matrix: np.ndarray, dim: int) -> np.ndarray:
    """Zero-pad a square matrix to dim x dim."""
    out = np.zeros((dim, dim), dtype=np.complex128)
    size = min(dim, matrix.shape[0])
    out[:size, :size] = matrix[:size, :size]
    return out
