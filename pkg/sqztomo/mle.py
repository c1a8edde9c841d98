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
Iterative maximum-likelihood reconstruction from binned homodyne data.

The record is folded on to phases in [0, pi) (x_{theta+pi} = -x_theta),
histogrammed on a phase x quadrature grid and fitted with the diluted
R.rho.R iteration

    rho <- N[(I + eps (R - I)) rho (I + eps (R - I))],
    R = sum_j (f_j / p_j) Pi_j

where f_j is the observed frequency of bin j and Pi_j its bin-integrated
projector.  Every iterate is positive semi-definite with unit trace.
"""
import logging
import math
import time
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from sqztomo.errors import ContractViolation, InsufficientData
from sqztomo.fock import _check_dim, DEFAULT_DIM, DensityMatrix
from sqztomo.homodyne import quadrature_amplitudes, QuadratureRecord
from sqztomo.states import maximally_mixed

LOGGER = logging.getLogger(__name__)

DECREASE_SLACK = 1e-12
RESTORE_AFTER = 5
MIN_DILUTION = 1e-12


class MleConfig:
    """Knobs of the maximum-likelihood reconstruction."""

    def __init__(self, dim: int = DEFAULT_DIM, phase_bins: int = 20,
                 quadrature_bins: int = 100, subnodes: int = 3,
                 max_iters: int = 2000, dilution: float = 0.5,
                 tolerance: float = 1e-9, patience: int = 3) -> None:
        """
        Create an MleConfig.

        :param dim:
            Fock truncation of the reconstruction.
        :param phase_bins:
            Number of equal-width phase bins over [0, pi).
        :param quadrature_bins:
            Number of equal-width quadrature bins per phase bin.
        :param subnodes:
            Midpoint-rule nodes per quadrature bin when integrating the
            projectors.
        :param max_iters:
            Iteration cap, rejected steps included.
        :param dilution:
            Initial step size eps, in (0, 1].
        :param tolerance:
            Log-likelihood change below which an iteration counts as still.
        :param patience:
            Consecutive still iterations needed to stop.
        """
        _check_dim(dim)
        if not 0 < dilution <= 1:
            raise ContractViolation(
                'dilution must be within (0, 1], got {!r}'.format(dilution))
        if max_iters < 1:
            raise ContractViolation('max_iters must be >= 1')
        if min(phase_bins, quadrature_bins, subnodes, patience) < 1:
            raise ContractViolation('bin, node and patience counts must '
                                    'be >= 1')
        self.dim = int(dim)
        self.phase_bins = int(phase_bins)
        self.quadrature_bins = int(quadrature_bins)
        self.subnodes = int(subnodes)
        self.max_iters = int(max_iters)
        self.dilution = float(dilution)
        self.tolerance = float(tolerance)
        self.patience = int(patience)

    @property
    def bin_count(self) -> int:
        """Histogram bins per phase."""
        return self.quadrature_bins

    def as_dict(self) -> Dict[str, Any]:
        """Return the configuration as a JSON-friendly dict."""
        return dict(vars(self))


class QuadratureHistogram:
    """
    Counts of a folded record on a phase x quadrature grid.

    :param phases:
        Representative phase of each phase bin (the mean folded phase of
        its points, or the bin centre when empty).
    :param x_edges:
        Quadrature bin edges, shared by every phase bin.
    :param counts:
        Array of shape (len(phases), len(x_edges) - 1).
    """

    def __init__(self, phases: np.ndarray, x_edges: np.ndarray,
                 counts: np.ndarray) -> None:
        counts = np.asarray(counts, dtype=np.float64)
        if counts.shape != (len(phases), len(x_edges) - 1):
            raise ContractViolation('histogram counts do not match its bins')
        if np.any(counts < 0) or not counts.sum() > 0:
            raise InsufficientData('histogram holds no counts')
        self.phases = np.asarray(phases, dtype=np.float64)
        self.x_edges = np.asarray(x_edges, dtype=np.float64)
        self.counts = counts

    @property
    def total(self) -> float:
        """Total number of counts."""
        return float(self.counts.sum())


class Projectors:
    """
    Bin-integrated projectors of the nonempty bins of a histogram.

    The projector of bin b is sum_k |row_k><row_k| over the rows k
    with owner[k] == b; frequencies[b] and weights[b] are the observed
    frequency and phase-bin share of that bin.
    """

    def __init__(self, rows: np.ndarray, owner: np.ndarray,
                 frequencies: np.ndarray, weights: np.ndarray) -> None:
        self.rows = rows
        self.owner = owner
        self.frequencies = frequencies
        self.weights = weights

    def __len__(self) -> int:
        return len(self.frequencies)

    def probabilities(self, rho: np.ndarray) -> np.ndarray:
        """p_b = w_b sum_k <row_k| rho |row_k>."""
        diag = np.sum((self.rows.conj() @ rho) * self.rows, axis=1).real
        per_bin = np.bincount(self.owner, weights=diag,
                              minlength=len(self))
        return np.clip(per_bin, 0, None) * self.weights

    def r_operator(self, probabilities: np.ndarray) -> np.ndarray:
        """R = sum_b (f_b / p_b) Pi_b over bins with p_b > 0."""
        with np.errstate(divide='ignore', invalid='ignore'):
            ratio = np.where(probabilities > 0,
                             self.frequencies / probabilities, 0.0)
        row_weight = (ratio * self.weights)[self.owner]
        return (self.rows.T * row_weight) @ self.rows.conj()


def fold_record(record: QuadratureRecord) -> Tuple[np.ndarray, np.ndarray]:
    """Map every point to a phase in [0, pi), negating x where needed."""
    upper = record.phases >= math.pi
    phases = np.where(upper, record.phases - math.pi, record.phases)
    values = np.where(upper, -record.values, record.values)
    return phases, values


def default_x_range(record: QuadratureRecord, dim: int) -> float:
    """Half-width of the quadrature grid for a record."""
    return max(float(np.max(np.abs(record.values))) + 1.0,
               math.sqrt(2 * dim + 1) + 1.0)


def bin_record(record: QuadratureRecord, cfg: MleConfig,
               x_range: Optional[float] = None) -> QuadratureHistogram:
    """Fold and histogram a record."""
    if len(record) < 1:
        raise InsufficientData('cannot bin an empty record')
    half = x_range or default_x_range(record, cfg.dim)
    phases, values = fold_record(record)
    phase_edges = np.linspace(0, math.pi, cfg.phase_bins + 1)
    x_edges = np.linspace(-half, half, cfg.quadrature_bins + 1)
    counts, _, _ = np.histogram2d(phases, values, bins=(phase_edges, x_edges))
    which = np.clip(np.digitize(phases, phase_edges) - 1, 0,
                    cfg.phase_bins - 1)
    sums = np.bincount(which, weights=phases, minlength=cfg.phase_bins)
    members = np.bincount(which, minlength=cfg.phase_bins)
    centres = (phase_edges[1:] + phase_edges[:-1]) / 2
    with np.errstate(invalid='ignore', divide='ignore'):
        means = np.where(members > 0, sums / np.maximum(members, 1), centres)
    dropped = len(record) - int(counts.sum())
    if dropped:
        LOGGER.warning('%d points fell outside +/-%.3g and were dropped',
                       dropped, half)
    return QuadratureHistogram(means, x_edges, counts)


def _subnodes(edges: np.ndarray, count: int) -> Tuple[np.ndarray, float]:
    """Midpoint-rule nodes of every bin and the weight of each node."""
    width = edges[1] - edges[0]
    offsets = (np.arange(count) + 0.5) / count * width
    nodes = edges[:-1, np.newaxis] + offsets[np.newaxis, :]
    return nodes, width / count


def build_projectors(histogram: QuadratureHistogram,
                     cfg: MleConfig) -> Projectors:
    """Precompute the projectors of every nonempty bin."""
    nodes, weight = _subnodes(histogram.x_edges, cfg.subnodes)
    phase_share = histogram.counts.sum(axis=1) / histogram.total
    rows: List[np.ndarray] = []
    owner: List[np.ndarray] = []
    frequencies: List[float] = []
    weights: List[float] = []
    for i, theta in enumerate(histogram.phases):
        occupied = np.nonzero(histogram.counts[i])[0]
        if len(occupied) == 0:
            continue
        amplitudes = quadrature_amplitudes(
            theta, nodes[occupied].ravel(), cfg.dim) * math.sqrt(weight)
        start = len(frequencies)
        rows.append(amplitudes.conj())
        owner.append(start + np.repeat(np.arange(len(occupied)),
                                       cfg.subnodes))
        frequencies.extend(histogram.counts[i, occupied] / histogram.total)
        weights.extend([phase_share[i]] * len(occupied))
    return Projectors(np.concatenate(rows), np.concatenate(owner),
                      np.asarray(frequencies), np.asarray(weights))


def _log_likelihood(projectors: Projectors,
                    probabilities: np.ndarray) -> float:
    if np.any(probabilities <= 0):
        LOGGER.warning('%d observed bins have zero probability',
                       int(np.sum(probabilities <= 0)))
        return -math.inf
    return float(np.sum(projectors.frequencies * np.log(probabilities)))


def log_likelihood(rho: DensityMatrix, record: QuadratureRecord,
                   cfg: MleConfig) -> float:
    """
    Return sum_j f_j ln p_j(rho) over the nonempty bins of record.

    -inf is returned (with a warning) when an observed bin has p_j = 0.
    """
    projectors = build_projectors(bin_record(record, cfg), cfg)
    return _log_likelihood(projectors,
                           projectors.probabilities(rho.elements))


class MleResult:
    """
    Outcome of a maximum-likelihood reconstruction.

    :param rho:
        The best iterate.
    :param converged:
        False when max_iters ran out or the step size underflowed.
    :param iterations:
        Iterations run, rejected steps included.
    :param trace:
        Log-likelihood after every accepted step, starting with the initial
        state.
    :param wall_ms:
        Wall time in milliseconds.
    """

    def __init__(self, rho: DensityMatrix, converged: bool, iterations: int,
                 trace: List[float], wall_ms: float) -> None:
        self.rho = rho
        self.converged = converged
        self.iterations = iterations
        self.trace = trace
        self.wall_ms = wall_ms

    @property
    def log_likelihood(self) -> float:
        """Final log-likelihood."""
        return self.trace[-1]

    def diagnostics(self) -> Dict[str, Any]:
        """Return the JSON-friendly diagnostics block."""
        return {
            'iterations': self.iterations,
            'converged': self.converged,
            'log_likelihood': self.log_likelihood,
            'loglik_trace': self.trace,
            'wall_ms': self.wall_ms,
        }


def _diluted_step(rho: np.ndarray, r_op: np.ndarray,
                  dilution: float) -> np.ndarray:
    step = np.eye(len(rho)) + dilution * (r_op - np.eye(len(rho)))
    out = step @ rho @ step.conj().T
    out = (out + out.conj().T) / 2
    return out / np.trace(out).real


def mle_from_histogram(histogram: QuadratureHistogram, cfg: MleConfig,
                       initial: Optional[DensityMatrix] = None) -> MleResult:
    """
    Run the diluted iteration on a histogram.

    The step size is halved (and the step rejected) whenever the
    log-likelihood would drop by more than DECREASE_SLACK, and restored
    after RESTORE_AFTER accepted steps in a row.
    """
    started = time.perf_counter()
    projectors = build_projectors(histogram, cfg)
    rho = (initial or maximally_mixed(cfg.dim)).elements.copy()
    if rho.shape[0] != cfg.dim:
        raise ContractViolation('initial state has dim {}, expected '
                                '{}'.format(rho.shape[0], cfg.dim))
    probabilities = projectors.probabilities(rho)
    trace = [_log_likelihood(projectors, probabilities)]
    dilution = cfg.dilution
    streak = still = 0
    converged = False
    iterations = 0
    while iterations < cfg.max_iters:
        iterations += 1
        r_op = projectors.r_operator(probabilities)
        candidate = _diluted_step(rho, r_op, dilution)
        candidate_p = projectors.probabilities(candidate)
        candidate_ll = _log_likelihood(projectors, candidate_p)
        if candidate_ll < trace[-1] - DECREASE_SLACK:
            dilution /= 2
            streak = 0
            LOGGER.debug('iteration %d: likelihood fell, dilution now %g',
                         iterations, dilution)
            if dilution < MIN_DILUTION:
                LOGGER.debug('dilution fell below %g; giving up',
                             MIN_DILUTION)
                break
            continue
        change = candidate_ll - trace[-1]
        rho, probabilities = candidate, candidate_p
        trace.append(candidate_ll)
        streak += 1
        if streak >= RESTORE_AFTER:
            dilution = cfg.dilution
        still = still + 1 if abs(change) < cfg.tolerance else 0
        if still >= cfg.patience:
            converged = True
            break
    wall_ms = (time.perf_counter() - started) * 1000
    if not converged:
        LOGGER.warning('MLE did not converge in %d iterations', iterations)
    LOGGER.debug('MLE ran %d iterations in %.1f ms, log-likelihood %.6g',
                 iterations, wall_ms, trace[-1])
    return MleResult(DensityMatrix.from_matrix(rho), converged, iterations,
                     trace, wall_ms)


def mle_reconstruct(record: QuadratureRecord, cfg: MleConfig,
                    initial: Optional[DensityMatrix] = None) -> MleResult:
    """Reconstruct a density matrix from a record."""
    if len(record) < cfg.dim ** 2:
        LOGGER.info('record of %d points is shorter than dim^2 = %d',
                    len(record), cfg.dim ** 2)
    return mle_from_histogram(bin_record(record, cfg), cfg, initial)


def exact_histogram(rho: DensityMatrix, cfg: MleConfig, x_range: float,
                    total: float = 1.0) -> QuadratureHistogram:
    """
    Return the histogram rho would produce in the limit of infinite data.

    Phases sit at the bin centres and every phase bin gets total /
    phase_bins counts, split by the bin-integrated probabilities.
    """
    edges = np.linspace(0, math.pi, cfg.phase_bins + 1)
    centres = (edges[1:] + edges[:-1]) / 2
    x_edges = np.linspace(-x_range, x_range, cfg.quadrature_bins + 1)
    nodes, weight = _subnodes(x_edges, cfg.subnodes)
    counts = np.empty((cfg.phase_bins, cfg.quadrature_bins))
    for i, theta in enumerate(centres):
        amplitudes = quadrature_amplitudes(theta, nodes.ravel(), cfg.dim)
        density = np.einsum('km,mn,kn->k', amplitudes, rho.elements,
                            amplitudes.conj()).real
        counts[i] = density.reshape(nodes.shape).sum(axis=1) * weight
    counts = np.clip(counts, 0, None) * total / cfg.phase_bins
    return QuadratureHistogram(centres, x_edges, counts)
