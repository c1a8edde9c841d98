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
Convolutional tomography network.

A record is encoded as three channels (quadrature, cos phase, sin phase)
and passed through residual 1-D convolution blocks.  Each block halves the
length with a stride-2 entry convolution; its shortcut average-pools the
input instead.  A long skip connects the input to the globally pooled
features, five shortcuts in the default four-block layout.  Two dense
layers then emit a lower-triangular complex factor T, and
rho = T T^dagger / tr(T T^dagger) is physical by construction.
"""
import copy
import logging
import math
import time
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch
from torch import nn
from torch.nn.utils import parameters_to_vector, vector_to_parameters

from sqztomo import seeding
from sqztomo.errors import (
    ContractViolation,
    DegenerateFactor,
    InsufficientData,
)
from sqztomo.fock import _check_dim, DensityMatrix
from sqztomo.homodyne import DEFAULT_RECORD_LENGTH, QuadratureRecord

LOGGER = logging.getLogger(__name__)

INPUT_MODES = ('sequence', 'binned')
OPTIMIZERS = ('sgd', 'adam')
INPUT_CHANNELS = 3
# softplus(log(e - 1)) == 1, so a zero-weight head emits T proportional to I.
UNIT_DIAGONAL_BIAS = math.log(math.e - 1)
# Keeps the diagonal of T positive when softplus underflows.
DIAGONAL_FLOOR = 1e-8
# Raw head outputs are clamped to this magnitude before T is built.
OUTPUT_LIMIT = 1e150


class CholeskyFactor:
    """A lower-triangular complex matrix with a real diagonal."""

    def __init__(self, entries: np.ndarray) -> None:
        """
        Create a CholeskyFactor.

        :param entries:
            A square array; entries above the diagonal must be zero and the
            diagonal real.
        """
        entries = np.array(entries, dtype=np.complex128)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ContractViolation('Cholesky factor must be square')
        if np.any(np.triu(entries, k=1) != 0):
            raise ContractViolation('Cholesky factor is not lower-triangular')
        if np.any(np.diagonal(entries).imag != 0):
            raise ContractViolation('Cholesky factor diagonal is not real')
        entries.setflags(write=False)
        self.entries = entries

    @property
    def dim(self) -> int:
        """Size of the truncated Fock basis."""
        return int(self.entries.shape[0])


def density_from_cholesky(factor: CholeskyFactor) -> DensityMatrix:
    """
    Return T T^dagger / tr(T T^dagger).

    :raises DegenerateFactor:
        if T is all zeros.
    """
    t = factor.entries
    peak = float(np.max(np.abs(t)))
    if not peak > 0:
        raise DegenerateFactor('Cholesky factor has zero norm')
    t = t / peak
    norm = float(np.sum(np.abs(t) ** 2))
    return DensityMatrix.from_matrix(t @ t.conj().T / norm)


def loss_frobenius(pred: DensityMatrix, target: DensityMatrix) -> float:
    """Return the squared Frobenius distance ||pred - target||_F^2."""
    if pred.dim != target.dim:
        raise ContractViolation('states have dims {} and {}'.format(
            pred.dim, target.dim))
    return float(np.sum(np.abs(pred.elements - target.elements) ** 2))


class ArchitectureSpec:
    """
    Everything needed to rebuild a TomographyNet.

    :param dim:
        Fock truncation of the output.
    :param input_len:
        Points per encoded record; must be divisible by 2^len(channels).
    :param channels:
        Output channels of each residual block.
    :param kernels:
        Kernel sizes of the convolutions inside a block.
    :param hidden:
        Width of the first dense layer.
    :param input_mode:
        ``sequence`` or ``binned``.
    :param phase_bins:
        Phase bins of the binned input mode.
    :param shortcuts:
        Whether the residual and long-skip connections are present.
    """

    def __init__(self, dim: int = 12,
                 input_len: int = DEFAULT_RECORD_LENGTH,
                 channels: Sequence[int] = (16, 32, 64, 64),
                 kernels: Sequence[int] = (7, 3, 3), hidden: int = 256,
                 input_mode: str = 'sequence', phase_bins: int = 64,
                 shortcuts: bool = True) -> None:
        _check_dim(dim)
        if input_mode not in INPUT_MODES:
            raise ContractViolation(
                'unknown input mode {!r}'.format(input_mode))
        if not channels or input_len % 2 ** len(channels):
            raise ContractViolation(
                'input_len {} is not divisible by 2^{}'.format(
                    input_len, len(channels)))
        if any(k % 2 == 0 for k in kernels):
            raise ContractViolation('kernel sizes must be odd')
        self.dim = int(dim)
        self.input_len = int(input_len)
        self.channels = tuple(int(c) for c in channels)
        self.kernels = tuple(int(k) for k in kernels)
        self.hidden = int(hidden)
        self.input_mode = input_mode
        self.phase_bins = int(phase_bins)
        self.shortcuts = bool(shortcuts)

    def as_dict(self) -> Dict[str, Any]:
        """Return the JSON architecture descriptor."""
        return {
            'dim': self.dim,
            'input_len': self.input_len,
            'channels': list(self.channels),
            'kernels': list(self.kernels),
            'hidden': self.hidden,
            'input_mode': self.input_mode,
            'phase_bins': self.phase_bins,
            'shortcuts': self.shortcuts,
            'layers': self.layers(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ArchitectureSpec':
        """Rebuild from as_dict output; the derived layer list is ignored."""
        fields = {key: value for key, value in data.items()
                  if key != 'layers'}
        return cls(**fields)

    def layers(self) -> List[Dict[str, Any]]:
        """Describe the network layer by layer."""
        described: List[Dict[str, Any]] = []
        width = INPUT_CHANNELS
        for index, out in enumerate(self.channels):
            for position, kernel in enumerate(self.kernels):
                described.append({'type': 'conv1d', 'block': index,
                                  'channels': out, 'kernel': kernel,
                                  'stride': 1 if position else 2})
            if self.shortcuts:
                described.append({'type': 'avg_pool', 'block': index,
                                  'size': 2})
                described.append({'type': 'shortcut', 'block': index,
                                  'from': width, 'to': out,
                                  'projected': width != out})
            width = out
        if self.shortcuts:
            described.append({'type': 'shortcut', 'block': 'input',
                              'from': INPUT_CHANNELS, 'to': width,
                              'projected': True})
        described.append({'type': 'global_avg_pool'})
        described.append({'type': 'dense', 'size': self.hidden})
        described.append({'type': 'dense', 'size': self.dim ** 2})
        return described

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ArchitectureSpec):
            return NotImplemented
        return self.as_dict() == other.as_dict()


PRESETS = {
    'tiny': ArchitectureSpec(dim=4, input_len=64, channels=(4, 8, 8, 8),
                             hidden=32),
    'desk': ArchitectureSpec(dim=12),
    'full': ArchitectureSpec(dim=35),
}


class ResidualBlock(nn.Module):
    """y = relu(convs(x) + project(pool(x))); the first conv has stride 2."""

    def __init__(self, in_channels: int, out_channels: int,
                 kernels: Sequence[int], shortcut: bool = True) -> None:
        super().__init__()
        layers: List[nn.Module] = []
        width = in_channels
        for position, kernel in enumerate(kernels):
            if position:
                layers.append(nn.ReLU())
            layers.append(nn.Conv1d(width, out_channels, kernel,
                                    stride=1 if position else 2,
                                    padding=kernel // 2))
            width = out_channels
        self.convs = nn.Sequential(*layers)
        self.pool = nn.AvgPool1d(2)
        self.shortcut = shortcut
        self.project: nn.Module = nn.Identity()
        if shortcut and in_channels != out_channels:
            self.project = nn.Conv1d(in_channels, out_channels, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """Apply the block to a (batch, channels, length) tensor."""
        y = self.convs(x)
        if self.shortcut:
            y = y + self.project(self.pool(x))
        return torch.relu(y)


class TomographyNet(nn.Module):
    """The torch module behind a NetworkModel."""

    def __init__(self, spec: ArchitectureSpec) -> None:
        super().__init__()
        self.spec = spec
        blocks = []
        width = INPUT_CHANNELS
        for out in spec.channels:
            blocks.append(ResidualBlock(width, out, spec.kernels,
                                        spec.shortcuts))
            width = out
        self.blocks = nn.ModuleList(blocks)
        self.skip = nn.Conv1d(INPUT_CHANNELS, width, 1) \
            if spec.shortcuts else None
        self.hidden = nn.Linear(width, spec.hidden)
        self.output = nn.Linear(spec.hidden, spec.dim ** 2)
        rows, cols = torch.tril_indices(spec.dim, spec.dim, offset=-1)
        self.register_buffer('rows', rows, persistent=False)
        self.register_buffer('cols', cols, persistent=False)

    def reset_head(self, scale: float = 0.1) -> None:
        """Shrink the output layer and bias it towards T = I."""
        with torch.no_grad():
            self.output.weight.mul_(scale)
            self.output.bias.zero_()
            self.output.bias[:self.spec.dim] = UNIT_DIAGONAL_BIAS

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """Map encoded records (batch, 3, input_len) to raw head outputs."""
        features = x
        for block in self.blocks:
            features = block(features)
        pooled = features.mean(dim=2)
        if self.skip is not None:
            pooled = pooled + self.skip(x).mean(dim=2)
        return self.output(torch.relu(self.hidden(pooled)))

    def factors(self, x: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        """Return the real and imaginary parts of T for a batch."""
        out = torch.nan_to_num(self.forward(x), nan=0.0,
                               posinf=OUTPUT_LIMIT, neginf=-OUTPUT_LIMIT)
        out = out.clamp(-OUTPUT_LIMIT, OUTPUT_LIMIT)
        dim = self.spec.dim
        strict = len(self.rows)
        diagonal = nn.functional.softplus(out[:, :dim]) + DIAGONAL_FLOOR
        batch = out.shape[0]
        real = out.new_zeros((batch, dim, dim))
        imag = out.new_zeros((batch, dim, dim))
        index = torch.arange(dim)
        real[:, index, index] = diagonal
        real[:, self.rows, self.cols] = out[:, dim:dim + strict]
        imag[:, self.rows, self.cols] = out[:, dim + strict:]
        return real, imag

    def densities(self, x: torch.Tensor) -> Tuple[torch.Tensor,
                                                  torch.Tensor]:
        """
        Return real and imaginary parts of T T^dagger / tr(T T^dagger).

        T is divided by its largest entry first; the ratio does not change
        and neither the products nor the trace can overflow or vanish.
        """
        a, b = self.factors(x)
        peak = torch.maximum(a.abs().amax(dim=(1, 2)),
                             b.abs().amax(dim=(1, 2))).detach()
        a = a / peak[:, None, None]
        b = b / peak[:, None, None]
        at, bt = a.transpose(1, 2), b.transpose(1, 2)
        rho_re = a @ at + b @ bt
        rho_im = b @ at - a @ bt
        trace = (a ** 2).sum(dim=(1, 2)) + (b ** 2).sum(dim=(1, 2))
        return rho_re / trace[:, None, None], rho_im / trace[:, None, None]


class NetworkModel:
    """
    Architecture plus float64 weights of a tomography network.

    :param spec:
        The ArchitectureSpec the weights belong to.
    :param net:
        The torch module; built fresh from spec when omitted.
    """

    def __init__(self, spec: ArchitectureSpec,
                 net: Optional[TomographyNet] = None) -> None:
        self.spec = spec
        self.net = (net or TomographyNet(spec)).double()

    @classmethod
    def create(cls, spec: ArchitectureSpec, seed: int = 0) -> 'NetworkModel':
        """Build a freshly initialised model, deterministic in seed."""
        torch.manual_seed(seeding.torch_seed(seed, 'init'))
        model = cls(spec)
        model.net.reset_head()
        return model

    @property
    def dim(self) -> int:
        """Fock truncation of the output."""
        return self.spec.dim

    @property
    def input_len(self) -> int:
        """Points per encoded record."""
        return self.spec.input_len

    @property
    def parameter_count(self) -> int:
        """Number of scalar weights."""
        return sum(p.numel() for p in self.net.parameters())

    @property
    def weights(self) -> np.ndarray:
        """All weights as one flat float64 vector."""
        return parameters_to_vector(
            self.net.parameters()).detach().numpy().copy()

    def set_weights(self, weights: np.ndarray) -> None:
        """Overwrite every weight from a flat vector."""
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (self.parameter_count,):
            raise ContractViolation(
                'architecture needs {} weights, got {}'.format(
                    self.parameter_count, weights.size))
        if not np.all(np.isfinite(weights)):
            raise ContractViolation('weights must be finite')
        vector_to_parameters(torch.from_numpy(weights.copy()),
                             self.net.parameters())

    def copy(self) -> 'NetworkModel':
        """Return an independent copy."""
        return NetworkModel(self.spec, copy.deepcopy(self.net))


def fit_record_length(record: QuadratureRecord,
                      length: int) -> QuadratureRecord:
    """
    Resize a record to length points.

    Short records are repeated cyclically and long ones subsampled at
    evenly spaced indices.
    """
    n = len(record)
    if n == length:
        return record
    if n < length:
        index = np.arange(length) % n
    else:
        index = np.arange(length) * n // length
    return QuadratureRecord(record.phases[index], record.values[index])


def encode_record(record: QuadratureRecord,
                  spec: ArchitectureSpec) -> np.ndarray:
    """
    Return the (3, input_len) network input of a record.

    In binned mode phases snap to the centre of their bin and the points of
    each bin are sorted by value, so the encoding only depends on the
    multiset of values per bin.
    """
    record = fit_record_length(record, spec.input_len)
    phases, values = record.phases, record.values
    if spec.input_mode == 'binned':
        width = 2 * math.pi / spec.phase_bins
        bins = np.minimum((phases // width).astype(int), spec.phase_bins - 1)
        order = np.lexsort((values, bins))
        phases = (bins[order] + 0.5) * width
        values = values[order]
    return np.stack([values, np.cos(phases), np.sin(phases)])


def _as_batch(encoded: np.ndarray, spec: ArchitectureSpec) -> torch.Tensor:
    encoded = np.asarray(encoded, dtype=np.float64)
    if encoded.ndim == 2:
        encoded = encoded[np.newaxis]
    if encoded.shape[1:] != (INPUT_CHANNELS, spec.input_len):
        raise ContractViolation(
            'network expects input of shape ({}, {}), got {}'.format(
                INPUT_CHANNELS, spec.input_len, encoded.shape[1:]))
    return torch.from_numpy(encoded)


def forward(model: NetworkModel, encoded: np.ndarray) -> CholeskyFactor:
    """Run one encoded record through the network."""
    with torch.no_grad():
        real, imag = model.net.factors(_as_batch(encoded, model.spec))
    return CholeskyFactor(real[0].numpy() + 1j * imag[0].numpy())


def _targets(targets: Sequence[DensityMatrix]) -> Tuple[torch.Tensor,
                                                         torch.Tensor]:
    stacked = np.stack([t.elements for t in targets])
    return (torch.from_numpy(stacked.real.copy()),
            torch.from_numpy(stacked.imag.copy()))


def _batch_loss(net: TomographyNet, inputs: torch.Tensor,
                target_re: torch.Tensor,
                target_im: torch.Tensor) -> torch.Tensor:
    """Mean squared Frobenius distance over a batch."""
    rho_re, rho_im = net.densities(inputs)
    per_sample = (((rho_re - target_re) ** 2).sum(dim=(1, 2))
                  + ((rho_im - target_im) ** 2).sum(dim=(1, 2)))
    return per_sample.mean()


def backward(model: NetworkModel, encoded: np.ndarray,
             target: DensityMatrix, scale: float = 1.0) -> np.ndarray:
    """
    Return the gradient of scale * loss_frobenius w.r.t. every weight.

    The gradient is flattened in the order of NetworkModel.weights.
    """
    if target.dim != model.dim:
        raise ContractViolation('target has dim {}, model {}'.format(
            target.dim, model.dim))
    model.net.zero_grad()
    target_re, target_im = _targets([target])
    loss = scale * _batch_loss(model.net, _as_batch(encoded, model.spec),
                               target_re, target_im)
    loss.backward()
    return parameters_to_vector(
        [p.grad for p in model.net.parameters()]).detach().numpy().copy()


class TrainingSet:
    """
    Encoded records paired with their true states.

    :param inputs:
        Array of shape (samples, 3, input_len).
    :param targets:
        One DensityMatrix per sample.
    :param metadata:
        One parameter dict per sample.
    """

    def __init__(self, inputs: np.ndarray, targets: Sequence[DensityMatrix],
                 metadata: Optional[Sequence[Dict[str, Any]]] = None) -> None:
        inputs = np.asarray(inputs, dtype=np.float64)
        metadata = list(metadata) if metadata is not None else \
            [{} for _ in targets]
        if not len(inputs) == len(targets) == len(metadata):
            raise ContractViolation(
                'training set has {} inputs, {} targets and {} metadata '
                'entries'.format(len(inputs), len(targets), len(metadata)))
        if len({t.dim for t in targets}) > 1:
            raise ContractViolation('training targets differ in dim')
        self.inputs = inputs
        self.targets = list(targets)
        self.metadata = metadata

    def __len__(self) -> int:
        return len(self.targets)

    @classmethod
    def from_records(cls, records: Sequence[QuadratureRecord],
                     targets: Sequence[DensityMatrix],
                     spec: ArchitectureSpec,
                     metadata: Optional[Sequence[Dict[str, Any]]] = None,
                     ) -> 'TrainingSet':
        """Encode records for spec and pair them with targets."""
        inputs = np.stack([encode_record(r, spec) for r in records]) \
            if records else np.empty((0, INPUT_CHANNELS, spec.input_len))
        return cls(inputs, targets, metadata)

    def subset(self, index: Sequence[int]) -> 'TrainingSet':
        """Return the samples at index."""
        return TrainingSet(self.inputs[list(index)],
                           [self.targets[i] for i in index],
                           [self.metadata[i] for i in index])

    def split(self, fraction: float,
              seed: int = 0) -> Tuple['TrainingSet', 'TrainingSet']:
        """Shuffle deterministically and split off a validation share."""
        order = seeding.generator(seed, 'split').permutation(len(self))
        held_out = int(round(fraction * len(self)))
        return (self.subset(order[held_out:].tolist()),
                self.subset(order[:held_out].tolist()))


class TrainingOptions:
    """Hyper-parameters of train."""

    def __init__(self, epochs: int = 50, batch: int = 32, lr: float = 1e-3,
                 momentum: float = 0.9, optimizer: str = 'sgd',
                 seed: int = 0, cosine: bool = True) -> None:
        if optimizer not in OPTIMIZERS:
            raise ContractViolation(
                'unknown optimizer {!r}'.format(optimizer))
        if epochs < 0 or batch < 1 or not lr > 0:
            raise ContractViolation('need epochs >= 0, batch >= 1, lr > 0')
        self.epochs = int(epochs)
        self.batch = int(batch)
        self.lr = float(lr)
        self.momentum = float(momentum)
        self.optimizer = optimizer
        self.seed = int(seed)
        self.cosine = cosine

    def as_dict(self) -> Dict[str, Any]:
        """Return the options as a JSON-friendly dict."""
        return dict(vars(self))


class TrainingHistory:
    """Per-epoch record of a training run."""

    def __init__(self) -> None:
        self.epochs: List[Dict[str, float]] = []
        self.diverged = False

    @property
    def losses(self) -> List[float]:
        """Mean training loss of every completed epoch."""
        return [epoch['loss'] for epoch in self.epochs]

    def as_dict(self) -> Dict[str, Any]:
        """Return the history as a JSON-friendly dict."""
        return {'epochs': self.epochs, 'diverged': self.diverged}


def _optimizer(net: nn.Module,
               options: TrainingOptions) -> torch.optim.Optimizer:
    if options.optimizer == 'adam':
        return torch.optim.Adam(net.parameters(), lr=options.lr)
    return torch.optim.SGD(net.parameters(), lr=options.lr,
                           momentum=options.momentum)


def _mean_loss(net: TomographyNet, data: TrainingSet) -> float:
    target_re, target_im = _targets(data.targets)
    with torch.no_grad():
        return float(_batch_loss(net, torch.from_numpy(data.inputs),
                                 target_re, target_im))


def train(model: NetworkModel, data: TrainingSet, options: TrainingOptions,
          validation: Optional[TrainingSet] = None,
          ) -> Tuple[NetworkModel, TrainingHistory]:
    """
    Train a copy of model on data.

    Batches are drawn from a per-epoch shuffle derived from options.seed.
    A non-finite loss rolls the weights back to the end of the previous
    epoch and stops training with history.diverged set.

    :returns:
        The trained copy and its history; model itself is left unchanged.
    """
    if len(data) == 0:
        raise InsufficientData('cannot train on an empty training set')
    if data.targets[0].dim != model.dim:
        raise ContractViolation('targets have dim {}, model {}'.format(
            data.targets[0].dim, model.dim))
    trained = model.copy()
    history = TrainingHistory()
    if options.epochs == 0:
        return trained, history
    torch.manual_seed(seeding.torch_seed(options.seed, 'shuffle'))
    net = trained.net
    optimizer = _optimizer(net, options)
    scheduler = torch.optim.lr_scheduler.CosineAnnealingLR(
        optimizer, T_max=options.epochs) if options.cosine else None
    inputs = torch.from_numpy(data.inputs)
    target_re, target_im = _targets(data.targets)
    for epoch in range(options.epochs):
        checkpoint = copy.deepcopy(net.state_dict())
        order = seeding.generator(options.seed, 'shuffle', epoch).permutation(
            len(data))
        total = 0.0
        finite = True
        for start in range(0, len(data), options.batch):
            index = torch.from_numpy(order[start:start + options.batch])
            optimizer.zero_grad()
            loss = _batch_loss(net, inputs[index], target_re[index],
                               target_im[index])
            if not torch.isfinite(loss):
                finite = False
                break
            loss.backward()
            optimizer.step()
            total += float(loss) * len(index)
        if not finite or not torch.all(torch.isfinite(
                parameters_to_vector(net.parameters()))):
            net.load_state_dict(checkpoint)
            history.diverged = True
            LOGGER.warning('training diverged in epoch %d; rolled back to '
                           'the previous epoch', epoch)
            break
        entry = {'epoch': epoch, 'loss': total / len(data),
                 'lr': optimizer.param_groups[0]['lr']}
        if validation is not None and len(validation):
            entry['validation_loss'] = _mean_loss(net, validation)
        history.epochs.append(entry)
        LOGGER.info('epoch %d: loss %.6g', epoch, entry['loss'])
        if scheduler is not None:
            scheduler.step()
    return trained, history


def predict_density(model: NetworkModel,
                    record: QuadratureRecord) -> Tuple[DensityMatrix, float]:
    """
    Reconstruct the state behind a record.

    :returns:
        The density matrix and the wall time in milliseconds, encoding
        included.
    """
    started = time.perf_counter()
    encoded = encode_record(record, model.spec)
    with torch.no_grad():
        rho_re, rho_im = model.net.densities(_as_batch(encoded, model.spec))
    rho = DensityMatrix.from_matrix(rho_re[0].numpy()
                                    + 1j * rho_im[0].numpy())
    wall_ms = (time.perf_counter() - started) * 1000
    LOGGER.debug('network prediction took %.2f ms', wall_ms)
    return rho, wall_ms
