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
"""Density-matrix reconstruction methods, loaded as plugins."""
import logging
import os
import time
from typing import Any, Dict, Tuple  # noqa

from stevedore.extension import ExtensionManager

from sqztomo import io
from sqztomo.errors import MissingModel
from sqztomo.fock import DensityMatrix
from sqztomo.mle import mle_reconstruct, MleConfig
from sqztomo.models import ReconstructionContext, ReconstructionResult
from sqztomo.nn import NetworkModel, predict_density

LOGGER = logging.getLogger(__name__)

Reconstruction = Tuple[DensityMatrix, Dict[str, Any]]


class Reconstructor:
    """A super-class capturing the common reconstruction pattern."""

    default_config = {}  # type: Dict[str, Any]

    def __init__(self, ctx: ReconstructionContext) -> None:
        """
        Create an instance of a Reconstructor.

        :param ctx:
            A ReconstructionContext which the reconstructor should operate
            against.
        """
        self._ctx = ctx

    def actual_reconstruct(self) -> Reconstruction:
        """Perform the actual reconstruction."""
        raise NotImplementedError  # pragma: nocover

    def reconstruct(self) -> ReconstructionResult:
        """Time actual_reconstruct and wrap up its output."""
        started = time.perf_counter()
        rho, diagnostics = self.actual_reconstruct()
        wall_ms = (time.perf_counter() - started) * 1000
        LOGGER.debug('%s took %.1f ms', self.description, wall_ms)
        return ReconstructionResult(rho, wall_ms, diagnostics)

    @property
    def description(self) -> str:
        """Output-friendly description of this Reconstructor."""
        raise NotImplementedError  # pragma: nocover


class MaximumLikelihood(Reconstructor):
    """Reconstruct with the diluted iterative maximum-likelihood method."""

    description = 'iterative maximum likelihood'
    default_config = {
        'phase_bins': 20,
        'quadrature_bins': 100,
        'subnodes': 3,
        'max_iters': 2000,
        'dilution': 0.5,
        'tolerance': 1e-9,
        'patience': 3,
    }

    def mle_config(self) -> MleConfig:
        """Build the MleConfig from this reconstructor's section."""
        config = self._ctx.config
        return MleConfig(
            dim=self._ctx.run_ctx.dim,
            phase_bins=config.getint('phase_bins'),
            quadrature_bins=config.getint('quadrature_bins'),
            subnodes=config.getint('subnodes'),
            max_iters=config.getint('max_iters'),
            dilution=config.getfloat('dilution'),
            tolerance=config.getfloat('tolerance'),
            patience=config.getint('patience'),
        )

    def actual_reconstruct(self) -> Reconstruction:
        """Run the iteration on the context's record."""
        result = mle_reconstruct(self._ctx.record, self.mle_config())
        return result.rho, result.diagnostics()


_MODEL_CACHE = {}  # type: Dict[Tuple[str, float], NetworkModel]


def load_model(path: str) -> NetworkModel:
    """Read a model file, reusing it while the file is unchanged."""
    if not path:
        raise MissingModel(
            'no network model configured; pass --model or set model in '
            'the [sqztomo:nn] section')
    if not os.path.exists(path):
        raise MissingModel('network model {} does not exist'.format(path))
    key = (os.path.abspath(path), os.path.getmtime(path))
    if key not in _MODEL_CACHE:
        _MODEL_CACHE[key] = io.read_model(path)
    return _MODEL_CACHE[key]


class NeuralNetwork(Reconstructor):
    """Reconstruct with a trained convolutional network."""

    description = 'convolutional network'
    default_config = {
        'model': '',
    }

    def actual_reconstruct(self) -> Reconstruction:
        """Feed the context's record through the configured model."""
        model = load_model(self._ctx.config.get('model', ''))
        rho, wall_ms = predict_density(model, self._ctx.record)
        return rho, {'inference_ms': wall_ms, 'model_dim': model.dim,
                     'input_len': model.input_len}


extension_manager = ExtensionManager(namespace='sqztomo.reconstructors')
RECONSTRUCTORS = {ext.name: ext.plugin for ext in extension_manager}
