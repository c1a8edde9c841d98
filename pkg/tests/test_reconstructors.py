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
import pytest

from sqztomo import io
from sqztomo.errors import MissingModel
from sqztomo.homodyne import PhaseSchedule, sample
from sqztomo.models import ReconstructionContext, RunContext
from sqztomo.nn import NetworkModel, PRESETS
from sqztomo.reconstructors import (
    load_model,
    MaximumLikelihood,
    NeuralNetwork,
    RECONSTRUCTORS,
)
from sqztomo.states import vacuum

from .mocks import get_config


def _context(name, dim=4, **options):
    config = get_config()
    section = config['sqztomo:{}'.format(name)]
    for key, value in options.items():
        section[key] = str(value)
    record = sample(vacuum(dim), PhaseSchedule(), 256, 0)
    return ReconstructionContext(section, RunContext(dim=dim), record)


class TestRegistry:

    def test_plugins_registered(self):
        assert RECONSTRUCTORS['mle'] is MaximumLikelihood
        assert RECONSTRUCTORS['nn'] is NeuralNetwork


class TestMaximumLikelihood:

    def test_config_read_from_section(self):
        reconstructor = MaximumLikelihood(
            _context('mle', phase_bins=7, max_iters=11))
        cfg = reconstructor.mle_config()
        assert (cfg.dim, cfg.phase_bins, cfg.max_iters) == (4, 7, 11)
        assert cfg.quadrature_bins == 100

    def test_reconstruct(self):
        result = MaximumLikelihood(_context('mle', max_iters=20)).reconstruct()
        assert result.rho.dim == 4
        assert result.wall_ms >= 0
        assert result.diagnostics['iterations'] <= 20


class TestNeuralNetwork:

    def test_missing_model_setting(self):
        with pytest.raises(MissingModel):
            NeuralNetwork(_context('nn')).reconstruct()

    def test_missing_model_file(self, tmpdir):
        with pytest.raises(MissingModel):
            load_model(str(tmpdir.join('absent.bin')))

    def test_reconstruct(self, tmpdir):
        path = str(tmpdir.join('model.bin'))
        io.write_model(NetworkModel.create(PRESETS['tiny']), path)
        result = NeuralNetwork(_context('nn', model=path)).reconstruct()
        assert result.rho.dim == 4
        assert result.diagnostics['model_dim'] == 4
        assert result.diagnostics['inference_ms'] >= 0

    def test_model_is_cached(self, tmpdir, mocker):
        path = str(tmpdir.join('model.bin'))
        io.write_model(NetworkModel.create(PRESETS['tiny']), path)
        read_model = mocker.spy(io, 'read_model')
        first = load_model(path)
        assert load_model(path) is first
        assert read_model.call_count == 1
