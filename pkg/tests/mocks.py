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
import itertools
from configparser import ConfigParser
from unittest import mock

import numpy as np

from sqztomo.config import _filter_config
from sqztomo.fock import SqueezeParams
from sqztomo.models import ReconstructionResult
from sqztomo.reconstructors import Reconstructor
from sqztomo.states import squeezed_vacuum, vacuum

NAMES = ('reconstructor-{}'.format(num) for num in itertools.count())


def create_reconstructor_mock(rho=None, wall_ms=1.0, diagnostics=None,
                              default_config=None, **kwargs):
    reconstructor_mock = mock.create_autospec(Reconstructor)
    reconstructor_mock.return_value.reconstruct.return_value = \
        ReconstructionResult(rho if rho is not None else vacuum(4), wall_ms,
                             diagnostics or {})
    reconstructor_mock.default_config = default_config or {}
    return reconstructor_mock, kwargs


def create_mock_for_class(cls, **kwargs):
    special_cases = {
        Reconstructor: create_reconstructor_mock,
    }
    if cls in special_cases:
        created_mock, kwargs = special_cases[cls](**kwargs)
    else:
        created_mock = mock.create_autospec(cls)
    for key, value in kwargs.items():
        setattr(created_mock, key, value)
    return created_mock


def get_config():
    return _filter_config(ConfigParser())


def mock_RECONSTRUCTORS(mocker, reconstructor_mocks, names=None):
    names = names or NAMES
    reconstructors = dict(zip(names, reconstructor_mocks))
    mocker.patch('sqztomo.RECONSTRUCTORS', reconstructors)
    mocker.patch('sqztomo.config.RECONSTRUCTORS', reconstructors)
    return reconstructors


def squeezed(level_db=3.0, phi=0.0, dim=12, tail_tolerance=1e-3):
    return squeezed_vacuum(SqueezeParams.from_db(level_db, phi), dim,
                           tail_tolerance)


def random_density(dim, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    matrix = a @ a.conj().T
    return matrix / np.trace(matrix).real
