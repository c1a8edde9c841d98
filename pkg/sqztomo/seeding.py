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
Seed splitting.

Every random draw in sqztomo comes from one user-supplied base seed.  The
scheme is versioned so that a manifest written today keeps reproducing its
outputs: a change to how streams are derived must bump SCHEME.
"""
import numpy as np

from sqztomo.errors import ContractViolation

SCHEME = 'sqztomo-seed-v1'

STREAMS = {
    'state': 1,
    'record': 2,
    'split': 3,
    'init': 4,
    'shuffle': 5,
    'noise': 6,
}


def seed_sequence(base_seed: int, stream: str,
                  index: int = 0) -> np.random.SeedSequence:
    """Return the SeedSequence for one (sample, purpose) pair."""
    if int(base_seed) < 0 or int(index) < 0:
        raise ContractViolation('seeds must be >= 0, got {} and index '
                                '{}'.format(base_seed, index))
    return np.random.SeedSequence([int(base_seed) + int(index),
                                   STREAMS[stream]])


def generator(base_seed: int, stream: str,
              index: int = 0) -> np.random.Generator:
    """Return a fresh numpy Generator for one (sample, purpose) pair."""
    return np.random.default_rng(seed_sequence(base_seed, stream, index))


def torch_seed(base_seed: int, stream: str, index: int = 0) -> int:
    """Return a 63-bit integer seed for torch.manual_seed."""
    state = seed_sequence(base_seed, stream, index).generate_state(
        1, dtype=np.uint64)
    return int(state[0] >> np.uint64(1))
