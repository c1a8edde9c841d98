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
"""Handle configuration for sqztomo."""
import os
from configparser import ConfigParser
from typing import Any, Dict, List, Mapping, Optional

from sqztomo.errors import ContractViolation, InvalidSetting
from sqztomo.models import RunContext
from sqztomo.reconstructors import RECONSTRUCTORS

THREADS_ENVIRONMENT = 'SQZTOMO_THREADS'

GLOBAL_CONFIG_DEFAULTS = {
    'dim': '35',
    'seed': '0',
    'threads': '',
    'out_dir': '.',
    'tail_tolerance': '1e-6',
    'phase_noise_mode': 'two-point',
    'channel_order': 'phase-noise-then-loss',
    'disable_reconstructors': '',
    'only_run': '',
}  # type: Dict[str, Any]

TRAINING_CONFIG_DEFAULTS = {
    'preset': 'desk',
    'input_mode': 'sequence',
    'epochs': '50',
    'batch': '32',
    'lr': '1e-3',
    'momentum': '0.9',
    'optimizer': 'sgd',
    'validation_fraction': '0.1',
}  # type: Dict[str, Any]


class GetListConfigParser(ConfigParser):
    """A ConfigParser subclass that implements a getlist method."""

    def getlist(self, section: str, option: str, **kwargs: Any) -> List[str]:
        """Parse an option, splitting it by commas and stripping whitespace."""
        def commas_to_list(value: str) -> List[str]:
            if not value:
                return []
            return [item.strip() for item in value.split(',')]

        return self._get_conv(section, option, commas_to_list, **kwargs)


def _get_default_reconstructor_configs() -> Dict[str, Dict[str, Any]]:
    return {'sqztomo:{}'.format(name): reconstructor.default_config
            for name, reconstructor in RECONSTRUCTORS.items()}


def _filter_config(config: ConfigParser) -> GetListConfigParser:
    """
    Return a ConfigParser with only the sqztomo sections of the one passed.

    This creates a new ConfigParser and removes sections from that, so the one
    passed in remains unmodified.
    """
    filtered_config = GetListConfigParser(allow_no_value=True)
    filtered_config.read_dict({'sqztomo': GLOBAL_CONFIG_DEFAULTS})
    filtered_config.read_dict({'sqztomo:training': TRAINING_CONFIG_DEFAULTS})
    filtered_config.read_dict(_get_default_reconstructor_configs())
    filtered_config.read_dict(config)
    for section in filtered_config.sections():
        if not section.startswith('sqztomo'):
            filtered_config.remove_section(section)
    return filtered_config


def enabled_reconstructors(config: GetListConfigParser) -> List[str]:
    """Names of the reconstructors a run should use, in sorted order."""
    disabled = config.getlist('sqztomo', 'disable_reconstructors')
    only_run = config.getlist('sqztomo', 'only_run')
    names = []
    for name in sorted(RECONSTRUCTORS):
        if name in disabled:
            continue
        if only_run and name not in only_run:
            continue
        names.append(name)
    return names


def resolve_threads(config: ConfigParser,
                    environ: Optional[Mapping[str, str]] = None) -> int:
    """
    Return the worker count for a run.

    The [sqztomo] threads option wins, then the SQZTOMO_THREADS
    environment variable, then 1.
    """
    environ = os.environ if environ is None else environ
    value = config.get('sqztomo', 'threads', fallback='') or \
        environ.get(THREADS_ENVIRONMENT, '') or '1'
    try:
        threads = int(value)
    except ValueError:
        raise ContractViolation(
            'thread count must be an integer, got {!r}'.format(value))
    if threads < 1:
        raise ContractViolation('thread count must be >= 1')
    return threads


def _seed(value: str) -> int:
    try:
        seed = int(value)
    except ValueError:
        raise InvalidSetting('seed must be an integer, got {!r}'.format(value))
    if seed < 0:
        raise InvalidSetting('seed must be >= 0, got {}'.format(seed))
    return seed


def run_context(config: ConfigParser,
                environ: Optional[Mapping[str, str]] = None) -> RunContext:
    """Build the RunContext described by a filtered config."""
    section = config['sqztomo']
    return RunContext(
        dim=section.getint('dim'),
        seed=_seed(section['seed']),
        threads=resolve_threads(config, environ),
        tail_tolerance=section.getfloat('tail_tolerance'),
        phase_noise_mode=section['phase_noise_mode'],
        channel_order=section['channel_order'],
        out_dir=section['out_dir'],
    )


def as_dict(config: ConfigParser) -> Dict[str, Dict[str, str]]:
    """Return every section of config as plain dicts."""
    return {name: dict(config[name]) for name in config.sections()}
