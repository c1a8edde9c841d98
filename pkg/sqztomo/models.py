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
"""Data classes used in sqztomo."""
import time
from configparser import SectionProxy
from typing import Any, Dict, Optional, Sequence

from pbr.version import VersionInfo

from sqztomo.fock import DensityMatrix
from sqztomo.homodyne import QuadratureRecord
from sqztomo.seeding import SCHEME


def tool_version() -> str:
    """Version string of the installed sqztomo distribution."""
    try:
        return str(VersionInfo('sqztomo').version_string())
    except Exception:  # pragma: nocover
        return 'unknown'


class RunContext:
    """Run-level data to be passed around and to reconstructors."""

    def __init__(self, dim: int, seed: int = 0, threads: int = 1,
                 tail_tolerance: float = 1e-6,
                 phase_noise_mode: str = 'two-point',
                 channel_order: str = 'phase-noise-then-loss',
                 out_dir: str = '.') -> None:
        """
        Create a RunContext.

        :param dim:
            Fock truncation every state of this run uses.
        :param seed:
            Base seed that every random stream of the run derives from.
        :param threads:
            Worker processes available for parallel work.
        :param tail_tolerance:
            Largest probability a state may lose to truncation.
        :param phase_noise_mode:
            ``two-point`` or ``gaussian``.
        :param channel_order:
            Order in which loss and phase noise are applied.
        :param out_dir:
            Directory that relative output paths are resolved against.
        """
        self.dim = dim
        self.seed = seed
        self.threads = threads
        self.tail_tolerance = tail_tolerance
        self.phase_noise_mode = phase_noise_mode
        self.channel_order = channel_order
        self.out_dir = out_dir


class ReconstructionContext:
    """
    The context in which a reconstructor should run.

    This contains the record to be reconstructed and the environment in
    which the reconstructor is running.
    """

    def __init__(self,
                 config: SectionProxy,
                 run_ctx: RunContext,
                 record: QuadratureRecord,
                 ) -> None:
        """
        Create a ReconstructionContext.

        :param config:
            The configparser.SectionProxy of the parsed configuration for this
            particular reconstructor.
        :param run_ctx:
            The RunContext of the current run.
        :param record:
            The quadrature record to reconstruct a state from.
        """
        self.config = config
        self.run_ctx = run_ctx
        self.record = record


class ReconstructionResult:
    """What a reconstructor hands back."""

    def __init__(self, rho: DensityMatrix, wall_ms: float,
                 diagnostics: Optional[Dict[str, Any]] = None) -> None:
        """
        Create a ReconstructionResult.

        :param rho:
            The reconstructed state.
        :param wall_ms:
            Wall time of the reconstruction in milliseconds.
        :param diagnostics:
            Method-specific, JSON-friendly details.
        """
        self.rho = rho
        self.wall_ms = wall_ms
        self.diagnostics = diagnostics or {}


class RunManifest:
    """
    Everything needed to re-run a command and check its outputs.

    Manifests are written next to the outputs of every command.
    """

    def __init__(self, command: str, config: Dict[str, Dict[str, str]],
                 seed: int, arguments: Dict[str, Any],
                 inputs: Sequence[str] = (),
                 outputs: Sequence[str] = ()) -> None:
        """
        Create a RunManifest and start its clock.

        :param command:
            Name of the CLI command.
        :param config:
            The fully resolved configuration, section by section.
        :param seed:
            Base seed of the run.
        :param arguments:
            Command-line arguments of the command itself.
        """
        self.command = command
        self.config = config
        self.seed = seed
        self.arguments = arguments
        self.inputs = list(inputs)
        self.outputs = list(outputs)
        self._started = time.perf_counter()
        self.wall_ms: Optional[float] = None

    def finish(self) -> None:
        """Stop the clock."""
        self.wall_ms = (time.perf_counter() - self._started) * 1000

    def as_dict(self) -> Dict[str, Any]:
        """Return the manifest as a JSON-friendly dict."""
        return {
            'command': self.command,
            'config': self.config,
            'seed': self.seed,
            'seed_scheme': SCHEME,
            'arguments': self.arguments,
            'inputs': self.inputs,
            'outputs': self.outputs,
            'version': tool_version(),
            'wall_ms': self.wall_ms,
        }
