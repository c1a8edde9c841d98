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
"""Exceptions raised by sqztomo and the exit codes they map to."""
from enum import Enum
from typing import Optional


class ExitCode(Enum):
    """
    Process exit codes of the sqztomo command.

    These are a stable contract for scripts driving batch runs.
    """

    SUCCESS = 0
    USAGE = 2
    DATA = 3
    NUMERIC = 4


class SqztomoError(Exception):
    """Base class for every error sqztomo raises on purpose."""

    exit_code = ExitCode.DATA


class InvalidDimension(SqztomoError):
    """A Fock truncation that cannot hold the requested object."""

    exit_code = ExitCode.USAGE


class InvalidSetting(SqztomoError):
    """A configuration value of the wrong type or out of range."""

    exit_code = ExitCode.USAGE


class ContractViolation(SqztomoError):
    """An argument that breaks a documented precondition."""


class InsufficientData(SqztomoError):
    """Too little input to run the requested estimation."""


class MissingModel(SqztomoError):
    """A network model was required but none was configured or found."""


class NumericFailure(SqztomoError):
    """A computation overflowed or produced non-finite values."""

    exit_code = ExitCode.NUMERIC


class TruncationOverflow(NumericFailure):
    """A state leaks more probability past the truncation than allowed."""

    def __init__(self, dim: int, tail: float, tolerance: float) -> None:
        """
        Create a TruncationOverflow.

        :param dim:
            The Fock truncation that was requested.
        :param tail:
            The probability mass that fell outside of it.
        :param tolerance:
            The largest tail mass that would have been accepted.
        """
        super().__init__(
            'state leaks {:.3g} probability past dim={} '
            '(tolerance {:.3g})'.format(tail, dim, tolerance))
        self.dim = dim
        self.tail = tail
        self.tolerance = tolerance


class DegenerateFactor(NumericFailure):
    """A Cholesky factor with zero norm, which describes no state."""


class MalformedFile(SqztomoError):
    """A file that could not be parsed."""

    def __init__(self, path: str, message: str, line: Optional[int] = None,
                 offset: Optional[int] = None) -> None:
        """
        Create a MalformedFile error.

        :param path:
            The file being read.
        :param message:
            What was wrong with it.
        :param line:
            1-based line number for text formats.
        :param offset:
            Byte offset for binary formats.
        """
        location = ''
        if line is not None:
            location = ':{}'.format(line)
        elif offset is not None:
            location = '@{}'.format(offset)
        super().__init__('{}{}: {}'.format(path, location, message))
        self.path = path
        self.line = line
        self.offset = offset


class ChecksumMismatch(MalformedFile):
    """A binary payload whose checksum does not match its header."""


class VersionMismatch(MalformedFile):
    """A file written with a format version this release cannot read."""
