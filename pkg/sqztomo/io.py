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
Readers and writers for every file sqztomo produces or consumes.

Binary files share one 24-byte little-endian header::

    magic      4s   format magic
    version    H    FORMAT_VERSION
    kind       H    payload kind
    meta       I    kind-specific size (dim, length or JSON size)
    length     Q    payload size in bytes
    crc32      I    zlib.crc32 of the payload

The byte-level layout of each kind is documented in docs/source/formats.rst.
"""
import csv
import json
import logging
import os
import struct
import tempfile
import zlib
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from sqztomo.errors import (
    ChecksumMismatch,
    ContractViolation,
    MalformedFile,
    NumericFailure,
    SqztomoError,
    VersionMismatch,
)
from sqztomo.fock import DensityMatrix
from sqztomo.homodyne import QuadratureRecord

LOGGER = logging.getLogger(__name__)

FORMAT_VERSION = 1
HEADER = struct.Struct('<4sHHIQI')

RECORD_MAGIC = b'SQRC'
DENSITY_MAGIC = b'SQDM'
MODEL_MAGIC = b'SQNN'

KIND_RECORD = 1
KIND_DENSITY = 2
KIND_MODEL = 3

RECORD_HEADER = ['phase_rad', 'quadrature']
POINTS_HEADER = ['sq_db', 'as_db']
POINTS_OPTIONAL = ['label', 'pump_mw']
SIDECAR_SUFFIX = '.json'
CORPUS_INDEX = 'index.json'
CORPUS_SCHEMA = 'sqztomo-corpus-v1'


class FileHeader:
    """The common header of binary files."""

    def __init__(self, magic: bytes, kind: int, meta: int, length: int,
                 crc32: int, version: int = FORMAT_VERSION) -> None:
        """
        Create a FileHeader.

        :param magic:
            Four magic bytes naming the format.
        :param kind:
            Payload kind, one of the KIND_* constants.
        :param meta:
            Kind-specific size: dim, record length or JSON size.
        :param length:
            Payload size in bytes.
        :param crc32:
            zlib.crc32 of the payload.
        :param version:
            Format version the file was written with.
        """
        self.magic = magic
        self.kind = kind
        self.meta = meta
        self.length = length
        self.crc32 = crc32
        self.version = version

    @classmethod
    def for_payload(cls, magic: bytes, kind: int, meta: int,
                    payload: bytes) -> 'FileHeader':
        """Build the header that describes payload."""
        return cls(magic, kind, meta, len(payload), zlib.crc32(payload))

    def pack(self) -> bytes:
        """Serialise the header."""
        return HEADER.pack(self.magic, self.version, self.kind, self.meta,
                           self.length, self.crc32)

    @classmethod
    def unpack(cls, path: str, data: bytes) -> 'FileHeader':
        """Parse the header at the start of data."""
        if len(data) < HEADER.size:
            raise MalformedFile(path, 'file is shorter than its header',
                                offset=len(data))
        magic, version, kind, meta, length, crc = HEADER.unpack_from(data)
        return cls(magic, kind, meta, length, crc, version)


def _write_bytes(path: str, data: bytes) -> None:
    """Write data to path atomically."""
    directory = os.path.dirname(os.path.abspath(path))
    handle, temporary = tempfile.mkstemp(dir=directory, prefix='.sqztomo-')
    try:
        with os.fdopen(handle, 'wb') as stream:
            stream.write(data)
        os.replace(temporary, path)
    except BaseException:
        if os.path.exists(temporary):
            os.unlink(temporary)
        raise


def _read_bytes(path: str) -> bytes:
    try:
        with open(path, 'rb') as stream:
            return stream.read()
    except OSError as exc:
        raise MalformedFile(path, 'cannot read: {}'.format(exc.strerror))


def write_binary(path: str, magic: bytes, kind: int, meta: int,
                 payload: bytes) -> None:
    """Write a header followed by payload."""
    header = FileHeader.for_payload(magic, kind, meta, payload)
    _write_bytes(path, header.pack() + payload)


def read_binary(path: str, magic: bytes,
                kind: int) -> Tuple[FileHeader, bytes]:
    """
    Read and verify a binary file.

    :raises MalformedFile:
        on a short file, wrong magic or kind, or a payload length mismatch.
    :raises VersionMismatch:
        on any version other than FORMAT_VERSION.
    :raises ChecksumMismatch:
        when the payload does not match the header checksum.
    """
    data = _read_bytes(path)
    header = FileHeader.unpack(path, data)
    if header.magic != magic:
        raise MalformedFile(path, 'bad magic {!r}, expected {!r}'.format(
            header.magic, magic), offset=0)
    if header.version != FORMAT_VERSION:
        raise VersionMismatch(
            path, 'format version {} is not supported (expected {})'.format(
                header.version, FORMAT_VERSION), offset=4)
    if header.kind != kind:
        raise MalformedFile(path, 'payload kind {}, expected {}'.format(
            header.kind, kind), offset=6)
    payload = data[HEADER.size:]
    if len(payload) != header.length:
        raise MalformedFile(
            path, 'payload is {} bytes, header says {}'.format(
                len(payload), header.length),
            offset=HEADER.size + min(len(payload), header.length))
    if zlib.crc32(payload) != header.crc32:
        raise ChecksumMismatch(path, 'payload checksum mismatch',
                               offset=HEADER.size)
    return header, payload


def _floats(path: str, payload: bytes, offset: int = 0) -> np.ndarray:
    body = payload[offset:]
    if len(body) % 8:
        raise MalformedFile(path, 'payload is not a whole number of '
                            'float64 values', offset=HEADER.size + offset)
    return np.frombuffer(body, dtype='<f8').astype(np.float64)


def write_density(rho: DensityMatrix, path: str,
                  metadata: Optional[Dict[str, Any]] = None) -> None:
    """Write rho as a binary .dm file plus a JSON sidecar."""
    interleaved = np.empty((rho.dim, rho.dim, 2), dtype='<f8')
    interleaved[..., 0] = rho.elements.real
    interleaved[..., 1] = rho.elements.imag
    write_binary(path, DENSITY_MAGIC, KIND_DENSITY, rho.dim,
                 interleaved.tobytes())
    sidecar = {
        'format': 'sqztomo-density',
        'version': FORMAT_VERSION,
        'dim': rho.dim,
        'layout': 'row-major, interleaved (re, im), float64 little-endian',
        'metadata': metadata or {},
    }
    write_json(path + SIDECAR_SUFFIX, sidecar)


def read_density(path: str) -> DensityMatrix:
    """Read a .dm file, checking its sidecar when present."""
    header, payload = read_binary(path, DENSITY_MAGIC, KIND_DENSITY)
    dim = header.meta
    values = _floats(path, payload)
    if dim < 2 or len(values) != 2 * dim * dim:
        raise MalformedFile(path, 'payload does not hold a {0}x{0} '
                            'matrix'.format(dim), offset=8)
    sidecar_path = path + SIDECAR_SUFFIX
    if os.path.exists(sidecar_path):
        sidecar = read_json(sidecar_path)
        if sidecar.get('dim') != dim:
            raise MalformedFile(sidecar_path, 'sidecar dim {!r} does not '
                                'match {}'.format(sidecar.get('dim'), dim))
    pairs = values.reshape(dim, dim, 2)
    try:
        return DensityMatrix(pairs[..., 0] + 1j * pairs[..., 1])
    except (ContractViolation, NumericFailure) as exc:
        raise MalformedFile(path, 'not a density matrix: {}'.format(exc),
                            offset=HEADER.size)


def write_record(record: QuadratureRecord, path: str,
                 binary: bool = False) -> None:
    """Write a record as CSV, or in the binary record format."""
    if binary:
        pairs = np.stack([record.phases, record.values], axis=1)
        write_binary(path, RECORD_MAGIC, KIND_RECORD, len(record),
                     pairs.astype('<f8').tobytes())
        return
    write_csv(path, RECORD_HEADER,
              [(repr(phase), repr(value)) for phase, value in record])


def _read_binary_record(path: str) -> QuadratureRecord:
    header, payload = read_binary(path, RECORD_MAGIC, KIND_RECORD)
    values = _floats(path, payload)
    if header.meta < 1 or len(values) != 2 * header.meta:
        raise MalformedFile(path, 'header length {} does not match '
                            'payload'.format(header.meta), offset=8)
    pairs = values.reshape(-1, 2)
    try:
        return QuadratureRecord(pairs[:, 0], pairs[:, 1])
    except ContractViolation as exc:
        raise MalformedFile(path, str(exc), offset=HEADER.size)


def _csv_rows(path: str) -> Iterable[Tuple[int, List[str]]]:
    try:
        with open(path, newline='', encoding='utf-8') as stream:
            for number, row in enumerate(csv.reader(stream), start=1):
                yield number, row
    except UnicodeDecodeError:
        raise MalformedFile(path, 'not UTF-8 text')
    except csv.Error as exc:
        raise MalformedFile(path, 'CSV error: {}'.format(exc))
    except OSError as exc:
        raise MalformedFile(path, 'cannot read: {}'.format(exc.strerror))


def _parse_float(path: str, text: str, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise MalformedFile(path, 'not a number: {!r}'.format(text),
                            line=line)
    if not np.isfinite(value):
        raise MalformedFile(path, 'non-finite value {!r}'.format(text),
                            line=line)
    return value


def _read_csv_record(path: str) -> QuadratureRecord:
    phases: List[float] = []
    values: List[float] = []
    header_seen = False
    for line, row in _csv_rows(path):
        if not header_seen:
            if [cell.strip() for cell in row] != RECORD_HEADER:
                raise MalformedFile(path, 'expected header {}'.format(
                    ','.join(RECORD_HEADER)), line=line)
            header_seen = True
            continue
        if not row:
            continue
        if len(row) != 2:
            raise MalformedFile(path, 'expected 2 columns, got {}'.format(
                len(row)), line=line)
        phases.append(_parse_float(path, row[0], line))
        values.append(_parse_float(path, row[1], line))
    if not header_seen:
        raise MalformedFile(path, 'file is empty', line=1)
    if not values:
        raise MalformedFile(path, 'record has no data rows', line=2)
    return QuadratureRecord(phases, values)


def read_record(path: str) -> QuadratureRecord:
    """Read a record, telling binary from CSV by its magic bytes."""
    data = _read_bytes(path)
    if data[:len(RECORD_MAGIC)] == RECORD_MAGIC:
        return _read_binary_record(path)
    return _read_csv_record(path)


def write_model(model: Any, path: str) -> None:
    """Write a NetworkModel: architecture JSON, then float64 weights."""
    architecture = json.dumps(model.spec.as_dict(),
                              sort_keys=True).encode('utf-8')
    weights = model.weights.astype('<f8').tobytes()
    write_binary(path, MODEL_MAGIC, KIND_MODEL, len(architecture),
                 architecture + weights)


def read_model(path: str) -> Any:
    """Read a NetworkModel written by write_model."""
    from sqztomo.nn import ArchitectureSpec, NetworkModel
    header, payload = read_binary(path, MODEL_MAGIC, KIND_MODEL)
    if header.meta > len(payload):
        raise MalformedFile(path, 'architecture runs past the payload',
                            offset=8)
    try:
        spec = ArchitectureSpec.from_dict(
            json.loads(payload[:header.meta].decode('utf-8')))
    except (UnicodeDecodeError, ValueError, TypeError, AttributeError,
            SqztomoError) as exc:
        raise MalformedFile(path, 'bad architecture: {}'.format(exc),
                            offset=HEADER.size)
    model = NetworkModel(spec)
    weights = _floats(path, payload, header.meta)
    try:
        model.set_weights(weights)
    except ContractViolation as exc:
        raise MalformedFile(path, str(exc), offset=HEADER.size + header.meta)
    return model


def write_json(path: str, data: Any) -> None:
    """Write JSON atomically, with sorted keys."""
    text = json.dumps(data, indent=2, sort_keys=True) + '\n'
    _write_bytes(path, text.encode('utf-8'))


def read_json(path: str) -> Any:
    """Read a JSON document."""
    data = _read_bytes(path)
    try:
        return json.loads(data.decode('utf-8'))
    except UnicodeDecodeError:
        raise MalformedFile(path, 'not UTF-8 text')
    except ValueError as exc:
        line = getattr(exc, 'lineno', None)
        raise MalformedFile(path, 'invalid JSON: {}'.format(exc), line=line)


def write_csv(path: str, header: Sequence[str],
              rows: Iterable[Sequence[Any]]) -> None:
    """Write a CSV report atomically."""
    lines = [','.join(header)]
    lines.extend(','.join(str(cell) for cell in row) for row in rows)
    _write_bytes(path, ('\n'.join(lines) + '\n').encode('utf-8'))


def write_fit(result: Any, path: str) -> None:
    """Write a DegradationFit as JSON."""
    write_json(path, result.as_dict())


def read_fit(path: str) -> Any:
    """Read a DegradationFit written by write_fit."""
    from sqztomo.degradation import DegradationFit
    data = read_json(path)
    try:
        return DegradationFit.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedFile(path, 'bad fit: {}'.format(exc))


def read_points(path: str) -> List[Any]:
    """Read a points CSV, header sq_db,as_db[,label,pump_mw]."""
    from sqztomo.degradation import LevelPoint
    points: List[Any] = []
    columns: List[str] = []
    for line, row in _csv_rows(path):
        if not columns:
            columns = [cell.strip() for cell in row]
            if (columns[:2] != POINTS_HEADER
                    or any(c not in POINTS_OPTIONAL for c in columns[2:])):
                raise MalformedFile(path, 'expected header sq_db,as_db'
                                    '[,label,pump_mw]', line=line)
            continue
        if not row:
            continue
        if len(row) != len(columns):
            raise MalformedFile(path, 'expected {} columns, got {}'.format(
                len(columns), len(row)), line=line)
        cells = dict(zip(columns, row))
        pump = cells.get('pump_mw')
        try:
            points.append(LevelPoint(
                _parse_float(path, cells['sq_db'], line),
                _parse_float(path, cells['as_db'], line),
                label=cells.get('label') or None,
                pump_mw=_parse_float(path, pump, line) if pump else None))
        except ContractViolation as exc:
            raise MalformedFile(path, str(exc), line=line)
    if not columns:
        raise MalformedFile(path, 'file is empty', line=1)
    return points


def write_points(points: Sequence[Any], path: str) -> None:
    """Write points with every column."""
    write_csv(path, POINTS_HEADER + POINTS_OPTIONAL, [
        (p.sq_db, p.as_db, p.label or '',
         '' if p.pump_mw is None else p.pump_mw) for p in points])


def sample_paths(index: int) -> Tuple[str, str]:
    """File names of one corpus sample, relative to the corpus directory."""
    stem = 'sample-{:06d}'.format(index)
    return stem + '.csv', stem + '.dm'


def write_corpus_index(directory: str, entries: Sequence[Dict[str, Any]],
                       metadata: Dict[str, Any]) -> None:
    """Write index.json last, once every sample file is in place."""
    index = dict(metadata)
    index.update({'schema': CORPUS_SCHEMA, 'count': len(entries),
                  'samples': sorted(entries, key=lambda e: e['index'])})
    write_json(os.path.join(directory, CORPUS_INDEX), index)


def read_corpus_index(directory: str) -> Dict[str, Any]:
    """Read and check a corpus index; every referenced file must exist."""
    path = os.path.join(directory, CORPUS_INDEX)
    index = read_json(path)
    if not isinstance(index, dict) or index.get('schema') != CORPUS_SCHEMA:
        raise MalformedFile(path, 'not a sqztomo corpus index')
    samples = index.get('samples', [])
    if not isinstance(samples, list):
        raise MalformedFile(path, 'samples is not a list')
    for position, entry in enumerate(samples):
        if not isinstance(entry, dict):
            raise MalformedFile(path, 'sample {} is not an object'.format(
                position))
        for key in ('record', 'state'):
            name = entry.get(key)
            if not isinstance(name, str) or not name:
                raise MalformedFile(path, 'sample {} has no {} file'.format(
                    position, key))
            if not os.path.exists(os.path.join(directory, name)):
                raise MalformedFile(path, 'sample {} references missing '
                                    'file {}'.format(position, name))
        if not isinstance(entry.get('params', {}), dict):
            raise MalformedFile(path, 'sample {} params is not an '
                                'object'.format(position))
    if index.get('count') != len(samples):
        raise MalformedFile(path, 'count does not match the sample list')
    return index


def read_corpus(directory: str) -> Tuple[List[QuadratureRecord],
                                         List[DensityMatrix],
                                         List[Dict[str, Any]]]:
    """Load every (record, state, parameters) triple of a corpus."""
    index = read_corpus_index(directory)
    records: List[QuadratureRecord] = []
    states: List[DensityMatrix] = []
    metadata: List[Dict[str, Any]] = []
    for entry in index['samples']:
        records.append(read_record(os.path.join(directory,
                                                entry['record'])))
        states.append(read_density(os.path.join(directory, entry['state'])))
        metadata.append(entry.get('params', {}))
    return records, states, metadata
