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
Versioned binary container for model checkpoints.

Layout (all integers little-endian)::

    8 bytes   magic b'PAASCKPT'
    uint16    format version
    uint32    length of the header in bytes
    ...       header: UTF-8 JSON object with keys 'kind', 'architecture',
              'seed', 'config' and 'params' (list of [name, shape])
    uint64    number of parameter values
    ...       parameter blob: float64 little-endian, parameters concatenated
              in header order, each in C order
"""

import json
import struct
import logging
from collections import OrderedDict

import numpy as np

from ._exceptions import CheckpointFileError

__all__ = ['CHECKPOINT_MAGIC', 'CHECKPOINT_VERSION', 'save_checkpoint',
           'load_checkpoint']

LOG = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b'PAASCKPT'
CHECKPOINT_VERSION = 1


def save_checkpoint(filepath, kind, architecture, params, seed, config):
    """
    Write a checkpoint file.

    Parameters:

      filepath (:term:`unicode string`): Path name of the file.

      kind (string): Kind of model, e.g. 'embedding' or 'svm'.

      architecture (dict): JSON-serializable architecture descriptor.

      params (OrderedDict of numpy.ndarray): Parameters by name.

      seed (int): Seed the model was created with.

      config (dict): JSON-serializable snapshot of the training config.

    Raises:
      CheckpointFileError: Error writing the file.
    """
    header = {
        'kind': kind,
        'architecture': architecture,
        'seed': seed,
        'config': config,
        'params': [[name, list(np.shape(value))]
                   for name, value in params.items()],
    }
    header_bytes = json.dumps(header, sort_keys=True).encode('utf-8')
    if params:
        blob = np.concatenate(
            [np.asarray(v, dtype=np.float64).ravel() for v in params.values()])
    else:
        blob = np.zeros(0, dtype=np.float64)
    data = CHECKPOINT_MAGIC + \
        struct.pack('<HI', CHECKPOINT_VERSION, len(header_bytes)) + \
        header_bytes + struct.pack('<Q', blob.size) + \
        blob.astype('<f8').tobytes()
    try:
        with open(filepath, 'wb') as fp:
            fp.write(data)
    except (OSError, IOError) as exc:
        new_exc = CheckpointFileError(
            "Cannot write checkpoint file: {fn}: {exc}".
            format(fn=filepath, exc=exc))
        new_exc.__cause__ = None
        raise new_exc  # CheckpointFileError
    LOG.debug("Wrote %s checkpoint %s with %d parameters", kind, filepath,
              blob.size)


def load_checkpoint(filepath, kind):
    """
    Read a checkpoint file of an expected kind.

    Returns:
      dict: With keys 'architecture', 'seed', 'config' and 'params'
      (OrderedDict of numpy.ndarray).

    Raises:
      CheckpointFileError: Error opening the file, invalid container, or a
        checkpoint of a different kind or format version.
    """
    try:
        with open(filepath, 'rb') as fp:
            data = fp.read()
    except (OSError, IOError) as exc:
        new_exc = CheckpointFileError(
            "Cannot open checkpoint file: {fn}: {exc}".
            format(fn=filepath, exc=exc))
        new_exc.__cause__ = None
        raise new_exc  # CheckpointFileError

    if not data.startswith(CHECKPOINT_MAGIC):
        raise CheckpointFileError(
            "File {fn} is not a checkpoint file (invalid magic)".
            format(fn=filepath))
    try:
        pos = len(CHECKPOINT_MAGIC)
        version, header_len = struct.unpack_from('<HI', data, pos)
        if version != CHECKPOINT_VERSION:
            raise CheckpointFileError(
                "Unsupported checkpoint format version {v} in file {fn}".
                format(v=version, fn=filepath))
        pos += struct.calcsize('<HI')
        header = json.loads(data[pos:pos + header_len].decode('utf-8'))
        pos += header_len
        count, = struct.unpack_from('<Q', data, pos)
        pos += struct.calcsize('<Q')
    except (struct.error, ValueError) as exc:
        new_exc = CheckpointFileError(
            "Invalid checkpoint header in file {fn}: {exc}".
            format(fn=filepath, exc=exc))
        new_exc.__cause__ = None
        raise new_exc  # CheckpointFileError

    if header.get('kind') != kind:
        raise CheckpointFileError(
            "Checkpoint file {fn} contains a {a!r} model, expected {e!r}".
            format(fn=filepath, a=header.get('kind'), e=kind))
    if len(data) - pos != count * 8:
        raise CheckpointFileError(
            "Truncated parameter blob in checkpoint file {fn}".
            format(fn=filepath))
    blob = np.frombuffer(data, dtype='<f8', count=count, offset=pos). \
        astype(np.float64)

    params = OrderedDict()
    offset = 0
    try:
        for name, shape in header['params']:
            size = int(np.prod(shape)) if shape else 1
            params[name] = blob[offset:offset + size].reshape(shape).copy()
            offset += size
    except (KeyError, TypeError, ValueError) as exc:
        new_exc = CheckpointFileError(
            "Invalid parameter table in checkpoint file {fn}: {exc}".
            format(fn=filepath, exc=exc))
        new_exc.__cause__ = None
        raise new_exc  # CheckpointFileError
    if offset != count:
        raise CheckpointFileError(
            "Parameter shapes in checkpoint file {fn} do not match the "
            "blob size".format(fn=filepath))
    return {
        'architecture': header['architecture'],
        'seed': header['seed'],
        'config': header['config'],
        'params': params,
    }
