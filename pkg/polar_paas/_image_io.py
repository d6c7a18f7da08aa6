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
Reading and writing of single-plane image files: binary PGM (P5) for raw
mosaic and angle intensities, and PFM for floating point planes such as
Stokes and DOLP planes.
"""

import re
import logging

import numpy as np

from ._exceptions import ImageFileOpenError, ImageFileFormatError, \
    ParameterError

__all__ = ['read_pgm', 'write_pgm', 'read_pfm', 'write_pfm']

LOG = logging.getLogger(__name__)

# P5 header: magic, width, height, maxval, each separated by whitespace
# with optional comments, then exactly one whitespace character.
_PGM_HEADER_TOKEN = re.compile(br'\s*(?:#[^\n]*\n\s*)*(\S+)')


def _read_bytes(filepath):
    try:
        with open(filepath, 'rb') as fp:
            return fp.read()
    except (OSError, IOError) as exc:
        new_exc = ImageFileOpenError(
            "Cannot open image file: {fn}: {exc}".format(fn=filepath, exc=exc))
        new_exc.__cause__ = None
        raise new_exc  # ImageFileOpenError


def _write_bytes(filepath, data):
    try:
        with open(filepath, 'wb') as fp:
            fp.write(data)
    except (OSError, IOError) as exc:
        new_exc = ImageFileOpenError(
            "Cannot write image file: {fn}: {exc}".
            format(fn=filepath, exc=exc))
        new_exc.__cause__ = None
        raise new_exc  # ImageFileOpenError


def read_pgm(filepath):
    """
    Read a binary PGM (P5) file with 8 or 16 bit samples.

    Sample values are scaled into [0, 1] by dividing by the maximum value of
    the bit depth, 2^bits - 1 (255 or 65535), independent of the maxval in
    the header.

    Parameters:

      filepath (:term:`unicode string`): Path name of the PGM file.

    Returns:
      tuple(numpy.ndarray, int): The float64 plane of shape (height, width)
      and the bit depth (8 or 16).

    Raises:
      ImageFileOpenError: Error opening the file.
      ImageFileFormatError: Not a valid P5 file, or truncated pixel data.
    """
    data = _read_bytes(filepath)
    tokens = []
    pos = 0
    for _ in range(4):
        m = _PGM_HEADER_TOKEN.match(data, pos)
        if not m:
            raise ImageFileFormatError(
                "Truncated PGM header in image file {fn}".format(fn=filepath))
        tokens.append(m.group(1))
        pos = m.end()
    if tokens[0] != b'P5':
        raise ImageFileFormatError(
            "Invalid magic {m!r} in image file {fn}: only binary PGM (P5) is "
            "supported".format(m=tokens[0], fn=filepath))
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        new_exc = ImageFileFormatError(
            "Invalid PGM header values {t!r} in image file {fn}".
            format(t=tokens[1:], fn=filepath))
        new_exc.__cause__ = None
        raise new_exc  # ImageFileFormatError
    if width <= 0 or height <= 0 or not 0 < maxval < 65536:
        raise ImageFileFormatError(
            "Invalid PGM dimensions or maxval ({w}, {h}, {m}) in image file "
            "{fn}".format(w=width, h=height, m=maxval, fn=filepath))
    pos += 1  # single whitespace after maxval
    if maxval < 256:
        bits, dtype = 8, np.dtype('u1')
    else:
        bits, dtype = 16, np.dtype('>u2')
    size = width * height * dtype.itemsize
    if len(data) - pos < size:
        raise ImageFileFormatError(
            "Truncated pixel data in image file {fn}: expected {e} bytes, "
            "got {g}".format(fn=filepath, e=size, g=len(data) - pos))
    raw = np.frombuffer(data, dtype=dtype, count=width * height, offset=pos)
    plane = raw.reshape(height, width).astype(np.float64) / (2 ** bits - 1)
    LOG.debug("Read %dx%d %d-bit PGM %s", width, height, bits, filepath)
    return plane, bits


def write_pgm(filepath, plane, bits=16):
    """
    Write a plane with values in [0, 1] as binary PGM (P5) file.

    Values are clipped to [0, 1], scaled by 2^bits - 1 and rounded.

    Parameters:

      filepath (:term:`unicode string`): Path name of the PGM file.

      plane (array-like): 2-dimensional plane.

      bits (int): Bit depth, 8 or 16. 16-bit samples are big-endian.

    Raises:
      ParameterError: Invalid bit depth or plane shape.
      ImageFileOpenError: Error writing the file.
    """
    if bits not in (8, 16):
        raise ParameterError(
            "PGM bit depth must be 8 or 16, but is {!r}".format(bits))
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2:
        raise ParameterError(
            "PGM plane must be 2-dimensional, but has shape {}".
            format(plane.shape))
    maxval = 2 ** bits - 1
    dtype = np.dtype('u1') if bits == 8 else np.dtype('>u2')
    samples = np.rint(np.clip(plane, 0.0, 1.0) * maxval).astype(dtype)
    height, width = plane.shape
    header = "P5\n{w} {h}\n{m}\n".format(w=width, h=height, m=maxval)
    _write_bytes(filepath, header.encode('ascii') + samples.tobytes())


def read_pfm(filepath):
    """
    Read a single-plane PFM (``Pf``) file.

    A negative scale in the header denotes little-endian samples, a positive
    scale big-endian samples. Rows are stored bottom-to-top.

    Parameters:

      filepath (:term:`unicode string`): Path name of the PFM file.

    Returns:
      numpy.ndarray: The float64 plane of shape (height, width).

    Raises:
      ImageFileOpenError: Error opening the file.
      ImageFileFormatError: Not a single-plane PFM file, or truncated data.
    """
    data = _read_bytes(filepath)
    lines = data.split(b'\n', 3)
    if len(lines) < 4:
        raise ImageFileFormatError(
            "Truncated PFM header in image file {fn}".format(fn=filepath))
    if lines[0].strip() != b'Pf':
        raise ImageFileFormatError(
            "Invalid magic {m!r} in image file {fn}: only single-plane PFM "
            "(Pf) is supported".format(m=lines[0].strip(), fn=filepath))
    try:
        width, height = (int(t) for t in lines[1].split())
        scale = float(lines[2].strip())
    except ValueError:
        new_exc = ImageFileFormatError(
            "Invalid PFM header in image file {fn}".format(fn=filepath))
        new_exc.__cause__ = None
        raise new_exc  # ImageFileFormatError
    if width <= 0 or height <= 0 or scale == 0:
        raise ImageFileFormatError(
            "Invalid PFM dimensions or scale ({w}, {h}, {s}) in image file "
            "{fn}".format(w=width, h=height, s=scale, fn=filepath))
    dtype = np.dtype('<f4') if scale < 0 else np.dtype('>f4')
    body = lines[3]
    size = width * height * dtype.itemsize
    if len(body) < size:
        raise ImageFileFormatError(
            "Truncated pixel data in image file {fn}: expected {e} bytes, "
            "got {g}".format(fn=filepath, e=size, g=len(body)))
    raw = np.frombuffer(body, dtype=dtype, count=width * height)
    plane = np.flipud(raw.reshape(height, width)).astype(np.float64)
    LOG.debug("Read %dx%d PFM %s", width, height, filepath)
    return plane


def write_pfm(filepath, plane):
    """
    Write a plane as single-plane little-endian PFM file (32-bit floats,
    scale -1.0, rows bottom-to-top).

    Parameters:

      filepath (:term:`unicode string`): Path name of the PFM file.

      plane (array-like): 2-dimensional plane.

    Raises:
      ParameterError: Invalid plane shape.
      ImageFileOpenError: Error writing the file.
    """
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2:
        raise ParameterError(
            "PFM plane must be 2-dimensional, but has shape {}".
            format(plane.shape))
    height, width = plane.shape
    header = "Pf\n{w} {h}\n-1.0\n".format(w=width, h=height)
    samples = np.ascontiguousarray(np.flipud(plane)).astype('<f4')
    _write_bytes(filepath, header.encode('ascii') + samples.tobytes())
