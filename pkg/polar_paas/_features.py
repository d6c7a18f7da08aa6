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
Handcrafted baseline features of DOLP images: region statistics (mean,
standard deviation, kurtosis) and local binary pattern histograms.
"""

import csv
import logging
from collections import namedtuple

import numpy as np

from ._exceptions import DataError, DimensionError, ParameterError

__all__ = ['StatTriple', 'FeatureVector', 'stat_triple', 'lbp_histogram',
           'lbp_codes', 'write_feature_csv', 'STAT_DESCRIPTORS',
           'DESCRIPTOR_LBP', 'embedding_descriptor', 'MIN_VARIANCE']

LOG = logging.getLogger(__name__)

#: Central second moments below this value make the kurtosis undefined.
MIN_VARIANCE = 1e-18

STAT_DESCRIPTORS = ('stat-mean', 'stat-std', 'stat-kurtosis')
DESCRIPTOR_LBP = 'lbp-256'
_EMBEDDING_PREFIX = 'embedding-'

# Neighbor offsets (dy, dx), clockwise from the top-left neighbor. The
# neighbor at index k sets bit k of the code.
_LBP_NEIGHBORS = ((-1, -1), (-1, 0), (-1, 1), (0, 1),
                  (1, 1), (1, 0), (1, -1), (0, -1))


class StatTriple(namedtuple('StatTriple', ['mean', 'std', 'kurtosis'])):
    """
    Mean, population standard deviation and Pearson kurtosis (m4 / m2^2,
    not excess kurtosis) of a set of pixel values.
    """
    __slots__ = ()

    def feature(self, name):
        """
        Return one statistic ('mean', 'std' or 'kurtosis') as a
        single-element :class:`FeatureVector`.
        """
        if name not in self._fields:
            raise ParameterError(
                "Invalid statistic {!r}; valid are {}".
                format(name, self._fields))
        return FeatureVector([getattr(self, name)], 'stat-' + name)


def embedding_descriptor(dim):
    """
    Return the descriptor name of a dim-dimensional embedding.
    """
    return '{}{}'.format(_EMBEDDING_PREFIX, dim)


def _descriptor_length(descriptor):
    if descriptor in STAT_DESCRIPTORS:
        return 1
    if descriptor == DESCRIPTOR_LBP:
        return 256
    if descriptor.startswith(_EMBEDDING_PREFIX):
        try:
            return int(descriptor[len(_EMBEDDING_PREFIX):])
        except ValueError:
            pass
    raise ParameterError("Invalid feature descriptor {!r}".format(descriptor))


class FeatureVector(object):
    """
    A fixed-length real feature vector together with the name of the feature
    space it belongs to.
    """

    def __init__(self, values, descriptor):
        """
        Parameters:

          values (array-like): The finite feature values.

          descriptor (string): 'stat-mean', 'stat-std', 'stat-kurtosis',
            'lbp-256' or 'embedding-<D>'.

        Raises:
          DimensionError: Length does not match the descriptor.
          ParameterError: Invalid descriptor or non-finite values.
        """
        values = np.asarray(values, dtype=np.float64).ravel()
        length = _descriptor_length(descriptor)
        if values.size != length:
            raise DimensionError(
                "Feature vector with descriptor {!r} must have length {}, "
                "but has length {}".format(descriptor, length, values.size))
        if not np.all(np.isfinite(values)):
            raise ParameterError(
                "Feature vector with descriptor {!r} has non-finite values".
                format(descriptor))
        self._values = values
        self._descriptor = descriptor

    def __len__(self):
        return self._values.size

    def __repr__(self):
        return "FeatureVector(descriptor={!r}, len={})". \
            format(self._descriptor, self._values.size)

    @property
    def values(self):
        """
        :class:`numpy:numpy.ndarray`: The values as float64 vector.
        """
        return self._values

    @property
    def descriptor(self):
        """
        string: Name of the feature space.
        """
        return self._descriptor


def stat_triple(image, region):
    """
    Compute mean, standard deviation and kurtosis of the pixels of an image
    inside a region.

    Parameters:

      image (array-like): 2-dimensional plane.

      region (CropRect): Non-empty rectangle inside the image.

    Returns:
      StatTriple: mean = m1, std = sqrt(m2), kurtosis = m4 / m2^2, with
      m2 and m4 the population central moments.

    Raises:
      DimensionError: Region empty or outside of the image.
      DataError: m2 < :data:`MIN_VARIANCE` (kurtosis undefined).
    """
    values = region.apply(np.asarray(image, dtype=np.float64)).ravel()
    mean = values.mean()
    dev = values - mean
    dev2 = dev * dev
    m2 = dev2.mean()
    if m2 < MIN_VARIANCE:
        raise DataError(
            "Degenerate variance {} in region {}: kurtosis is undefined".
            format(m2, tuple(region)))
    m4 = (dev2 * dev2).mean()
    return StatTriple(float(mean), float(np.sqrt(m2)), float(m4 / (m2 * m2)))


def lbp_codes(patch):
    """
    Compute the 8-neighbor, radius-1 local binary pattern codes of the
    interior pixels of a patch.

    Bit k of a code is set iff the k-th neighbor (clockwise, starting at the
    top-left neighbor) is greater than or equal to the center pixel.

    Returns:
      numpy.ndarray: Codes in [0, 255] of shape (h - 2, w - 2).
    """
    patch = np.asarray(patch, dtype=np.float64)
    h, w = patch.shape
    center = patch[1:h - 1, 1:w - 1]
    codes = np.zeros(center.shape, dtype=np.int64)
    for bit, (dy, dx) in enumerate(_LBP_NEIGHBORS):
        neighbor = patch[1 + dy:h - 1 + dy, 1 + dx:w - 1 + dx]
        codes |= (neighbor >= center).astype(np.int64) << bit
    return codes


def lbp_histogram(image, region):
    """
    Compute the normalized 256-bin histogram of local binary pattern codes
    of a region. Border pixels of the region are excluded as centers.

    Parameters:

      image (array-like): 2-dimensional plane.

      region (CropRect): Rectangle inside the image, at least 3x3.

    Returns:
      FeatureVector: Histogram with descriptor 'lbp-256', summing to 1.

    Raises:
      DimensionError: Region smaller than 3x3 or outside of the image.
    """
    if region.width < 3 or region.height < 3:
        raise DimensionError(
            "LBP region must be at least 3x3, but is {}x{}".
            format(region.width, region.height))
    codes = lbp_codes(region.apply(np.asarray(image, dtype=np.float64)))
    hist = np.bincount(codes.ravel(), minlength=256).astype(np.float64)
    return FeatureVector(hist / codes.size, DESCRIPTOR_LBP)


def write_feature_csv(filepath, rows):
    """
    Write a feature dump as CSV with header
    ``sample_id,label,descriptor,v0..vK``.

    Parameters:

      filepath (:term:`unicode string`): Path name of the CSV file.

      rows (list of tuple(string, string, FeatureVector)): Sample id, label
        and feature vector per sample. All vectors must have the same
        length.
    """
    rows = list(rows)
    width = len(rows[0][2]) if rows else 0
    with open(filepath, 'w', newline='') as fp:
        writer = csv.writer(fp, lineterminator='\n')
        writer.writerow(['sample_id', 'label', 'descriptor'] +
                        ['v{}'.format(i) for i in range(width)])
        for sample_id, label, vector in rows:
            if len(vector) != width:
                raise DimensionError(
                    "Feature vector of sample {!r} has length {}, expected {}".
                    format(sample_id, len(vector), width))
            writer.writerow([sample_id, label, vector.descriptor] +
                            [repr(float(v)) for v in vector.values])
    LOG.debug("Wrote %d feature rows to %s", len(rows), filepath)
