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
Dataset manifests: JSON-lines files with one record per synthetic sample.
"""

import os
import json
import logging
from collections import namedtuple, OrderedDict

import jsonschema

from ._exceptions import ManifestFileError, ParameterError, DimensionError
from ._image_io import read_pfm
from ._profile_file import LABELS, LABEL_GENUINE

__all__ = ['CropRect', 'ManifestRecord', 'DatasetManifest',
           'SPLIT_TRAIN', 'SPLIT_TEST', 'CHANNEL_DOLP', 'CHANNEL_GRAY',
           'CHANNELS', 'normalize_channel', 'MANIFEST_FILENAME']

LOG = logging.getLogger(__name__)

SPLIT_TRAIN = 'train'
SPLIT_TEST = 'test'

CHANNEL_DOLP = 'dolp'
CHANNEL_GRAY = 'gray'
CHANNELS = (CHANNEL_DOLP, CHANNEL_GRAY)

MANIFEST_FILENAME = 'manifest.jsonl'

# Files of a sample, keyed by their role
FILE_KEYS = ('mosaic', 'i0', 'i45', 'i90', 'i135', 'dolp', 's0')

# JSON schema describing one line of a manifest file
MANIFEST_RECORD_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "JSON schema for a record in polar-paas manifest files",
    "type": "object",
    "required": ["sample_id", "label", "material", "files", "crop", "seed",
                 "split"],
    "additionalProperties": False,
    "properties": {
        "sample_id": {"type": "string"},
        "label": {"type": "string", "enum": list(LABELS)},
        "material": {"type": "string"},
        "files": {
            "type": "object",
            "required": list(FILE_KEYS),
            "additionalProperties": False,
            "properties": {k: {"type": "string"} for k in FILE_KEYS},
        },
        "crop": {
            "type": "array",
            "minItems": 4,
            "maxItems": 4,
            "items": {"type": "integer", "minimum": 0},
        },
        "seed": {"type": "integer"},
        "split": {"type": "string", "enum": [SPLIT_TRAIN, SPLIT_TEST]},
    },
}


def normalize_channel(channel):
    """
    Return the canonical channel name for 'dolp', 'gray' or its alias 's0'.

    Raises:
      ParameterError: Unknown channel.
    """
    if channel == 's0':
        channel = CHANNEL_GRAY
    if channel not in CHANNELS:
        raise ParameterError(
            "Invalid channel {!r}; valid are {}".format(channel, CHANNELS))
    return channel


class CropRect(namedtuple('CropRect', ['x', 'y', 'width', 'height'])):
    """
    An axis-aligned rectangle in pixel coordinates: upper-left corner (x, y)
    and its size.
    """
    __slots__ = ()

    def check_inside(self, shape):
        """
        Verify that the rectangle is non-empty and inside a plane of the
        given (height, width) shape.

        Raises:
          DimensionError: Empty rectangle or not inside the plane.
        """
        height, width = shape
        if self.width <= 0 or self.height <= 0:
            raise DimensionError(
                "Crop rectangle {} is empty".format(tuple(self)))
        if self.x < 0 or self.y < 0 or self.x + self.width > width or \
                self.y + self.height > height:
            raise DimensionError(
                "Crop rectangle {} is not inside the {}x{} image "
                "(width x height)".format(tuple(self), width, height))

    def apply(self, plane):
        """
        Return the part of a plane inside the rectangle.
        """
        self.check_inside(plane.shape)
        return plane[self.y:self.y + self.height, self.x:self.x + self.width]


class ManifestRecord(object):
    """
    One sample of a dataset: its label, material, files, face crop rectangle,
    seed and split.

    File paths are stored relative to the directory of the manifest file.
    """

    def __init__(self, record_dict, base_dir='.'):
        self._data = record_dict
        self._base_dir = base_dir

    def __repr__(self):
        return "ManifestRecord(" \
            "sample_id={s.sample_id!r}, label={s.label!r}, " \
            "material={s.material!r}, split={s.split!r})".format(s=self)

    @property
    def sample_id(self):
        """
        :term:`unicode string`: Unique identifier of the sample.
        """
        return self._data['sample_id']

    @property
    def label(self):
        """
        :term:`unicode string`: Ground truth label, one of
        :data:`~polar_paas.LABELS`.
        """
        return self._data['label']

    @property
    def is_genuine(self):
        """
        bool: Whether the sample shows genuine skin.
        """
        return self._data['label'] == LABEL_GENUINE

    @property
    def binary_label(self):
        """
        int: +1 for genuine samples, -1 for attacks.
        """
        return 1 if self.is_genuine else -1

    @property
    def material(self):
        """
        :term:`unicode string`: Name of the material profile.
        """
        return self._data['material']

    @property
    def files(self):
        """
        dict: Relative file paths by role ('mosaic', 'i0', ..., 'dolp', 's0').
        """
        return dict(self._data['files'])

    @property
    def crop(self):
        """
        :class:`CropRect`: Face crop rectangle.
        """
        return CropRect(*self._data['crop'])

    @property
    def seed(self):
        """
        int: Seed the sample was generated from.
        """
        return self._data['seed']

    @property
    def split(self):
        """
        :term:`unicode string`: 'train' or 'test'.
        """
        return self._data['split']

    def path(self, role):
        """
        Return the absolute path of the file with the given role.
        """
        return os.path.abspath(
            os.path.join(self._base_dir, self._data['files'][role]))

    def load_channel(self, channel):
        """
        Load the plane of a channel: the DOLP plane for 'dolp' and the total
        intensity plane for 'gray'.

        Returns:
          numpy.ndarray: The plane.
        """
        channel = normalize_channel(channel)
        role = 'dolp' if channel == CHANNEL_DOLP else 's0'
        return read_pfm(self.path(role))

    def to_dict(self):
        """
        Return the record as a dictionary in the manifest line format.
        """
        return dict(self._data)


class DatasetManifest(object):
    """
    The list of samples of a synthetic dataset.
    """

    def __init__(self, records, filepath=None):
        """
        Parameters:

          records (list of ManifestRecord): The samples.

          filepath (:term:`unicode string`): Path name of the manifest file,
            or `None`.

        Raises:
          ManifestFileError: Duplicate sample ids.
        """
        self._records = list(records)
        self._filepath = filepath
        seen = set()
        for rec in self._records:
            if rec.sample_id in seen:
                raise ManifestFileError(
                    "Duplicate sample id {!r} in manifest {!r}".
                    format(rec.sample_id, filepath))
            seen.add(rec.sample_id)

    def __len__(self):
        return len(self._records)

    def __iter__(self):
        return iter(self._records)

    @property
    def records(self):
        """
        list of :class:`ManifestRecord`: The samples in file order.
        """
        return list(self._records)

    @property
    def filepath(self):
        """
        :term:`unicode string`: Path name of the manifest file, or `None`.
        """
        return self._filepath

    def split(self, name):
        """
        Return a manifest with only the samples of one split.
        """
        if name not in (SPLIT_TRAIN, SPLIT_TEST):
            raise ParameterError(
                "Invalid split {!r}; valid are {!r}".
                format(name, (SPLIT_TRAIN, SPLIT_TEST)))
        return DatasetManifest(
            [r for r in self._records if r.split == name], self._filepath)

    def labels(self):
        """
        Return the sorted list of distinct labels.
        """
        return sorted(set(r.label for r in self._records))

    def binary_classes(self):
        """
        Return the sorted list of distinct binary labels (+1 genuine, -1
        attack).
        """
        return sorted(set(r.binary_label for r in self._records))

    def count_by_label(self):
        """
        Return an ordered dictionary of sample counts by label.
        """
        counts = OrderedDict()
        for label in self.labels():
            counts[label] = sum(1 for r in self._records if r.label == label)
        return counts

    def save(self, filepath):
        """
        Write the manifest as JSON-lines file (UTF-8, sorted keys).

        Raises:
          ManifestFileError: Error writing the file.
        """
        lines = [json.dumps(r.to_dict(), sort_keys=True) + '\n'
                 for r in self._records]
        try:
            with open(filepath, 'w', encoding='utf-8', newline='\n') as fp:
                fp.writelines(lines)
        except (OSError, IOError) as exc:
            new_exc = ManifestFileError(
                "Cannot write manifest file: {fn}: {exc}".
                format(fn=filepath, exc=exc))
            new_exc.__cause__ = None
            raise new_exc  # ManifestFileError
        self._filepath = filepath
        LOG.debug("Wrote manifest %s with %d records", filepath,
                  len(self._records))

    @classmethod
    def load(cls, filepath):
        """
        Load a JSON-lines manifest file and validate its records.

        Raises:
          ManifestFileError: Error opening the file or invalid content.
        """
        base_dir = os.path.dirname(os.path.abspath(filepath))
        try:
            with open(filepath, 'r', encoding='utf-8') as fp:
                lines = fp.readlines()
        except (OSError, IOError) as exc:
            new_exc = ManifestFileError(
                "Cannot open manifest file: {fn}: {exc}".
                format(fn=filepath, exc=exc))
            new_exc.__cause__ = None
            raise new_exc  # ManifestFileError
        records = []
        for lineno, line in enumerate(lines, 1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
                jsonschema.validate(data, MANIFEST_RECORD_SCHEMA)
            except ValueError as exc:
                new_exc = ManifestFileError(
                    "Invalid JSON in manifest file {fn} line {n}: {exc}".
                    format(fn=filepath, n=lineno, exc=exc))
                new_exc.__cause__ = None
                raise new_exc  # ManifestFileError
            except jsonschema.exceptions.ValidationError as exc:
                new_exc = ManifestFileError(
                    "Invalid record in manifest file {fn} line {n}: {msg}".
                    format(fn=filepath, n=lineno, msg=exc.message))
                new_exc.__cause__ = None
                raise new_exc  # ManifestFileError
            records.append(ManifestRecord(data, base_dir))
        return cls(records, os.path.abspath(filepath))
