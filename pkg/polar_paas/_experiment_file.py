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
Support for experiment files.
"""

import os
import copy
import logging
from collections import OrderedDict

import yaml
import yamlloader
import jsonschema

from ._exceptions import ConfigFileFormatError, ConfigFileOpenError, \
    ParameterError
from ._polar import MosaicPattern, DEMOSAIC_METHODS, DEMOSAIC_BILINEAR, \
    DEFAULT_PATTERN
from ._profile_file import ProfilePack, _load_yaml_file, \
    DEFAULT_PROFILE_PACK, CONFUSABLE_PROFILE_PACK, EXTENDED_PROFILE_PACK
from ._manifest import CHANNELS, normalize_channel
from ._embed_net import TrainConfig
from ._svm import SvmConfig

__all__ = ['ExperimentConfig', 'EXPERIMENT_FILE_SCHEMA', 'BUILTIN_PACKS',
           'EXPERIMENT_METHODS']

LOG = logging.getLogger(__name__)

#: Profile packs that can be referenced by name instead of by path.
BUILTIN_PACKS = OrderedDict([
    ('default', DEFAULT_PROFILE_PACK),
    ('confusable', CONFUSABLE_PROFILE_PACK),
    ('extended', EXTENDED_PROFILE_PACK),
])

EXPERIMENT_METHODS = ('mean', 'std', 'kurtosis', 'lbp', 'paas')

_POSITIVE_INT = {"type": "integer", "minimum": 1}

# JSON schema describing the structure of the experiment files
EXPERIMENT_FILE_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "JSON schema for polar-paas experiment files",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "description": {
            "type": "string",
            "description": "Short description of the experiment",
        },
        "profile_pack": {
            "type": "string",
            "description":
                "Name of a built-in profile pack ('default', 'confusable', "
                "'extended'), or path name of a profile pack file. Relative "
                "path names are relative to the directory of the experiment "
                "file",
        },
        "out_dir": {
            "type": "string",
            "description":
                "Output directory of the experiment, with the subdirectories "
                "'data', 'checkpoints' and 'report'. Relative path names are "
                "relative to the directory of the experiment file",
        },
        "dataset": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "width": _POSITIVE_INT,
                "height": _POSITIVE_INT,
                "count_per_profile": _POSITIVE_INT,
                "split_ratio": {"type": "number",
                                "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "seed": {"type": "integer"},
                "pattern": {"type": "string"},
                "demosaic": {"type": "string",
                             "enum": list(DEMOSAIC_METHODS)},
                "bits": {"type": "integer", "enum": [8, 16]},
            },
        },
        "train": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "margin": {"type": "number", "exclusiveMinimum": 0},
                "learning_rate": {"type": "number", "exclusiveMinimum": 0},
                "epochs": {"type": "integer", "minimum": 0},
                "batch_pairs": _POSITIVE_INT,
                "seed": {"type": "integer"},
                "input_side": _POSITIVE_INT,
                "resize_to": _POSITIVE_INT,
                "crop_to": _POSITIVE_INT,
                "horizontal_flip": {"type": "boolean"},
                "embedding_dim": _POSITIVE_INT,
                "conv_channels": {"type": "array", "minItems": 1,
                                  "items": _POSITIVE_INT},
                "conv_stride": _POSITIVE_INT,
                "hidden_units": _POSITIVE_INT,
            },
        },
        "svm": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "lambda": {"type": "number", "exclusiveMinimum": 0},
                "epochs": _POSITIVE_INT,
                "seed": {"type": "integer"},
            },
        },
        "channels": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "string", "enum": list(CHANNELS) + ['s0']},
        },
        "methods": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "string", "enum": list(EXPERIMENT_METHODS)},
        },
    },
}

_DATASET_DEFAULTS = OrderedDict([
    ('width', 64),
    ('height', 64),
    ('count_per_profile', 50),
    ('split_ratio', 0.8),
    ('seed', 0),
    ('pattern', str(DEFAULT_PATTERN)),
    ('demosaic', DEMOSAIC_BILINEAR),
    ('bits', 16),
])


class ExperimentConfig(object):
    """
    The settings of one experiment: the profile pack, the dataset
    parameters, the training hyperparameters of the embedding network and of
    the SVM, the channels and methods to evaluate, and the output directory.

    For the file format, see :data:`EXPERIMENT_FILE_SCHEMA`. All elements
    are optional.
    """

    def __init__(self, config_dict=None, filepath=None):
        """
        Parameters:

          config_dict (dict):
            Experiment in the format described by
            :data:`EXPERIMENT_FILE_SCHEMA`, or `None` for all defaults.

          filepath (:term:`unicode string`):
            Path name of the experiment file the dictionary was loaded from,
            or `None`. Relative paths in the experiment are relative to its
            directory, or to the current directory if `None`.

        Raises:
          ConfigFileFormatError: Invalid experiment.
        """
        self._filepath = os.path.abspath(filepath) if filepath else None
        name = self._filepath or '<dict>'
        data = _validate_experiment(
            copy.deepcopy(config_dict) if config_dict is not None else {},
            name)
        self._data = data

        dataset = OrderedDict(_DATASET_DEFAULTS)
        dataset.update(data.get('dataset', {}))
        self._dataset = dataset

        try:
            self._pattern = MosaicPattern.parse(dataset['pattern'])
            self._train_config = TrainConfig(**data.get('train', {}))
            svm = dict(data.get('svm', {}))
            if 'lambda' in svm:
                svm['lam'] = svm.pop('lambda')
            self._svm_config = SvmConfig(**svm)
        except ParameterError as exc:
            new_exc = ConfigFileFormatError(
                "Invalid value in experiment file {fn}: {exc}".
                format(fn=name, exc=exc))
            new_exc.__cause__ = None
            raise new_exc  # ConfigFileFormatError

        channels = [normalize_channel(c)
                    for c in data.get('channels', [CHANNELS[0]])]
        self._channels = list(OrderedDict.fromkeys(channels))
        self._methods = list(OrderedDict.fromkeys(
            data.get('methods', EXPERIMENT_METHODS)))

    @classmethod
    def from_file(cls, filepath):
        """
        Load an experiment file.

        Raises:
          ConfigFileOpenError: Error opening the file.
          ConfigFileFormatError: Invalid file content.
        """
        data = _load_yaml_file(filepath, 'experiment file')
        if data is None:
            data = {}
        return cls(data, filepath)

    def __repr__(self):
        return "ExperimentConfig(filepath={!r})".format(self._filepath)

    @property
    def filepath(self):
        """
        :term:`unicode string`: Absolute path name of the experiment file, or
        `None`.
        """
        return self._filepath

    @property
    def base_dir(self):
        """
        :term:`unicode string`: Directory relative paths are resolved
        against.
        """
        if self._filepath:
            return os.path.dirname(self._filepath)
        return os.getcwd()

    def _resolve(self, path):
        if os.path.isabs(path):
            return path
        return os.path.join(self.base_dir, path)

    @property
    def description(self):
        """
        :term:`unicode string`: Description of the experiment, or `None`.
        """
        return self._data.get('description', None)

    @property
    def profile_pack_ref(self):
        """
        :term:`unicode string`: The profile pack as specified: a built-in
        pack name or a path name. Defaults to 'default'.
        """
        return self._data.get('profile_pack', 'default')

    def profile_pack(self):
        """
        Load the profile pack of the experiment.

        Returns:
          ProfilePack: The pack.

        Raises:
          ConfigFileOpenError: Error opening the profile pack file.
          ConfigFileFormatError: Invalid profile pack.
        """
        ref = self.profile_pack_ref
        if ref in BUILTIN_PACKS:
            return ProfilePack(BUILTIN_PACKS[ref], None)
        return ProfilePack.from_file(self._resolve(ref))

    @property
    def out_dir(self):
        """
        :term:`unicode string`: Output directory of the experiment.
        """
        return self._resolve(self._data.get('out_dir', 'out'))

    @property
    def data_dir(self):
        """
        :term:`unicode string`: Directory of the synthetic dataset.
        """
        return os.path.join(self.out_dir, 'data')

    @property
    def checkpoint_dir(self):
        """
        :term:`unicode string`: Directory of the model checkpoints.
        """
        return os.path.join(self.out_dir, 'checkpoints')

    @property
    def report_dir(self):
        """
        :term:`unicode string`: Directory of the report CSV files.
        """
        return os.path.join(self.out_dir, 'report')

    @property
    def dims(self):
        """
        tuple(int, int): (width, height) of the synthetic images.
        """
        return (self._dataset['width'], self._dataset['height'])

    @property
    def count_per_profile(self):
        """
        int: Number of samples per material profile.
        """
        return self._dataset['count_per_profile']

    @property
    def split_ratio(self):
        """
        float: Fraction of the samples of each profile in the training split.
        """
        return self._dataset['split_ratio']

    @property
    def seed(self):
        """
        int: Seed of the dataset generation.
        """
        return self._dataset['seed']

    @property
    def pattern(self):
        """
        :class:`~polar_paas.MosaicPattern`: Sensor mosaic pattern.
        """
        return self._pattern

    @property
    def demosaic(self):
        """
        :term:`unicode string`: Demosaicing method.
        """
        return self._dataset['demosaic']

    @property
    def bits(self):
        """
        int: Bit depth of the PGM files.
        """
        return self._dataset['bits']

    @property
    def train_config(self):
        """
        :class:`~polar_paas.TrainConfig`: Hyperparameters of the embedding
        network.
        """
        return self._train_config

    @property
    def svm_config(self):
        """
        :class:`~polar_paas.SvmConfig`: Hyperparameters of the SVM.
        """
        return self._svm_config

    @property
    def channels(self):
        """
        list of string: Channels to train and evaluate on.
        """
        return list(self._channels)

    @property
    def methods(self):
        """
        list of string: Methods to evaluate.
        """
        return list(self._methods)

    def to_dict(self):
        """
        Return the effective experiment (defaults filled in) as an ordered
        dictionary in the experiment file format.
        """
        svm = self._svm_config.to_dict()
        data = OrderedDict()
        if self.description is not None:
            data['description'] = self.description
        data['profile_pack'] = self.profile_pack_ref
        data['out_dir'] = self._data.get('out_dir', 'out')
        data['dataset'] = OrderedDict(self._dataset)
        data['train'] = self._train_config.to_dict()
        data['svm'] = OrderedDict([('lambda', svm['lam']),
                                   ('epochs', svm['epochs']),
                                   ('seed', svm['seed'])])
        data['channels'] = self.channels
        data['methods'] = self.methods
        return data

    def replace(self, **kwargs):
        """
        Return a copy of the experiment with some top-level elements
        replaced, e.g. ``replace(out_dir='x', dataset={'seed': 7})``.
        Dictionary elements are merged into the existing ones.

        Raises:
          ConfigFileFormatError: Invalid result.
        """
        data = copy.deepcopy(self._data)
        for key, value in kwargs.items():
            if isinstance(value, dict):
                merged = dict(data.get(key, {}))
                merged.update(value)
                value = merged
            data[key] = value
        return ExperimentConfig(data, self._filepath)

    def write(self, filepath):
        """
        Write the effective experiment as YAML file.

        Raises:
          ConfigFileOpenError: Error writing the file.
        """
        try:
            with open(filepath, 'w', encoding='utf-8') as fp:
                yaml.dump(self.to_dict(), fp,
                          Dumper=yamlloader.ordereddict.SafeDumper,
                          default_flow_style=False, sort_keys=False)
        except (OSError, IOError) as exc:
            new_exc = ConfigFileOpenError(
                "Cannot write experiment file: {fn}: {exc}".
                format(fn=filepath, exc=exc))
            new_exc.__cause__ = None
            raise new_exc  # ConfigFileOpenError


def _validate_experiment(data, filepath):
    """
    Validate the format of an experiment.

    Returns:
      dict: The validated experiment.

    Raises:
      ConfigFileFormatError: Invalid experiment content
    """
    try:
        jsonschema.validate(data, EXPERIMENT_FILE_SCHEMA)
        # Raises jsonschema.exceptions.SchemaError if JSON schema is invalid
    except jsonschema.exceptions.ValidationError as exc:
        if exc.absolute_path:
            elem_str = "element '{}'". \
                format('.'.join(str(e) for e in exc.absolute_path))
        else:
            elem_str = 'top-level element'
        new_exc = ConfigFileFormatError(
            "Invalid format in experiment file {fn}: Validation "
            "failed on {elem}: {exc}".
            format(fn=filepath, elem=elem_str, exc=exc.message))
        new_exc.__cause__ = None
        raise new_exc  # ConfigFileFormatError
    return data
