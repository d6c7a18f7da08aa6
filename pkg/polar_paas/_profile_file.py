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
Support for material profiles and profile pack files.
"""

import os
import copy
import yaml
import jsonschema

from ._exceptions import ConfigFileOpenError, ConfigFileFormatError

__all__ = ['MaterialProfile', 'ProfilePack', 'LABELS', 'LABEL_GENUINE',
           'THETA_UNIFORM', 'DEFAULT_PROFILE_PACK', 'CONFUSABLE_PROFILE_PACK',
           'EXTENDED_PROFILE_PACK']

LABEL_GENUINE = 'genuine'

#: Valid material labels. Every label other than 'genuine' is an attack.
LABELS = (LABEL_GENUINE, 'attack:print', 'attack:screen', 'attack:mask')

THETA_UNIFORM = 'uniform-random'

# JSON schema describing the structure of profile pack files
PROFILE_PACK_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "JSON schema for polar-paas profile pack files",
    "definitions": {},
    "type": "object",
    "required": [
        "profiles",
    ],
    "additionalProperties": False,
    "properties": {
        "description": {
            "type": "string",
            "description": "Short description of the profile pack",
        },
        "profiles": {
            "type": "array",
            "description": "The material profiles in the pack",
            "minItems": 1,
            "items": {
                "type": "object",
                "description": "A material profile",
                "required": [
                    "name",
                    "label",
                    "rho_mean",
                ],
                "additionalProperties": False,
                "properties": {
                    "name": {
                        "type": "string",
                        "pattern": "^[a-zA-Z0-9_-]+$",
                        "description": "Identifier of the material",
                    },
                    "label": {
                        "type": "string",
                        "enum": list(LABELS),
                        "description": "Ground truth label of the material",
                    },
                    "rho_mean": {
                        "type": "number",
                        "minimum": 0,
                        "maximum": 1,
                        "description": "Mean degree of linear polarization",
                    },
                    "rho_spread": {
                        "type": "number",
                        "minimum": 0,
                        "description":
                            "Amplitude of the spatial variation of the "
                            "degree of linear polarization",
                    },
                    "theta_mode": {
                        "description":
                            "Angle of polarization: 'uniform-random', or "
                            "an object with a fixed angle in degrees",
                        "oneOf": [
                            {
                                "type": "string",
                                "enum": [THETA_UNIFORM],
                            },
                            {
                                "type": "object",
                                "required": ["fixed"],
                                "additionalProperties": False,
                                "properties": {
                                    "fixed": {
                                        "type": "number",
                                        "minimum": 0,
                                        "exclusiveMaximum": 180,
                                    },
                                },
                            },
                        ],
                    },
                    "albedo_range": {
                        "type": "array",
                        "minItems": 2,
                        "maxItems": 2,
                        "items": {
                            "type": "number",
                            "minimum": 0,
                            "maximum": 1,
                        },
                        "description": "Lower and upper albedo of the face",
                    },
                    "texture_scale": {
                        "type": "number",
                        "exclusiveMinimum": 0,
                        "description":
                            "Correlation length of the smooth noise, in "
                            "pixels",
                    },
                    "noise_sigma": {
                        "type": "number",
                        "minimum": 0,
                        "description":
                            "Standard deviation of additive sensor noise, "
                            "in intensity units",
                    },
                    "relief": {
                        "type": "number",
                        "minimum": -1,
                        "maximum": 1,
                        "description":
                            "Rise of the degree of linear polarization from "
                            "the face center toward its outline; negative "
                            "values let it fall toward the outline",
                    },
                },
            },
        },
    },
}

# Defaults for optional profile elements
_PROFILE_DEFAULTS = {
    'rho_spread': 0.0,
    'theta_mode': THETA_UNIFORM,
    'albedo_range': [0.35, 0.75],
    'texture_scale': 16.0,
    'noise_sigma': 0.01,
    'relief': 0.0,
}


class MaterialProfile(object):
    """
    A data object that describes the polarization behavior of one material
    (genuine skin or an attack instrument) for the synthetic scene generator.

    Objects of this class are normally returned by :class:`ProfilePack`, but
    can also be created directly from a profile dictionary.

    Example for a profile item in a profile pack file:

    .. code-block:: yaml

        - name: genuine
          label: genuine
          rho_mean: 0.15
          rho_spread: 0.04
          theta_mode: uniform-random
          albedo_range: [0.35, 0.75]
          texture_scale: 16
          noise_sigma: 0.01
          relief: 0.1
    """

    def __init__(self, profile_dict):
        """
        Parameters:

          profile_dict (dict):
            Dictionary with the properties of the profile item. Omitted
            optional properties are set to their defaults.

        Raises:
          ConfigFileFormatError: Invalid profile item.
        """
        data = dict(_PROFILE_DEFAULTS)
        data.update(profile_dict)
        try:
            jsonschema.validate(
                {'profiles': [data]}, PROFILE_PACK_SCHEMA)
        except jsonschema.exceptions.ValidationError as exc:
            new_exc = ConfigFileFormatError(
                "Invalid material profile {p!r}: {msg}".
                format(p=profile_dict.get('name'), msg=exc.message))
            new_exc.__cause__ = None
            raise new_exc  # ConfigFileFormatError
        lo, hi = data['albedo_range']
        if lo > hi:
            raise ConfigFileFormatError(
                "Invalid material profile {p!r}: albedo_range lower bound "
                "{lo} exceeds upper bound {hi}".
                format(p=data['name'], lo=lo, hi=hi))
        self._data = data

    def __repr__(self):
        return "MaterialProfile(" \
            "name={s.name!r}, " \
            "label={s.label!r}, " \
            "rho_mean={s.rho_mean!r}, " \
            "rho_spread={s.rho_spread!r}, " \
            "theta_mode={s.theta_mode!r}, " \
            "albedo_range={s.albedo_range!r}, " \
            "texture_scale={s.texture_scale!r}, " \
            "noise_sigma={s.noise_sigma!r}, " \
            "relief={s.relief!r})". \
            format(s=self)

    def __eq__(self, other):
        return isinstance(other, MaterialProfile) and \
            self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(self.name)

    @property
    def name(self):
        """
        :term:`unicode string`: Identifier of the material.
        """
        return self._data['name']

    @property
    def label(self):
        """
        :term:`unicode string`: Ground truth label, one of :data:`LABELS`.
        """
        return self._data['label']

    @property
    def is_genuine(self):
        """
        bool: Whether the material is genuine skin.
        """
        return self._data['label'] == LABEL_GENUINE

    @property
    def rho_mean(self):
        """
        float: Mean degree of linear polarization in [0, 1].
        """
        return float(self._data['rho_mean'])

    @property
    def rho_spread(self):
        """
        float: Amplitude of the smooth spatial variation of the degree of
        linear polarization.
        """
        return float(self._data['rho_spread'])

    @property
    def theta_mode(self):
        """
        :term:`unicode string` or float: 'uniform-random', or the fixed angle
        of polarization in degrees.
        """
        mode = self._data['theta_mode']
        if isinstance(mode, dict):
            return float(mode['fixed'])
        return mode

    @property
    def albedo_range(self):
        """
        tuple(float, float): Lower and upper albedo of the face region.
        """
        lo, hi = self._data['albedo_range']
        return float(lo), float(hi)

    @property
    def texture_scale(self):
        """
        float: Correlation length of the smooth noise, in pixels.
        """
        return float(self._data['texture_scale'])

    @property
    def noise_sigma(self):
        """
        float: Standard deviation of the additive sensor noise.
        """
        return float(self._data['noise_sigma'])

    @property
    def relief(self):
        """
        float: Rise of the degree of linear polarization from the face center
        toward its outline (0 for flat instruments, negative when it falls
        toward the outline).
        """
        return float(self._data['relief'])

    def to_dict(self):
        """
        Return the profile as a dictionary in the profile pack format,
        with all defaults filled in.
        """
        return copy.deepcopy(self._data)


class ProfilePack(object):
    """
    An ordered collection of material profiles, loaded from a profile pack
    file or created from a profile pack dictionary.

    For the file format, see :data:`PROFILE_PACK_SCHEMA`. JSON and YAML
    files are both accepted.
    """

    def __init__(self, pack_dict, filepath=None):
        """
        Parameters:

          pack_dict (dict):
            Profile pack in the format described by
            :data:`PROFILE_PACK_SCHEMA`.

          filepath (:term:`unicode string`):
            Path name of the file the pack was loaded from, or `None`.
            Only used in messages.

        Raises:
          ConfigFileFormatError: Invalid profile pack.
        """
        self._filepath = filepath
        data = _validate_profile_pack(pack_dict, filepath or '<dict>')
        self._description = data.get('description', None)
        self._profiles = [MaterialProfile(p) for p in data['profiles']]

    @classmethod
    def from_file(cls, filepath):
        """
        Load a profile pack file.

        Raises:
          ConfigFileOpenError: Error opening the file.
          ConfigFileFormatError: Invalid file content.
        """
        return cls(_load_yaml_file(filepath, 'profile pack file'),
                   os.path.abspath(filepath))

    @property
    def filepath(self):
        """
        :term:`unicode string`: Absolute path name of the profile pack file,
        or `None` if the pack was not loaded from a file.
        """
        return self._filepath

    @property
    def description(self):
        """
        :term:`unicode string`: Description of the pack, or `None`.
        """
        return self._description

    @property
    def profiles(self):
        """
        list of :class:`MaterialProfile`: The profiles in file order.
        """
        return list(self._profiles)

    @property
    def names(self):
        """
        list of string: Names of the profiles in file order.
        """
        return [p.name for p in self._profiles]

    def get_profile(self, name):
        """
        Get the profile with a given name.

        Raises:
          :exc:`py:KeyError`: Name not found
        """
        for profile in self._profiles:
            if profile.name == name:
                return profile
        new_exc = KeyError(
            "Material profile {!r} not found in profile pack {!r}".
            format(name, self._filepath))
        new_exc.__cause__ = None
        raise new_exc  # KeyError

    def to_dict(self):
        """
        Return the pack as a dictionary in the profile pack format.
        """
        data = {'profiles': [p.to_dict() for p in self._profiles]}
        if self._description is not None:
            data['description'] = self._description
        return data


def _load_yaml_file(filepath, kind):
    """
    Load a YAML (or JSON) file and return its content.

    Raises:
      ConfigFileOpenError: Error opening the file
      ConfigFileFormatError: Invalid YAML syntax
    """
    try:
        with open(filepath, 'r') as fp:
            return yaml.safe_load(fp)
    except (OSError, IOError) as exc:
        new_exc = ConfigFileOpenError(
            "Cannot open {k}: {fn}: {exc}".
            format(k=kind, fn=filepath, exc=exc))
        new_exc.__cause__ = None
        raise new_exc  # ConfigFileOpenError
    except yaml.YAMLError as exc:
        new_exc = ConfigFileFormatError(
            "Invalid YAML syntax in {k} {fn}: {exc}".
            format(k=kind, fn=filepath, exc=exc))
        new_exc.__cause__ = None
        raise new_exc  # ConfigFileFormatError


def _validate_profile_pack(data, filepath):
    """
    Validate the format of a profile pack and check that the profile names
    are unique.

    Returns:
      dict: The validated pack.

    Raises:
      ConfigFileFormatError: Invalid profile pack content
    """
    try:
        jsonschema.validate(data, PROFILE_PACK_SCHEMA)
        # Raises jsonschema.exceptions.SchemaError if JSON schema is invalid
    except jsonschema.exceptions.ValidationError as exc:
        if exc.absolute_path:
            elem_str = "element '{}'". \
                format('.'.join(str(e) for e in exc.absolute_path))
        else:
            elem_str = 'top-level element'
        new_exc = ConfigFileFormatError(
            "Invalid format in profile pack file {fn}: Validation "
            "failed on {elem}: {exc}".
            format(fn=filepath, elem=elem_str, exc=exc.message))
        new_exc.__cause__ = None
        raise new_exc  # ConfigFileFormatError

    names = [p['name'] for p in data['profiles']]
    for name in names:
        if names.count(name) > 1:
            raise ConfigFileFormatError(
                "Duplicate profile name '{n}' in profile pack file {fn}".
                format(n=name, fn=filepath))
    return data


#: Materials ordered as genuine < mask < print < screen by mean DOLP.
#: Values are synthetic design constants.
DEFAULT_PROFILE_PACK = {
    'description': "Genuine skin and one instrument per attack type",
    'profiles': [
        {'name': 'genuine', 'label': 'genuine', 'rho_mean': 0.15,
         'rho_spread': 0.04, 'texture_scale': 16, 'relief': 0.1},
        {'name': 'mask', 'label': 'attack:mask', 'rho_mean': 0.25,
         'rho_spread': 0.04, 'texture_scale': 12, 'relief': 0.05},
        {'name': 'print', 'label': 'attack:print', 'rho_mean': 0.45,
         'rho_spread': 0.05, 'texture_scale': 16},
        {'name': 'screen', 'label': 'attack:screen', 'rho_mean': 0.9,
         'rho_spread': 0.03, 'texture_scale': 16,
         'theta_mode': {'fixed': 45}},
    ],
}

#: A silicone mask that matches genuine skin in albedo, texture scale and
#: the distribution of DOLP values over the face. Its relief is inverted:
#: the DOLP falls toward the face outline instead of rising.
_SILICONE_MASK_PROFILE = {
    'name': 'silicone-mask', 'label': 'attack:mask', 'rho_mean': 0.15,
    'rho_spread': 0.04, 'texture_scale': 16, 'relief': -0.1}

CONFUSABLE_PROFILE_PACK = {
    'description': "Genuine skin against a skin-like silicone mask",
    'profiles': [
        DEFAULT_PROFILE_PACK['profiles'][0],
        _SILICONE_MASK_PROFILE,
    ],
}

#: All attack instruments of the capture protocol.
EXTENDED_PROFILE_PACK = {
    'description': "Genuine skin and all attack instruments",
    'profiles': [
        DEFAULT_PROFILE_PACK['profiles'][0],
        {'name': 'print-photo', 'label': 'attack:print', 'rho_mean': 0.45,
         'rho_spread': 0.05, 'texture_scale': 16},
        {'name': 'print-a4', 'label': 'attack:print', 'rho_mean': 0.3,
         'rho_spread': 0.06, 'texture_scale': 8, 'relief': 0.05},
        {'name': 'screen', 'label': 'attack:screen', 'rho_mean': 0.9,
         'rho_spread': 0.03, 'texture_scale': 16,
         'theta_mode': {'fixed': 45}},
        {'name': 'rubber-mask', 'label': 'attack:mask', 'rho_mean': 0.35,
         'rho_spread': 0.05, 'texture_scale': 12, 'relief': 0.05},
        _SILICONE_MASK_PROFILE,
    ],
}
