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
Exceptions raised by the polar-paas package.
"""

__all__ = ['PaasException', 'DimensionError', 'ParameterError', 'DataError',
           'ImageFileOpenError', 'ImageFileFormatError',
           'ConfigFileOpenError', 'ConfigFileFormatError',
           'ManifestFileError', 'CheckpointFileError']


class PaasException(Exception):
    """
    Abstract base exception for errors raised by the polar-paas package.

    Derived from :exc:`py:Exception`.
    """
    pass


class DimensionError(PaasException, ValueError):
    """
    Exception indicating that an image, tensor or vector has dimensions that
    are invalid for the operation, or that do not match those of another
    operand.

    Derived from :exc:`PaasException` and :exc:`py:ValueError`.
    """
    pass


class ParameterError(PaasException, ValueError):
    """
    Exception indicating that a numeric or enumerated parameter is outside of
    its valid range.

    Derived from :exc:`PaasException` and :exc:`py:ValueError`.
    """
    pass


class DataError(PaasException):
    """
    Exception indicating that the input data cannot be used for the
    operation, for example because only one class is present or because a
    region has zero variance.

    Derived from :exc:`PaasException`.
    """
    pass


class ImageFileOpenError(PaasException):
    """
    Exception indicating that an image file was not found or cannot be
    accessed for reading or writing.

    Derived from :exc:`PaasException`.
    """
    pass


class ImageFileFormatError(PaasException):
    """
    Exception indicating that an image file is not a valid PGM or PFM file,
    for example because its header is malformed or its pixel data is
    truncated.

    Derived from :exc:`PaasException`.
    """
    pass


class ConfigFileOpenError(PaasException):
    """
    Exception indicating that a profile pack or experiment file was not found
    or cannot be accessed due to a permission error.

    Derived from :exc:`PaasException`.
    """
    pass


class ConfigFileFormatError(PaasException):
    """
    Exception indicating that an existing profile pack or experiment file has
    some issue with the format of its file content.

    Derived from :exc:`PaasException`.
    """
    pass


class ManifestFileError(PaasException):
    """
    Exception indicating that a dataset manifest cannot be read or written, or
    that its content is invalid.

    Derived from :exc:`PaasException`.
    """
    pass


class CheckpointFileError(PaasException):
    """
    Exception indicating that a model checkpoint cannot be read or written,
    or that it is not a valid checkpoint container of the expected kind.

    Derived from :exc:`PaasException`.
    """
    pass
