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
file_utils - Utilities for tests with files.
"""

import os
import hashlib
import contextlib
import testfixtures
import numpy as np

from polar_paas import ManifestRecord, DatasetManifest, write_pfm, \
    write_pgm, MANIFEST_FILENAME


@contextlib.contextmanager
def temp_file(filename, content):
    """
    Context manager that creates a file with the given content (str or bytes)
    in a temporary directory and yields its path name.
    """
    with testfixtures.TempDirectory() as tmp_dir:
        if isinstance(content, str):
            content = content.encode('utf-8')
        tmp_dir.write(filename, content)
        yield os.path.join(tmp_dir.path, filename)


def write_toy_dataset(out_dir, planes, labels, splits=None, crop=None):
    """
    Write a dataset whose DOLP and S0 planes are the given planes, with a
    manifest, and return the manifest.

    The mosaic and angle files of the samples are placeholders.
    """
    os.makedirs(os.path.join(out_dir, 'samples'), exist_ok=True)
    records = []
    for index, (plane, label) in enumerate(zip(planes, labels)):
        plane = np.asarray(plane, dtype=np.float64)
        sample_id = 'toy-{}'.format(index)
        files = {}
        for role in ('mosaic', 'i0', 'i45', 'i90', 'i135'):
            files[role] = 'samples/{}_{}.pgm'.format(sample_id, role)
            write_pgm(os.path.join(out_dir, files[role]),
                      np.clip(plane, 0, 1), 8)
        for role in ('dolp', 's0'):
            files[role] = 'samples/{}_{}.pfm'.format(sample_id, role)
            write_pfm(os.path.join(out_dir, files[role]), plane)
        height, width = plane.shape
        records.append(ManifestRecord({
            'sample_id': sample_id,
            'label': label,
            'material': label.split(':')[-1],
            'files': files,
            'crop': list(crop or (0, 0, width, height)),
            'seed': index,
            'split': splits[index] if splits else 'train',
        }, out_dir))
    manifest = DatasetManifest(records)
    manifest.save(os.path.join(out_dir, MANIFEST_FILENAME))
    return manifest


def tree_digests(top_dir):
    """
    Return a dictionary of SHA-256 digests of all files below a directory,
    by path name relative to the directory.
    """
    digests = {}
    for dirpath, _, filenames in os.walk(top_dir):
        for filename in filenames:
            filepath = os.path.join(dirpath, filename)
            with open(filepath, 'rb') as fp:
                digests[os.path.relpath(filepath, top_dir)] = \
                    hashlib.sha256(fp.read()).hexdigest()
    return digests
