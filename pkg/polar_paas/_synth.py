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
Synthetic polarized face scenes with known ground truth: material fields,
Malus-model rendering through the four polarizers, the mosaic sensor, and
labeled dataset generation.
"""

import os
import math
import hashlib
import logging

import numpy as np

from ._exceptions import DimensionError, ParameterError, ImageFileOpenError
from ._polar import AngleImages, DEFAULT_PATTERN, DEMOSAIC_BILINEAR, \
    DOLP_NORMALIZED, MosaicFrame, mosaic_from_angles, demosaic, stokes, dolp
from ._image_io import write_pgm, write_pfm
from ._profile_file import THETA_UNIFORM
from ._manifest import CropRect, ManifestRecord, DatasetManifest, \
    SPLIT_TRAIN, SPLIT_TEST, MANIFEST_FILENAME
from ._parallel import ordered_map

__all__ = ['PolarizationField', 'smooth_noise', 'make_field',
           'render_angle_images', 'derive_seed', 'generate_dataset',
           'BACKGROUND_ALBEDO', 'BACKGROUND_RHO']

LOG = logging.getLogger(__name__)

BACKGROUND_ALBEDO = 0.05
BACKGROUND_RHO = 0.05

# Face outline geometry, relative to the image size
_FACE_SEMI_AXIS_X = 0.34
_FACE_SEMI_AXIS_Y = 0.42
_FACE_CENTER_JITTER = 0.03
_FACE_EDGE_WIDTH = 0.05

# Spatial variation of the angle of polarization in uniform-random mode,
# in degrees
_THETA_SPREAD = 30.0


class PolarizationField(object):
    """
    Ground truth linear polarization state per pixel of a synthetic scene.
    """

    def __init__(self, s0, rho, theta, face=None, crop=None):
        """
        Parameters:

          s0 (array-like): Total intensity in [0, 1].

          rho (array-like): Degree of linear polarization in [0, 1].

          theta (array-like): Angle of polarization in degrees, in [0, 180).

          face (array-like): Face weight in [0, 1] (1 inside the face outline,
            0 in the background), or `None`.

          crop (CropRect): Bounding box of the face, or `None`.

        Raises:
          DimensionError: Planes differ in shape.
          ParameterError: Values outside of their ranges.
        """
        s0 = np.asarray(s0, dtype=np.float64)
        rho = np.asarray(rho, dtype=np.float64)
        theta = np.asarray(theta, dtype=np.float64)
        if face is None:
            face = np.ones_like(s0)
        face = np.asarray(face, dtype=np.float64)
        if s0.ndim != 2 or not s0.shape == rho.shape == theta.shape == \
                face.shape:
            raise DimensionError(
                "Field planes must be 2-dimensional with equal shapes, but "
                "have shapes {}, {}, {}, {}".
                format(s0.shape, rho.shape, theta.shape, face.shape))
        for name, plane, lo, hi in (('s0', s0, 0.0, 1.0),
                                    ('rho', rho, 0.0, 1.0)):
            if not np.all((plane >= lo) & (plane <= hi)):
                raise ParameterError(
                    "Field plane {} has values outside of [{}, {}]".
                    format(name, lo, hi))
        if not np.all((theta >= 0.0) & (theta < 180.0)):
            raise ParameterError(
                "Field plane theta has values outside of [0, 180)")
        self.s0 = s0
        self.rho = rho
        self.theta = theta
        self.face = face
        self.crop = crop if crop is not None else \
            CropRect(0, 0, s0.shape[1], s0.shape[0])

    @property
    def shape(self):
        """
        tuple(int, int): (height, width) of the planes.
        """
        return self.s0.shape


def derive_seed(seed, key):
    """
    Derive a 63-bit seed from a base seed and a string key, independent of
    the Python hash seed.
    """
    digest = hashlib.sha256(
        "{}:{}".format(seed, key).encode('utf-8')).digest()
    return int.from_bytes(digest[:8], 'big') >> 1


def _lattice_matrix(n_out, spacing):
    """
    Bilinear interpolation matrix from lattice nodes at multiples of spacing
    onto pixel positions 0..n_out-1.
    """
    n_nodes = int(math.floor((n_out - 1) / spacing)) + 2
    pos = np.arange(n_out, dtype=np.float64) / spacing
    lo = np.floor(pos).astype(int)
    frac = pos - lo
    mat = np.zeros((n_out, n_nodes), dtype=np.float64)
    rows = np.arange(n_out)
    mat[rows, lo] += 1.0 - frac
    mat[rows, lo + 1] += frac
    return mat


def smooth_noise(rng, height, width, scale):
    """
    Value noise in [-1, 1]: a lattice of uniform random values with node
    spacing ``scale`` pixels, bilinearly interpolated onto the pixel grid.

    Parameters:

      rng (numpy.random.Generator): Source of the lattice values.

      height, width (int): Size of the plane.

      scale (float): Lattice spacing (correlation length) in pixels.

    Returns:
      numpy.ndarray: Plane of shape (height, width).
    """
    my = _lattice_matrix(height, scale)
    mx = _lattice_matrix(width, scale)
    nodes = rng.uniform(-1.0, 1.0, size=(my.shape[1], mx.shape[1]))
    return my.dot(nodes).dot(mx.T)


def make_field(profile, width, height, seed):
    """
    Create the ground truth polarization field of a synthetic face of the
    given material.

    The face is an axis-aligned ellipse with a soft outline, slightly
    jittered in position and size. Inside the face, the total intensity is
    a smooth albedo field in the profile's albedo range and the degree of
    linear polarization is ``clip(rho_mean + rho_spread * noise, 0, 1)``,
    plus the profile's relief term ``relief * (r^2 - 1/2)`` with r the
    normalized elliptical radius. The background has fixed albedo and degree
    of polarization. The angle of polarization is either fixed, or a random
    per-sample angle with smooth spatial variation.

    Parameters:

      profile (MaterialProfile): The material.

      width, height (int): Image size in pixels, even and at least 8.

      seed (int): Seed; identical arguments produce bit-identical fields.

    Returns:
      PolarizationField: The field, with face weight and face bounding box.

    Raises:
      DimensionError: Invalid image size.
    """
    if width < 8 or height < 8 or width % 2 or height % 2:
        raise DimensionError(
            "Field dimensions must be even and at least 8, but are {}x{} "
            "(width x height)".format(width, height))
    rng = np.random.default_rng(seed)
    scale = profile.texture_scale

    # Face geometry
    cx = width / 2.0 + rng.uniform(-1, 1) * _FACE_CENTER_JITTER * width
    cy = height / 2.0 + rng.uniform(-1, 1) * _FACE_CENTER_JITTER * height
    ax = _FACE_SEMI_AXIS_X * width * rng.uniform(0.95, 1.05)
    ay = _FACE_SEMI_AXIS_Y * height * rng.uniform(0.95, 1.05)
    ys = np.arange(height, dtype=np.float64)[:, None] + 0.5
    xs = np.arange(width, dtype=np.float64)[None, :] + 0.5
    r2 = ((xs - cx) / ax) ** 2 + ((ys - cy) / ay) ** 2
    edge = max(2.0, _FACE_EDGE_WIDTH * min(width, height)) / min(ax, ay)
    face = np.clip((1.0 - np.sqrt(r2)) / edge + 0.5, 0.0, 1.0)

    # Albedo and degree of linear polarization of the face
    lo, hi = profile.albedo_range
    albedo = lo + (hi - lo) * 0.5 * (smooth_noise(rng, height, width, scale)
                                     + 1.0)
    rho_face = profile.rho_mean + \
        profile.rho_spread * smooth_noise(rng, height, width, scale) + \
        profile.relief * (np.minimum(r2, 1.0) - 0.5)
    rho_face = np.clip(rho_face, 0.0, 1.0)

    s0 = BACKGROUND_ALBEDO + face * (albedo - BACKGROUND_ALBEDO)
    rho = BACKGROUND_RHO + face * (rho_face - BACKGROUND_RHO)

    # Angle of polarization
    mode = profile.theta_mode
    if mode == THETA_UNIFORM:
        theta0 = rng.uniform(0.0, 180.0)
        theta = theta0 + _THETA_SPREAD * smooth_noise(rng, height, width,
                                                      2 * scale)
        theta = np.mod(theta, 180.0)
    else:
        theta = np.full((height, width), float(mode) % 180.0)

    # Bounding box of the face including the outer half of the outline
    half = 0.5 * edge
    x0 = max(0, int(math.floor(cx - ax * (1 + half))))
    x1 = min(width, int(math.ceil(cx + ax * (1 + half))))
    y0 = max(0, int(math.floor(cy - ay * (1 + half))))
    y1 = min(height, int(math.ceil(cy + ay * (1 + half))))
    crop = CropRect(x0, y0, x1 - x0, y1 - y0)

    return PolarizationField(s0, rho, theta, face, crop)


def render_angle_images(field, noise_sigma=0.0, seed=0):
    """
    Render the intensities behind the four polarizers with the Malus model
    ``I(a) = S0/2 * (1 + rho * cos(2*(a - theta)))``, plus Gaussian sensor
    noise, clipped to [0, 1].

    With noise_sigma = 0 no randomness is used and the Stokes planes of the
    result recover the field exactly (up to rounding).

    Parameters:

      field (PolarizationField): The scene.

      noise_sigma (float): Standard deviation of the additive noise.

      seed (int): Seed of the noise.

    Returns:
      AngleImages: The four planes.

    Raises:
      ParameterError: Negative noise_sigma.
    """
    if noise_sigma < 0:
        raise ParameterError(
            "Noise sigma must not be negative, but is {!r}".
            format(noise_sigma))
    rng = np.random.default_rng(seed) if noise_sigma > 0 else None
    theta = np.radians(field.theta)
    planes = []
    for angle in (0, 45, 90, 135):
        plane = 0.5 * field.s0 * (
            1.0 + field.rho * np.cos(2.0 * (math.radians(angle) - theta)))
        if rng is not None:
            plane = plane + rng.normal(0.0, noise_sigma, size=plane.shape)
        planes.append(np.clip(plane, 0.0, 1.0))
    return AngleImages(*planes)


def _quantize(values, bits):
    maxval = 2 ** bits - 1
    return np.rint(np.clip(values, 0.0, 1.0) * maxval) / maxval


def _split_assignment(count, split_ratio, seed, profile_name):
    """
    Return a list of split names for the samples of one profile, with
    round(count * split_ratio) training samples at seeded random positions.
    """
    n_train = int(math.floor(count * split_ratio + 0.5))
    rng = np.random.default_rng(derive_seed(seed, 'split/' + profile_name))
    order = rng.permutation(count)
    splits = [SPLIT_TEST] * count
    for index in order[:n_train]:
        splits[index] = SPLIT_TRAIN
    return splits


class _SampleJob(object):
    # pylint: disable=too-few-public-methods
    """
    Parameters of the generation of one sample.
    """

    def __init__(self, profile, index, split, dims, seed, pattern,
                 method, bits, out_dir):
        self.profile = profile
        self.sample_id = "{}-{:04d}".format(profile.name, index)
        self.split = split
        self.dims = dims
        self.seed = derive_seed(seed, self.sample_id)
        self.pattern = pattern
        self.method = method
        self.bits = bits
        self.out_dir = out_dir


def _generate_sample(job):
    """
    Generate and write the files of one sample and return its manifest
    record dictionary.
    """
    width, height = job.dims
    field = make_field(job.profile, width, height, job.seed)
    angles = render_angle_images(field, job.profile.noise_sigma,
                                 derive_seed(job.seed, 'render'))
    raw = mosaic_from_angles(angles, job.pattern).values
    frame = MosaicFrame(_quantize(raw, job.bits), job.pattern)
    interpolated = demosaic(frame, job.method)
    st = stokes(interpolated)
    dolp_plane = dolp(st, DOLP_NORMALIZED).values

    files = {}
    for role in ('mosaic', 'i0', 'i45', 'i90', 'i135', 'dolp', 's0'):
        ext = 'pfm' if role in ('dolp', 's0') else 'pgm'
        files[role] = "samples/{}_{}.{}".format(job.sample_id, role, ext)

    def target(role):
        return os.path.join(job.out_dir, files[role])

    write_pgm(target('mosaic'), frame.values, job.bits)
    for angle in (0, 45, 90, 135):
        role = 'i{}'.format(angle)
        write_pgm(target(role), interpolated.plane(angle), job.bits)
    write_pfm(target('dolp'), dolp_plane)
    write_pfm(target('s0'), st.s0)

    return {
        'sample_id': job.sample_id,
        'label': job.profile.label,
        'material': job.profile.name,
        'files': files,
        'crop': list(field.crop),
        'seed': job.seed,
        'split': job.split,
    }


def generate_dataset(profiles, count_per_profile, dims, split_ratio, out_dir,
                     seed, pattern=DEFAULT_PATTERN, method=DEMOSAIC_BILINEAR,
                     bits=16, workers=None):
    """
    Generate a labeled synthetic dataset and write its manifest.

    For every profile, ``count_per_profile`` samples named
    ``<profile name>-<index>`` are rendered through the Malus model and the
    mosaic sensor. Per sample, the mosaic PGM, the four demosaicked angle
    PGMs, the DOLP PFM (normalized) and the total intensity PFM are written
    into ``<out_dir>/samples``, and the manifest into
    ``<out_dir>/manifest.jsonl``. Per profile, round(count * split_ratio)
    samples are assigned to the training split.

    The randomness of each sample derives only from (seed, sample_id), so
    the output does not depend on the number of workers.

    Parameters:

      profiles (list of MaterialProfile): The materials.

      count_per_profile (int): Number of samples per material, >= 1.

      dims (tuple(int, int)): (width, height) of the images.

      split_ratio (float): Training fraction, 0 < split_ratio < 1.

      out_dir (:term:`unicode string`): Output directory; created if
        missing.

      seed (int): Base seed.

      pattern (MosaicPattern): Sensor mosaic pattern.

      method (string): Demosaicing method.

      bits (int): Bit depth of the PGM files, 8 or 16.

      workers (int): Number of worker threads, or `None` for the
        ``PAAS_THREADS`` default.

    Returns:
      DatasetManifest: The manifest.

    Raises:
      ParameterError: Invalid count or split ratio.
      ImageFileOpenError: Output directory or files cannot be written.
      ManifestFileError: Manifest cannot be written.
    """
    if count_per_profile < 1:
        raise ParameterError(
            "Count per profile must be at least 1, but is {!r}".
            format(count_per_profile))
    if not 0 < split_ratio < 1:
        raise ParameterError(
            "Split ratio must be in (0, 1), but is {!r}".format(split_ratio))
    names = [p.name for p in profiles]
    if len(set(names)) != len(names):
        raise ParameterError(
            "Profile names must be unique, but are {!r}".format(names))
    try:
        os.makedirs(os.path.join(out_dir, 'samples'), exist_ok=True)
    except (OSError, IOError) as exc:
        new_exc = ImageFileOpenError(
            "Cannot create output directory: {d}: {exc}".
            format(d=out_dir, exc=exc))
        new_exc.__cause__ = None
        raise new_exc  # ImageFileOpenError

    jobs = []
    for profile in profiles:
        splits = _split_assignment(count_per_profile, split_ratio, seed,
                                   profile.name)
        for index in range(count_per_profile):
            jobs.append(_SampleJob(profile, index, splits[index], dims, seed,
                                   pattern, method, bits, out_dir))

    record_dicts = ordered_map(_generate_sample, jobs, workers)
    base_dir = os.path.abspath(out_dir)
    manifest = DatasetManifest(
        [ManifestRecord(d, base_dir) for d in record_dicts])
    manifest.save(os.path.join(out_dir, MANIFEST_FILENAME))
    for label, count in manifest.count_by_label().items():
        LOG.info("Generated %d samples with label %s", count, label)
    return manifest
