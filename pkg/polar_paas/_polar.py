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
Polarization math for division-of-focal-plane sensors: the 2x2 mosaic layout,
demosaicing, Stokes parameters and degree of linear polarization (DOLP).

All planes are :class:`numpy:numpy.ndarray` objects of dtype float64 with
shape (height, width). Intensities are in the range [0, 1].
"""

import numpy as np

from ._exceptions import DimensionError, ParameterError

__all__ = ['MosaicPattern', 'DEFAULT_PATTERN', 'ANGLES',
           'MosaicFrame', 'AngleImages', 'StokesImage', 'DolpImage',
           'DOLP_NORMALIZED', 'DOLP_PAPER', 'DOLP_MODES', 'DEFAULT_EPS',
           'DEMOSAIC_NEAREST', 'DEMOSAIC_BILINEAR', 'DEMOSAIC_METHODS',
           'mosaic_from_angles', 'demosaic', 'extract_angle_sites',
           'stokes', 'dolp']

#: Polarizer angles of a PFA sensor, in degrees.
ANGLES = (0, 45, 90, 135)

DOLP_NORMALIZED = 'normalized'
DOLP_PAPER = 'paper'
DOLP_MODES = (DOLP_NORMALIZED, DOLP_PAPER)

DEMOSAIC_NEAREST = 'nearest'
DEMOSAIC_BILINEAR = 'bilinear'
DEMOSAIC_METHODS = (DEMOSAIC_NEAREST, DEMOSAIC_BILINEAR)

#: Default guard against division by dark pixels, in [0,1] intensity units.
DEFAULT_EPS = 1e-6


class MosaicPattern(object):
    """
    The 2x2 assignment of polarizer angles to the positions of a super-pixel.

    The pattern is stored as a tuple of two rows of two angles, e.g.
    ``((0, 45), (90, 135))``: row 0 column 0 is the upper-left position.
    """

    def __init__(self, rows):
        """
        Parameters:

          rows (sequence of two sequences of two int):
            Angles in degrees per super-pixel position. Must be a bijection
            onto {0, 45, 90, 135}.

        Raises:
          ParameterError: Not a 2x2 bijection onto the four angles.
        """
        try:
            rows = tuple(tuple(int(a) for a in row) for row in rows)
        except (TypeError, ValueError):
            raise ParameterError(
                "Invalid mosaic pattern {!r}: not a 2x2 array of angles".
                format(rows))
        if len(rows) != 2 or any(len(row) != 2 for row in rows):
            raise ParameterError(
                "Invalid mosaic pattern {!r}: must have 2 rows of 2 angles".
                format(rows))
        if sorted(a for row in rows for a in row) != list(ANGLES):
            raise ParameterError(
                "Invalid mosaic pattern {!r}: must use each of the angles "
                "{} exactly once".format(rows, ANGLES))
        self._rows = rows

    @classmethod
    def parse(cls, text):
        """
        Create a pattern from its command line notation, e.g. ``"0,45;90,135"``
        (rows separated by ``;``, columns by ``,``).

        Raises:
          ParameterError: Malformed notation or not a bijection.
        """
        try:
            rows = [[int(a) for a in row.split(',')]
                    for row in text.strip().split(';')]
        except ValueError:
            raise ParameterError(
                "Invalid mosaic pattern notation {!r}: expected e.g. "
                "'0,45;90,135'".format(text))
        return cls(rows)

    @property
    def rows(self):
        """
        tuple of tuple of int: The two rows of the pattern.
        """
        return self._rows

    def angle_at(self, row, col):
        """
        Return the polarizer angle of the sensor pixel at (row, col).
        """
        return self._rows[row % 2][col % 2]

    def site_of(self, angle):
        """
        Return the (row, col) offset in {0,1}^2 at which the given angle is
        sampled.
        """
        for r in (0, 1):
            for c in (0, 1):
                if self._rows[r][c] == angle:
                    return r, c
        raise ParameterError("Angle {} is not part of the pattern".
                             format(angle))

    def __eq__(self, other):
        return isinstance(other, MosaicPattern) and self._rows == other._rows

    def __hash__(self):
        return hash(self._rows)

    def __str__(self):
        return ';'.join(','.join(str(a) for a in row) for row in self._rows)

    def __repr__(self):
        return "MosaicPattern({!r})".format(self._rows)


#: I0 upper-left, I45 upper-right, I90 lower-left, I135 lower-right.
DEFAULT_PATTERN = MosaicPattern(((0, 45), (90, 135)))


def _as_plane(values, name):
    plane = np.asarray(values, dtype=np.float64)
    if plane.ndim != 2:
        raise DimensionError(
            "Plane {} must be 2-dimensional, but has shape {}".
            format(name, plane.shape))
    return plane


class MosaicFrame(object):
    """
    A single-plane raw frame of a polarization filter array sensor, in which
    every 2x2 super-pixel records the four polarizer angles as assigned by a
    :class:`MosaicPattern`.
    """

    def __init__(self, values, pattern=DEFAULT_PATTERN):
        """
        Parameters:

          values (array-like): Intensity plane with even height and width
            of at least 2, values finite and in [0, 1].

          pattern (MosaicPattern): Angle assignment of the super-pixels.

        Raises:
          DimensionError: Not 2-dimensional, or odd or too small dimensions.
          ParameterError: Values outside of [0, 1] or not finite.
        """
        values = _as_plane(values, 'mosaic')
        height, width = values.shape
        if height < 2 or width < 2 or height % 2 or width % 2:
            raise DimensionError(
                "Mosaic frame dimensions must be even and at least 2, but "
                "are {}x{} (width x height)".format(width, height))
        if not np.all(np.isfinite(values)):
            raise ParameterError("Mosaic frame has non-finite values")
        if values.min() < 0.0 or values.max() > 1.0:
            raise ParameterError(
                "Mosaic frame values must be in [0, 1], but range from {} "
                "to {}".format(values.min(), values.max()))
        if not isinstance(pattern, MosaicPattern):
            pattern = MosaicPattern(pattern)
        self._values = values
        self._pattern = pattern

    @property
    def values(self):
        """
        :class:`numpy:numpy.ndarray`: The intensity plane.
        """
        return self._values

    @property
    def pattern(self):
        """
        :class:`MosaicPattern`: The angle assignment of the super-pixels.
        """
        return self._pattern

    @property
    def width(self):
        """
        int: Width in pixels.
        """
        return self._values.shape[1]

    @property
    def height(self):
        """
        int: Height in pixels.
        """
        return self._values.shape[0]


class AngleImages(object):
    """
    The four full-resolution intensity planes behind polarizers at 0, 45, 90
    and 135 degrees.
    """

    def __init__(self, i0, i45, i90, i135):
        """
        Parameters:

          i0, i45, i90, i135 (array-like): Intensity planes of identical
            shape, with finite nonnegative values.

        Raises:
          DimensionError: Planes are not 2-dimensional or differ in shape.
          ParameterError: Negative or non-finite values.
        """
        planes = []
        for name, plane in (('i0', i0), ('i45', i45), ('i90', i90),
                            ('i135', i135)):
            plane = _as_plane(plane, name)
            if not np.all(np.isfinite(plane)):
                raise ParameterError(
                    "Angle plane {} has non-finite values".format(name))
            if plane.min() < 0.0:
                raise ParameterError(
                    "Angle plane {} has negative values".format(name))
            planes.append(plane)
        shapes = set(p.shape for p in planes)
        if len(shapes) != 1:
            raise DimensionError(
                "Angle planes differ in shape: {}".
                format([p.shape for p in planes]))
        self._planes = dict(zip(ANGLES, planes))

    @property
    def i0(self):
        """
        :class:`numpy:numpy.ndarray`: Intensity behind the 0 degree polarizer.
        """
        return self._planes[0]

    @property
    def i45(self):
        """
        :class:`numpy:numpy.ndarray`: Intensity behind the 45 degree
        polarizer.
        """
        return self._planes[45]

    @property
    def i90(self):
        """
        :class:`numpy:numpy.ndarray`: Intensity behind the 90 degree
        polarizer.
        """
        return self._planes[90]

    @property
    def i135(self):
        """
        :class:`numpy:numpy.ndarray`: Intensity behind the 135 degree
        polarizer.
        """
        return self._planes[135]

    @property
    def shape(self):
        """
        tuple(int, int): (height, width) shared by the four planes.
        """
        return self._planes[0].shape

    def plane(self, angle):
        """
        Return the plane for a polarizer angle in degrees.
        """
        try:
            return self._planes[angle]
        except KeyError:
            new_exc = ParameterError(
                "Invalid polarizer angle {!r}; valid are {}".
                format(angle, ANGLES))
            new_exc.__cause__ = None
            raise new_exc  # ParameterError


class StokesImage(object):
    """
    Linear Stokes planes: total intensity S0 (= I), Q and U.

    Circular polarization (V) is not represented.
    """

    def __init__(self, s0, q, u):
        """
        Parameters:

          s0, q, u (array-like): Planes of identical shape.

        Raises:
          DimensionError: Planes are not 2-dimensional or differ in shape.
        """
        s0 = _as_plane(s0, 's0')
        q = _as_plane(q, 'q')
        u = _as_plane(u, 'u')
        if not s0.shape == q.shape == u.shape:
            raise DimensionError(
                "Stokes planes differ in shape: {}, {}, {}".
                format(s0.shape, q.shape, u.shape))
        self._s0 = s0
        self._q = q
        self._u = u

    @property
    def s0(self):
        """
        :class:`numpy:numpy.ndarray`: Total intensity.
        """
        return self._s0

    @property
    def q(self):
        """
        :class:`numpy:numpy.ndarray`: Q = I0 - I90.
        """
        return self._q

    @property
    def u(self):
        """
        :class:`numpy:numpy.ndarray`: U = I135 - I45.
        """
        return self._u

    @property
    def shape(self):
        """
        tuple(int, int): (height, width) shared by the planes.
        """
        return self._s0.shape


class DolpImage(object):
    """
    A degree-of-linear-polarization plane together with the formula it was
    computed with.
    """

    def __init__(self, values, mode=DOLP_NORMALIZED):
        self._values = _as_plane(values, 'dolp')
        self._mode = _check_dolp_mode(mode)

    @property
    def values(self):
        """
        :class:`numpy:numpy.ndarray`: The DOLP plane.
        """
        return self._values

    @property
    def mode(self):
        """
        string: One of :data:`DOLP_MODES`.
        """
        return self._mode


def _check_dolp_mode(mode):
    if mode == 'paper-literal':
        mode = DOLP_PAPER
    if mode not in DOLP_MODES:
        raise ParameterError(
            "Invalid DOLP mode {!r}; valid are {}".format(mode, DOLP_MODES))
    return mode


def mosaic_from_angles(angles, pattern=DEFAULT_PATTERN):
    """
    Sample four angle planes into a single mosaic frame, the way a PFA sensor
    records them: pixel (y, x) takes the value of the plane of angle
    ``pattern.angle_at(y, x)`` at (y, x).

    Parameters:

      angles (AngleImages): Planes with even dimensions. Values must be in
        [0, 1].

      pattern (MosaicPattern): Angle assignment of the super-pixels.

    Returns:
      MosaicFrame: The sampled frame.

    Raises:
      DimensionError: Odd dimensions.
    """
    if not isinstance(pattern, MosaicPattern):
        pattern = MosaicPattern(pattern)
    height, width = angles.shape
    if height % 2 or width % 2:
        raise DimensionError(
            "Angle planes must have even dimensions for mosaicking, but are "
            "{}x{} (width x height)".format(width, height))
    values = np.empty((height, width), dtype=np.float64)
    for r in (0, 1):
        for c in (0, 1):
            angle = pattern.rows[r][c]
            values[r::2, c::2] = angles.plane(angle)[r::2, c::2]
    return MosaicFrame(values, pattern)


def extract_angle_sites(frame):
    """
    Split a mosaic frame into four quarter-resolution planes holding only the
    native samples of each angle (no interpolation).

    Returns:
      dict: Mapping of angle in degrees to a plane of shape
      (height/2, width/2).
    """
    sites = {}
    for angle in ANGLES:
        r, c = frame.pattern.site_of(angle)
        sites[angle] = frame.values[r::2, c::2].copy()
    return sites


def _bilinear_matrix(n_out, n_src, offset):
    """
    Interpolation matrix of shape (n_out, n_src) that maps native samples at
    output positions ``offset + 2*i`` onto every output position, linearly
    between the two nearest native samples and by edge replication beyond
    the outermost ones.
    """
    pos = (np.arange(n_out, dtype=np.float64) - offset) / 2.0
    pos = np.clip(pos, 0.0, n_src - 1)
    lo = np.floor(pos).astype(int)
    hi = np.minimum(lo + 1, n_src - 1)
    frac = pos - lo
    mat = np.zeros((n_out, n_src), dtype=np.float64)
    rows = np.arange(n_out)
    np.add.at(mat, (rows, lo), 1.0 - frac)
    np.add.at(mat, (rows, hi), frac)
    return mat


def _nearest_index(n_out, n_src, offset):
    idx = (np.arange(n_out) - offset) // 2
    return np.clip(idx, 0, n_src - 1)


def demosaic(frame, method=DEMOSAIC_BILINEAR):
    """
    Interpolate the four full-resolution angle planes from a mosaic frame.

    At each angle's native sample sites the output equals the raw value for
    both methods. The bilinear method fills the missing sites by averaging
    the nearest native samples of that angle along each axis, with edge
    replication at the borders; the nearest method repeats the native sample
    of the super-pixel (replicated into the first row or column where the
    angle has no sample to the upper-left).

    Parameters:

      frame (MosaicFrame): The raw frame.

      method (string): One of :data:`DEMOSAIC_METHODS`.

    Returns:
      AngleImages: The interpolated planes.

    Raises:
      ParameterError: Invalid method.
    """
    if method not in DEMOSAIC_METHODS:
        raise ParameterError(
            "Invalid demosaic method {!r}; valid are {}".
            format(method, DEMOSAIC_METHODS))
    height, width = frame.height, frame.width
    planes = {}
    for angle, sub in extract_angle_sites(frame).items():
        r, c = frame.pattern.site_of(angle)
        n_rows, n_cols = sub.shape
        if method == DEMOSAIC_BILINEAR:
            my = _bilinear_matrix(height, n_rows, r)
            mx = _bilinear_matrix(width, n_cols, c)
            plane = my.dot(sub).dot(mx.T)
            # Native sites are copied so that they are exact, not just
            # exact up to rounding of the matrix products.
            plane[r::2, c::2] = sub
        else:
            iy = _nearest_index(height, n_rows, r)
            ix = _nearest_index(width, n_cols, c)
            plane = sub[np.ix_(iy, ix)]
        planes[angle] = plane
    return AngleImages(planes[0], planes[45], planes[90], planes[135])


def stokes(angles):
    """
    Compute the linear Stokes planes of four angle planes:
    S0 = I0 + I90, Q = I0 - I90, U = I135 - I45.

    Parameters:

      angles (AngleImages): The angle planes.

    Returns:
      StokesImage: The Stokes planes.
    """
    return StokesImage(angles.i0 + angles.i90,
                       angles.i0 - angles.i90,
                       angles.i135 - angles.i45)


def dolp(st, mode=DOLP_NORMALIZED, eps=DEFAULT_EPS):
    """
    Compute the degree of linear polarization.

    In normalized mode the value is ``sqrt(Q^2 + U^2) / max(S0, eps)``, which
    is in [0, 1] for physically valid light. In paper mode the value is
    ``sqrt((Q^2 + U^2) / max(S0, eps))``, with S0 inside the square root.
    Pixels with S0 < eps are 0 in both modes.

    Parameters:

      st (StokesImage): The Stokes planes.

      mode (string): One of :data:`DOLP_MODES` ('paper-literal' is accepted
        as an alias of 'paper').

      eps (float): Positive guard for dark pixels.

    Returns:
      DolpImage: The DOLP plane.

    Raises:
      ParameterError: Invalid mode or eps <= 0.
    """
    mode = _check_dolp_mode(mode)
    if not eps > 0:
        raise ParameterError(
            "DOLP eps must be positive, but is {!r}".format(eps))
    s0 = np.maximum(st.s0, eps)
    power = st.q * st.q + st.u * st.u
    if mode == DOLP_NORMALIZED:
        values = np.sqrt(power) / s0
    else:
        values = np.sqrt(power / s0)
    values = np.where(st.s0 < eps, 0.0, values)
    return DolpImage(values, mode)
