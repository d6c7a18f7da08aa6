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
Siamese embedding network: a small convolutional network mapping a square
single-channel image to an embedding vector, trained on image pairs with the
contrastive loss.

The network is implemented with numpy, with analytic backward passes.
"""

import csv
import math
import logging
from collections import OrderedDict

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ._exceptions import DimensionError, ParameterError, DataError, \
    CheckpointFileError
from ._checkpoint import save_checkpoint, load_checkpoint
from ._manifest import normalize_channel
from ._parallel import ordered_map
from ._synth import derive_seed

__all__ = ['TrainConfig', 'Conv2D', 'ReLU', 'GlobalAvgPool', 'Dense',
           'EmbeddingModel', 'AdamOptimizer', 'resize_area', 'preprocess',
           'embed', 'embed_images', 'pair_distance', 'contrastive_loss',
           'PairBatch', 'loss_gradients', 'sample_pairs', 'train_siamese',
           'train_siamese_on_images', 'write_loss_log', 'save_model',
           'load_model', 'MODEL_KIND_EMBEDDING']

LOG = logging.getLogger(__name__)

MODEL_KIND_EMBEDDING = 'embedding'


class TrainConfig(object):
    """
    Hyperparameters of the embedding network and of its training.

    Attributes:

      margin (float): Contrastive loss margin, > 0.

      learning_rate (float): Adam learning rate, > 0.

      epochs (int): Number of training epochs, >= 0.

      batch_pairs (int): Number of pairs per batch, >= 1.

      seed (int): Seed for weight initialization, pair sampling and
        augmentation.

      input_side (int): Side length of the square network input.

      resize_to (int): Side length the face crop is resized to before
        cropping.

      crop_to (int): Side length of the (random or center) crop taken from
        the resized face, <= resize_to.

      horizontal_flip (bool): Randomly mirror training images.

      embedding_dim (int): Length of the embedding vector.

      conv_channels (list of int): Output channels of the convolution
        layers.

      conv_stride (int): Stride of the convolution layers.

      hidden_units (int): Units of the hidden fully connected layer.
    """

    _DEFAULTS = OrderedDict([
        ('margin', 1.0),
        ('learning_rate', 1e-4),
        ('epochs', 150),
        ('batch_pairs', 16),
        ('seed', 0),
        ('input_side', 32),
        ('resize_to', 40),
        ('crop_to', 36),
        ('horizontal_flip', True),
        ('embedding_dim', 32),
        ('conv_channels', [8, 16, 32, 64]),
        ('conv_stride', 2),
        ('hidden_units', 64),
    ])

    def __init__(self, **kwargs):
        """
        Parameters:

          **kwargs: Attribute values; omitted attributes get their defaults.

        Raises:
          ParameterError: Unknown attribute or invalid value.
        """
        unknown = set(kwargs) - set(self._DEFAULTS)
        if unknown:
            raise ParameterError(
                "Unknown training parameters: {}".format(
                    ', '.join(sorted(unknown))))
        for name, default in self._DEFAULTS.items():
            value = kwargs.get(name, default)
            if isinstance(value, list):
                value = list(value)
            setattr(self, name, value)
        self._check()

    def _check(self):
        if not self.margin > 0:
            raise ParameterError(
                "Contrastive margin must be > 0, got {}".format(self.margin))
        if not self.learning_rate > 0:
            raise ParameterError(
                "Learning rate must be > 0, got {}".format(self.learning_rate))
        if self.epochs < 0:
            raise ParameterError(
                "Number of epochs must be >= 0, got {}".format(self.epochs))
        for name in ('batch_pairs', 'input_side', 'resize_to', 'crop_to',
                     'embedding_dim', 'conv_stride', 'hidden_units'):
            if getattr(self, name) < 1:
                raise ParameterError(
                    "Parameter {} must be >= 1, got {}".
                    format(name, getattr(self, name)))
        if self.crop_to > self.resize_to:
            raise ParameterError(
                "crop_to ({}) must not exceed resize_to ({})".
                format(self.crop_to, self.resize_to))
        if not self.conv_channels or min(self.conv_channels) < 1:
            raise ParameterError(
                "conv_channels must be a non-empty list of positive "
                "integers, got {!r}".format(self.conv_channels))

    def __repr__(self):
        items = ', '.join('{}={!r}'.format(n, getattr(self, n))
                          for n in self._DEFAULTS)
        return "TrainConfig({})".format(items)

    def to_dict(self):
        """
        Return the configuration as a JSON-serializable dictionary.
        """
        return OrderedDict(
            (n, list(getattr(self, n)) if n == 'conv_channels'
             else getattr(self, n))
            for n in self._DEFAULTS)

    @classmethod
    def from_dict(cls, config_dict):
        """
        Create a configuration from a dictionary as returned by
        :meth:`to_dict`.
        """
        return cls(**dict(config_dict))

    def architecture(self):
        """
        Return the architecture descriptor of the network this configuration
        describes.
        """
        return OrderedDict([
            ('input_side', self.input_side),
            ('in_channels', 1),
            ('conv_channels', list(self.conv_channels)),
            ('conv_stride', self.conv_stride),
            ('hidden_units', self.hidden_units),
            ('embedding_dim', self.embedding_dim),
        ])


def _he_uniform(rng, shape, fan_in):
    limit = math.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)


class Conv2D(object):
    """
    3x3 convolution with zero padding of 1 and a configurable stride.

    Input and output are arrays of shape (N, channels, height, width).
    """

    kernel = 3

    def __init__(self, in_channels, out_channels, stride):
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.stride = stride

    def param_shapes(self):
        k = self.kernel
        return OrderedDict([
            ('w', (self.out_channels, self.in_channels, k, k)),
            ('b', (self.out_channels,)),
        ])

    def init_params(self, rng):
        fan_in = self.in_channels * self.kernel * self.kernel
        return OrderedDict([
            ('w', _he_uniform(rng, self.param_shapes()['w'], fan_in)),
            ('b', np.zeros(self.out_channels)),
        ])

    def output_side(self, side):
        return (side - 1) // self.stride + 1

    def forward(self, params, x):
        s = self.stride
        xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
        # (N, C, Ho, Wo, 3, 3)
        win = sliding_window_view(xp, (3, 3), axis=(2, 3))[:, :, ::s, ::s]
        out = np.tensordot(win, params['w'], axes=([1, 4, 5], [1, 2, 3]))
        out = out.transpose(0, 3, 1, 2) + params['b'][None, :, None, None]
        return out, (x.shape, win)

    def backward(self, params, cache, dout):
        x_shape, win = cache
        s = self.stride
        n, c, h, w = x_shape
        ho, wo = dout.shape[2], dout.shape[3]
        grads = OrderedDict([
            ('w', np.tensordot(dout, win, axes=([0, 2, 3], [0, 2, 3]))),
            ('b', dout.sum(axis=(0, 2, 3))),
        ])
        # (N, Ho, Wo, C, 3, 3)
        dwin = np.tensordot(dout, params['w'], axes=([1], [0]))
        dxp = np.zeros((n, c, h + 2, w + 2))
        for i in range(3):
            for j in range(3):
                dxp[:, :, i:i + s * ho:s, j:j + s * wo:s] += \
                    dwin[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        return dxp[:, :, 1:-1, 1:-1], grads


class ReLU(object):
    """
    Rectified linear unit. The subgradient at 0 is 0.
    """

    def param_shapes(self):
        return OrderedDict()

    def init_params(self, rng):
        return OrderedDict()

    def forward(self, params, x):
        mask = x > 0
        return x * mask, mask

    def backward(self, params, cache, dout):
        return dout * cache, OrderedDict()


class GlobalAvgPool(object):
    """
    Average over the spatial dimensions: (N, C, H, W) to (N, C).
    """

    def param_shapes(self):
        return OrderedDict()

    def init_params(self, rng):
        return OrderedDict()

    def forward(self, params, x):
        return x.mean(axis=(2, 3)), x.shape

    def backward(self, params, cache, dout):
        n, c, h, w = cache
        dx = np.broadcast_to(dout[:, :, None, None] / (h * w), cache)
        return np.array(dx), OrderedDict()


class Dense(object):
    """
    Fully connected layer: (N, in_units) to (N, out_units).
    """

    def __init__(self, in_units, out_units):
        self.in_units = in_units
        self.out_units = out_units

    def param_shapes(self):
        return OrderedDict([
            ('w', (self.out_units, self.in_units)),
            ('b', (self.out_units,)),
        ])

    def init_params(self, rng):
        return OrderedDict([
            ('w', _he_uniform(rng, (self.out_units, self.in_units),
                              self.in_units)),
            ('b', np.zeros(self.out_units)),
        ])

    def forward(self, params, x):
        return x @ params['w'].T + params['b'], x

    def backward(self, params, cache, dout):
        grads = OrderedDict([
            ('w', dout.T @ cache),
            ('b', dout.sum(axis=0)),
        ])
        return dout @ params['w'], grads


def _build_layers(architecture):
    layers = []
    in_channels = architecture['in_channels']
    for index, out_channels in enumerate(architecture['conv_channels']):
        layers.append(('conv{}'.format(index),
                       Conv2D(in_channels, out_channels,
                              architecture['conv_stride'])))
        layers.append(('relu{}'.format(index), ReLU()))
        in_channels = out_channels
    layers.append(('pool', GlobalAvgPool()))
    layers.append(('fc0', Dense(in_channels, architecture['hidden_units'])))
    layers.append(('relu_fc0', ReLU()))
    layers.append(('fc1', Dense(architecture['hidden_units'],
                                architecture['embedding_dim'])))
    return layers


class EmbeddingModel(object):
    """
    The convolutional embedding network with its parameters.

    Layers: a stack of 3x3 convolutions with ReLU, global average pooling,
    a hidden fully connected layer with ReLU and the fully connected
    embedding layer.
    """

    def __init__(self, architecture, params=None, seed=0):
        """
        Parameters:

          architecture (dict): Architecture descriptor, see
            :meth:`TrainConfig.architecture`.

          params (OrderedDict of numpy.ndarray): Parameters by name
            (e.g. 'conv0.w'), or `None` for He-uniform initialization with
            zero biases.

          seed (int): Seed for the initialization.

        Raises:
          ParameterError: Parameters not matching the architecture.
        """
        self._architecture = OrderedDict(architecture)
        self._seed = seed
        self._layers = _build_layers(self._architecture)
        if params is None:
            rng = np.random.default_rng(derive_seed(seed, 'init'))
            params = OrderedDict()
            for name, layer in self._layers:
                for pname, value in layer.init_params(rng).items():
                    params['{}.{}'.format(name, pname)] = value
        self._params = OrderedDict()
        for name, layer in self._layers:
            for pname, shape in layer.param_shapes().items():
                key = '{}.{}'.format(name, pname)
                if key not in params or \
                        tuple(np.shape(params[key])) != tuple(shape):
                    raise ParameterError(
                        "Parameter {} missing or not of shape {}".
                        format(key, shape))
                self._params[key] = np.array(params[key], dtype=np.float64)
        self.loss_history = []

    def __repr__(self):
        return "EmbeddingModel(architecture={!r}, parameters={})". \
            format(dict(self._architecture), self.parameter_count)

    @property
    def architecture(self):
        """
        dict: The architecture descriptor.
        """
        return OrderedDict(self._architecture)

    @property
    def seed(self):
        """
        int: The seed the model was initialized with.
        """
        return self._seed

    @property
    def params(self):
        """
        OrderedDict of numpy.ndarray: The parameters by name, in layer order.
        This is the model's own storage.
        """
        return self._params

    @property
    def parameter_count(self):
        """
        int: Total number of scalar parameters.
        """
        return int(sum(v.size for v in self._params.values()))

    @property
    def input_shape(self):
        """
        tuple(int, int, int): Shape (channels, side, side) of one input.
        """
        side = self._architecture['input_side']
        return (self._architecture['in_channels'], side, side)

    @property
    def embedding_dim(self):
        """
        int: Length of the embedding vector.
        """
        return self._architecture['embedding_dim']

    def get_flat(self):
        """
        Return all parameters concatenated into one vector, in layer order.
        """
        return np.concatenate([v.ravel() for v in self._params.values()])

    def set_flat(self, flat):
        """
        Set all parameters from a vector as returned by :meth:`get_flat`.
        """
        offset = 0
        for key, value in self._params.items():
            self._params[key] = np.array(
                flat[offset:offset + value.size]).reshape(value.shape)
            offset += value.size

    def flatten_grads(self, grads):
        """
        Concatenate gradients by parameter name into one vector, in the order
        of :meth:`get_flat`.
        """
        return np.concatenate([grads[k].ravel() for k in self._params])

    def _layer_params(self, name):
        prefix = name + '.'
        return {k[len(prefix):]: v for k, v in self._params.items()
                if k.startswith(prefix)}

    def forward(self, batch):
        """
        Run the network on a batch of inputs.

        Parameters:

          batch (numpy.ndarray): Inputs of shape (N,) + :attr:`input_shape`.

        Returns:
          tuple(numpy.ndarray, list): Embeddings of shape
          (N, embedding_dim), and the layer caches for :meth:`backward`.

        Raises:
          DimensionError: Inputs of the wrong shape.
        """
        batch = np.asarray(batch, dtype=np.float64)
        if batch.ndim != 4 or batch.shape[1:] != self.input_shape:
            raise DimensionError(
                "Network input must have shape (N,) + {}, got {}".
                format(self.input_shape, batch.shape))
        caches = []
        x = batch
        for name, layer in self._layers:
            x, cache = layer.forward(self._layer_params(name), x)
            caches.append(cache)
        return x, caches

    def backward(self, caches, d_embeddings):
        """
        Backpropagate the gradient of a scalar with respect to the
        embeddings of a :meth:`forward` call.

        Returns:
          OrderedDict of numpy.ndarray: Gradients by parameter name.
        """
        grads = OrderedDict()
        dx = d_embeddings
        for (name, layer), cache in reversed(list(zip(self._layers, caches))):
            dx, layer_grads = layer.backward(
                self._layer_params(name), cache, dx)
            for pname, value in layer_grads.items():
                grads['{}.{}'.format(name, pname)] = value
        return OrderedDict((k, grads[k]) for k in self._params)


class AdamOptimizer(object):
    """
    Adam update rule on a flat parameter vector.
    """

    def __init__(self, learning_rate, beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self._m = None
        self._v = None
        self._t = 0

    @property
    def steps(self):
        """
        int: Number of updates performed.
        """
        return self._t

    def step(self, params, grads):
        """
        Return the parameters after one update with the given gradients.
        """
        if self._m is None:
            self._m = np.zeros_like(params)
            self._v = np.zeros_like(params)
        self._t += 1
        self._m = self.beta1 * self._m + (1.0 - self.beta1) * grads
        self._v = self.beta2 * self._v + (1.0 - self.beta2) * grads * grads
        m_hat = self._m / (1.0 - self.beta1 ** self._t)
        v_hat = self._v / (1.0 - self.beta2 ** self._t)
        return params - self.learning_rate * m_hat / \
            (np.sqrt(v_hat) + self.epsilon)


def _area_matrix(n_in, n_out):
    # Row k: overlap of input pixel j with the output interval of pixel k,
    # normalized by the interval length.
    edges = np.arange(n_out + 1) * n_in / n_out
    lo = np.maximum(edges[:-1, None], np.arange(n_in)[None, :])
    hi = np.minimum(edges[1:, None], np.arange(n_in)[None, :] + 1)
    return np.clip(hi - lo, 0.0, None) * (n_out / n_in)


def resize_area(plane, height, width):
    """
    Resize a plane by area averaging: each output pixel is the mean of the
    input area it covers, with fractional pixels weighted by their overlap.

    Raises:
      DimensionError: Empty input or output.
    """
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2 or plane.size == 0:
        raise DimensionError(
            "Cannot resize a plane of shape {}".format(plane.shape))
    if height < 1 or width < 1:
        raise DimensionError(
            "Invalid target size {}x{} (width x height)".
            format(width, height))
    rows = _area_matrix(plane.shape[0], height)
    cols = _area_matrix(plane.shape[1], width)
    return rows @ plane @ cols.T


def preprocess(image, crop, config, seed=0, training=False):
    """
    Turn an image into a network input: cut out the face crop, resize it to
    resize_to x resize_to, take a crop_to x crop_to crop (random in
    training, centered otherwise), optionally mirror it (training only) and
    resize it to the network input side.

    In evaluation mode, a face crop that already has the network input size
    is passed through unchanged.

    Parameters:

      image (array-like): 2-dimensional plane.

      crop (CropRect): Face crop rectangle.

      config (TrainConfig): Preprocessing sizes.

      seed (int): Seed for the random crop and flip.

      training (bool): Apply random augmentation.

    Returns:
      numpy.ndarray: Array of shape (1, input_side, input_side).

    Raises:
      DimensionError: Crop rectangle empty or outside of the image.
    """
    face = crop.apply(np.asarray(image, dtype=np.float64))
    if not training and face.shape == (config.input_side, config.input_side):
        return face[None, :, :].copy()
    face = resize_area(face, config.resize_to, config.resize_to)
    slack = config.resize_to - config.crop_to
    if training:
        rng = np.random.default_rng(seed)
        oy, ox = (int(v) for v in rng.integers(0, slack + 1, size=2))
        flip = bool(config.horizontal_flip and rng.random() < 0.5)
    else:
        oy = ox = slack // 2
        flip = False
    face = face[oy:oy + config.crop_to, ox:ox + config.crop_to]
    if flip:
        face = face[:, ::-1]
    face = resize_area(face, config.input_side, config.input_side)
    return face[None, :, :]


def embed(model, tensor):
    """
    Return the embedding vector of one preprocessed input.

    Parameters:

      model (EmbeddingModel): The network.

      tensor (array-like): Input of shape (side, side) or (1, side, side).

    Raises:
      DimensionError: Input shape does not match the network.
    """
    tensor = np.asarray(tensor, dtype=np.float64)
    if tensor.ndim == 2:
        tensor = tensor[None, :, :]
    if tensor.shape != model.input_shape:
        raise DimensionError(
            "Network input must have shape {}, got {}".
            format(model.input_shape, tensor.shape))
    embeddings, _ = model.forward(tensor[None])
    return embeddings[0]


def embed_images(model, tensors, chunk=64):
    """
    Return the embeddings of a list of preprocessed inputs as an array of
    shape (N, embedding_dim). Chunks are processed in worker threads.
    """
    tensors = list(tensors)
    if not tensors:
        return np.zeros((0, model.embedding_dim))
    chunks = [np.stack(tensors[i:i + chunk])
              for i in range(0, len(tensors), chunk)]
    results = ordered_map(lambda b: model.forward(b)[0], chunks)
    return np.concatenate(results, axis=0)


def pair_distance(e1, e2):
    """
    Euclidean distance between two embeddings.

    Raises:
      DimensionError: The embeddings differ in length.
    """
    e1 = np.asarray(e1, dtype=np.float64)
    e2 = np.asarray(e2, dtype=np.float64)
    if e1.shape != e2.shape:
        raise DimensionError(
            "Embeddings must have the same shape, got {} and {}".
            format(e1.shape, e2.shape))
    diff = e1 - e2
    return float(np.sqrt(np.sum(diff * diff)))


def _check_margin(margin):
    if not margin > 0:
        raise ParameterError(
            "Contrastive margin must be > 0, got {}".format(margin))


def contrastive_loss(pairs, margin):
    """
    Contrastive loss of a batch of pairs:
    1/(2N) * sum(y*S + (1-y)*max(margin-S, 0)), where S is the distance of a
    pair and y is 1 for same-class pairs and 0 otherwise.

    Parameters:

      pairs (iterable of tuple(float, int)): (S, y) per pair.

      margin (float): Margin, > 0.

    Raises:
      ParameterError: Empty batch or invalid margin.
    """
    _check_margin(margin)
    pairs = list(pairs)
    if not pairs:
        raise ParameterError("Contrastive loss of an empty batch")
    dist = np.array([p[0] for p in pairs], dtype=np.float64)
    same = np.array([p[1] for p in pairs], dtype=np.float64)
    terms = same * dist + (1.0 - same) * np.maximum(margin - dist, 0.0)
    return float(np.sum(terms) / (2 * len(pairs)))


class PairBatch(object):
    """
    A batch of input pairs for the contrastive loss, with the same-class
    flag of each pair.
    """

    def __init__(self, x1, x2, same):
        """
        Parameters:

          x1, x2 (array-like): First and second inputs of the pairs, each of
            shape (N, channels, side, side).

          same (array-like): 1 for same-class pairs, 0 otherwise.

        Raises:
          ParameterError: Empty batch, or flags other than 0 and 1.
          DimensionError: Inputs of different shapes, or a number of flags
            that differs from the number of pairs.
        """
        x1 = np.asarray(x1, dtype=np.float64)
        x2 = np.asarray(x2, dtype=np.float64)
        same = np.asarray(same, dtype=np.float64).reshape(-1)
        if same.size == 0:
            raise ParameterError("Pair batch must not be empty")
        if x1.shape != x2.shape or x1.ndim != 4 or len(x1) != same.size:
            raise DimensionError(
                "Pair batch inputs must have equal shapes (N, channels, "
                "side, side) with N = {} pairs, got {} and {}".
                format(same.size, x1.shape, x2.shape))
        if not np.all((same == 0) | (same == 1)):
            raise ParameterError(
                "Pair labels must be 0 or 1, got {}".format(same.tolist()))
        self.x1 = x1
        self.x2 = x2
        self.same = same

    @classmethod
    def from_pairs(cls, tensors, pairs):
        """
        Build a batch from an array of inputs and index pairs as returned by
        :func:`sample_pairs`.
        """
        tensors = np.asarray(tensors, dtype=np.float64)
        return cls(tensors[[p[0] for p in pairs]],
                   tensors[[p[1] for p in pairs]],
                   [p[2] for p in pairs])

    def __len__(self):
        return self.same.size

    def __repr__(self):
        return "PairBatch(pairs={}, same={})".format(
            len(self), int(self.same.sum()))


def loss_gradients(model, batch, margin):
    """
    Contrastive loss of a batch of input pairs and its gradient with respect
    to the model parameters.

    The subgradient of max(margin-S, 0) at S = margin is 0, and the gradient
    of S with respect to the embeddings is 0 when S = 0.

    Parameters:

      model (EmbeddingModel): The network.

      batch (PairBatch): The pairs, with inputs of shape model.input_shape.

      margin (float): Margin, > 0.

    Returns:
      tuple(float, OrderedDict): Loss and gradients by parameter name.

    Raises:
      ParameterError: Invalid margin.
      DimensionError: Inputs not matching the network.
    """
    _check_margin(margin)
    same = batch.same
    n = len(batch)
    embeddings, caches = model.forward(
        np.concatenate([batch.x1, batch.x2], axis=0))
    diff = embeddings[:n] - embeddings[n:]
    dist = np.sqrt(np.sum(diff * diff, axis=1))
    loss = contrastive_loss(zip(dist, same), margin)

    d_dist = (same - (1.0 - same) * (dist < margin)) / (2 * n)
    safe = np.where(dist > 0, dist, 1.0)
    d_e1 = np.where((dist > 0)[:, None],
                    (d_dist / safe)[:, None] * diff, 0.0)
    grads = model.backward(caches, np.concatenate([d_e1, -d_e1], axis=0))
    return loss, grads


def sample_pairs(classes, count, rng):
    """
    Sample a balanced batch of index pairs: the first half of the pairs are
    same-class pairs, the rest different-class pairs.

    A same-class pair uses two distinct samples when its class has more than
    one sample.

    Parameters:

      classes (list): Class of each sample.

      count (int): Number of pairs.

      rng (numpy.random.Generator): Random generator.

    Returns:
      list of tuple(int, int, int): (i, j, y) with y 1 for same-class pairs.

    Raises:
      DataError: Fewer than two classes.
    """
    classes = np.asarray(classes)
    if len(np.unique(classes)) < 2:
        raise DataError(
            "Pair sampling needs samples of at least two classes")
    n_same = (count + 1) // 2
    pairs = []
    for k in range(count):
        i = int(rng.integers(len(classes)))
        if k < n_same:
            candidates = np.flatnonzero(classes == classes[i])
            if len(candidates) > 1:
                candidates = candidates[candidates != i]
            y = 1
        else:
            candidates = np.flatnonzero(classes != classes[i])
            y = 0
        j = int(candidates[rng.integers(len(candidates))])
        pairs.append((i, j, y))
    return pairs


def train_siamese_on_images(images, crops, classes, config):
    """
    Train an embedding network on in-memory images.

    In each epoch the images are augmented once, and ceil(N / batch_pairs)
    balanced batches of batch_pairs pairs are sampled and applied with one
    Adam update each. The loss of an epoch is the mean of its batch losses.

    Parameters:

      images (list of numpy.ndarray): Planes of the training samples.

      crops (list of CropRect): Face crop rectangle of each sample.

      classes (list): Class of each sample (e.g. +1 genuine, -1 attack).

      config (TrainConfig): Hyperparameters.

    Returns:
      EmbeddingModel: The trained network, with its loss history in
      ``loss_history`` as list of (epoch, loss).

    Raises:
      DataError: Fewer than two classes.
      DimensionError: Invalid crop rectangle.
    """
    if len(set(classes)) < 2:
        raise DataError(
            "Training needs samples of at least two classes")
    model = EmbeddingModel(config.architecture(), seed=config.seed)
    LOG.info("Training embedding network with %d parameters on %d images "
             "for %d epochs", model.parameter_count, len(images),
             config.epochs)
    optimizer = AdamOptimizer(config.learning_rate)
    pair_rng = np.random.default_rng(derive_seed(config.seed, 'pairs'))
    n_batches = max(1, int(math.ceil(len(images) / config.batch_pairs)))
    indexes = list(range(len(images)))

    for epoch in range(1, config.epochs + 1):

        def augment(i, epoch=epoch):
            return preprocess(
                images[i], crops[i], config,
                seed=derive_seed(config.seed,
                                 'augment/{}/{}'.format(epoch, i)),
                training=True)

        tensors = np.stack(ordered_map(augment, indexes))
        batch_losses = []
        for _ in range(n_batches):
            pairs = sample_pairs(classes, config.batch_pairs, pair_rng)
            loss, grads = loss_gradients(
                model, PairBatch.from_pairs(tensors, pairs), config.margin)
            model.set_flat(optimizer.step(model.get_flat(),
                                          model.flatten_grads(grads)))
            batch_losses.append(loss)
        epoch_loss = float(np.mean(batch_losses))
        model.loss_history.append((epoch, epoch_loss))
        LOG.info("Epoch %d/%d: loss %.6f", epoch, config.epochs, epoch_loss)
    return model


def train_siamese(manifest, config, channel='dolp'):
    """
    Train an embedding network on the samples of a manifest.

    Parameters:

      manifest (DatasetManifest): Training samples, with labels of both
        binary classes.

      config (TrainConfig): Hyperparameters.

      channel (string): 'dolp' or 'gray'.

    Returns:
      EmbeddingModel: The trained network.

    Raises:
      DataError: Samples of only one binary class.
      ParameterError: Unknown channel.
    """
    channel = normalize_channel(channel)
    records = manifest.records
    if len(set(r.binary_label for r in records)) < 2:
        raise DataError(
            "Training manifest must contain genuine and attack samples")
    images = ordered_map(lambda r: r.load_channel(channel), records)
    return train_siamese_on_images(
        images, [r.crop for r in records], [r.binary_label for r in records],
        config)


def write_loss_log(filepath, loss_history):
    """
    Write a loss history as CSV file with columns epoch,loss.
    """
    with open(filepath, 'w', encoding='utf-8', newline='') as fp:
        writer = csv.writer(fp, lineterminator='\n')
        writer.writerow(['epoch', 'loss'])
        for epoch, loss in loss_history:
            writer.writerow([epoch, repr(float(loss))])


def save_model(model, filepath, config=None):
    """
    Write an embedding network to a checkpoint file.

    Parameters:

      model (EmbeddingModel): The network.

      filepath (:term:`unicode string`): Path name of the checkpoint file.

      config (TrainConfig): Training configuration to store with it, or
        `None`.
    """
    save_checkpoint(
        filepath, MODEL_KIND_EMBEDDING, model.architecture, model.params,
        model.seed, config.to_dict() if config is not None else {})


def load_model(filepath):
    """
    Read an embedding network from a checkpoint file.

    Returns:
      tuple(EmbeddingModel, TrainConfig): The network and its training
      configuration (`None` if not stored).

    Raises:
      CheckpointFileError: Invalid checkpoint file.
    """
    data = load_checkpoint(filepath, MODEL_KIND_EMBEDDING)
    try:
        model = EmbeddingModel(data['architecture'], data['params'],
                               data['seed'])
        config = TrainConfig.from_dict(data['config']) \
            if data['config'] else None
    except (ParameterError, KeyError, TypeError) as exc:
        new_exc = CheckpointFileError(
            "Invalid embedding model in checkpoint file {fn}: {exc}".
            format(fn=filepath, exc=exc))
        new_exc.__cause__ = None
        raise new_exc  # CheckpointFileError
    return model, config
