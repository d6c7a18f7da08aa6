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
Linear support vector machine trained with the Pegasos stochastic
subgradient method on standardized features.
"""

import math
import logging
from collections import OrderedDict

import numpy as np

from ._exceptions import DataError, DimensionError, ParameterError, \
    CheckpointFileError
from ._checkpoint import save_checkpoint, load_checkpoint
from ._synth import derive_seed

__all__ = ['SvmConfig', 'SvmModel', 'train_svm', 'best_bias',
           'hinge_objective', 'save_svm', 'load_svm', 'MODEL_KIND_SVM']

LOG = logging.getLogger(__name__)

MODEL_KIND_SVM = 'svm'


class SvmConfig(object):
    """
    Hyperparameters of the SVM training.

    Attributes:

      lam (float): Regularization strength lambda, > 0.

      epochs (int): Number of passes over the training set, >= 1.

      seed (int): Seed for the sample order.
    """

    def __init__(self, lam=1e-3, epochs=100, seed=0):
        if not lam > 0:
            raise ParameterError(
                "SVM regularization lambda must be > 0, got {}".format(lam))
        if epochs < 1:
            raise ParameterError(
                "SVM epochs must be >= 1, got {}".format(epochs))
        self.lam = lam
        self.epochs = epochs
        self.seed = seed

    def __repr__(self):
        return "SvmConfig(lam={s.lam!r}, epochs={s.epochs!r}, " \
            "seed={s.seed!r})".format(s=self)

    def to_dict(self):
        return OrderedDict([('lam', self.lam), ('epochs', self.epochs),
                            ('seed', self.seed)])

    @classmethod
    def from_dict(cls, config_dict):
        return cls(**dict(config_dict))


def hinge_objective(weights, bias, features, labels, lam):
    """
    Regularized hinge loss objective
    lam/2 * |w|^2 + 1/n * sum(max(0, 1 - y * (w.x + b))).

    The features must already be standardized.
    """
    margins = labels * (features @ weights + bias)
    return float(0.5 * lam * np.dot(weights, weights) +
                 np.mean(np.maximum(0.0, 1.0 - margins)))


class SvmModel(object):
    """
    A linear decision function on standardized features.

    The decision value of a feature vector x is w . z + b with
    z = (x - mean) / scale, where scale is the per-dimension standard
    deviation of the training features and 1 for dimensions without
    variance.
    """

    def __init__(self, weights, bias, mean, scale, lam=None,
                 objective_history=None):
        self._weights = np.asarray(weights, dtype=np.float64)
        self._bias = float(bias)
        self._mean = np.asarray(mean, dtype=np.float64)
        self._scale = np.asarray(scale, dtype=np.float64)
        if not (self._weights.shape == self._mean.shape ==
                self._scale.shape) or self._weights.ndim != 1:
            raise ParameterError(
                "SVM weights, mean and scale must be vectors of the same "
                "length")
        self._lam = lam
        self.objective_history = list(objective_history or [])

    def __repr__(self):
        return "SvmModel(dim={}, bias={!r}, lam={!r})". \
            format(self.dim, self._bias, self._lam)

    @property
    def weights(self):
        """
        numpy.ndarray: Weight vector w in the standardized space.
        """
        return self._weights

    @property
    def bias(self):
        """
        float: Bias b.
        """
        return self._bias

    @property
    def mean(self):
        """
        numpy.ndarray: Per-dimension mean of the training features.
        """
        return self._mean

    @property
    def scale(self):
        """
        numpy.ndarray: Per-dimension divisor of the standardization.
        """
        return self._scale

    @property
    def lam(self):
        """
        float: Regularization strength the model was trained with.
        """
        return self._lam

    @property
    def dim(self):
        """
        int: Feature dimension.
        """
        return self._weights.size

    def standardize(self, features):
        """
        Return standardized features, for a vector or an (n, dim) array.

        Raises:
          DimensionError: Wrong feature dimension.
        """
        features = np.asarray(features, dtype=np.float64)
        if features.shape[-1:] != (self.dim,):
            raise DimensionError(
                "Feature dimension {} does not match the SVM dimension {}".
                format(features.shape[-1:], self.dim))
        return (features - self._mean) / self._scale

    def decision(self, features):
        """
        Return the decision value w . z + b of a feature vector (float), or
        of each row of an (n, dim) array (numpy.ndarray).
        """
        result = self.standardize(features) @ self._weights + self._bias
        if np.ndim(result) == 0:
            return float(result)
        return result

    def predict(self, features):
        """
        Return +1 where the decision value is >= 0 and -1 otherwise.
        """
        decision = np.asarray(self.decision(features))
        result = np.where(decision >= 0, 1, -1)
        if result.ndim == 0:
            return int(result)
        return result

    def objective(self, features, labels):
        """
        Return the training objective of the model on a labeled set of
        (unstandardized) features.
        """
        return hinge_objective(
            self._weights, self._bias, self.standardize(features),
            np.asarray(labels, dtype=np.float64), self._lam)


def _check_training_set(features, labels):
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    if features.ndim != 2 or features.shape[0] == 0:
        raise DataError(
            "SVM training needs a non-empty (n, dim) feature array, got "
            "shape {}".format(features.shape))
    if labels.shape != (features.shape[0],):
        raise DimensionError(
            "Got {} labels for {} feature vectors".
            format(labels.size, features.shape[0]))
    if not np.all(np.isin(labels, (-1, 1))):
        raise ParameterError("SVM labels must be +1 or -1")
    if len(np.unique(labels)) < 2:
        raise DataError(
            "SVM training needs samples of both classes")
    return features, labels.astype(np.float64)


def best_bias(scores, labels):
    """
    Return the bias that minimizes the mean hinge loss
    ``mean(max(0, 1 - y * (s + b)))`` for fixed scores s.

    The loss is convex and piecewise linear in b with breakpoints at
    ``y - s``, so its minimum is attained at a breakpoint. When the minimum
    is a flat segment, its midpoint is returned.

    Parameters:

      scores (array-like): Scores w.z of the samples.

      labels (array-like): +1 or -1 per sample; both classes must occur.

    Returns:
      float: The bias.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    # Positive samples are active for b < u, negative samples for b > v
    u = np.sort(1.0 - scores[labels > 0])
    v = np.sort(-1.0 - scores[labels < 0])
    cand = np.concatenate([u, v])
    u_suffix = np.concatenate([np.cumsum(u[::-1])[::-1], [0.0]])
    k_u = np.searchsorted(u, cand, side='right')
    v_prefix = np.concatenate([[0.0], np.cumsum(v)])
    k_v = np.searchsorted(v, cand, side='left')
    loss = (u_suffix[k_u] - cand * (len(u) - k_u)) + \
        (cand * k_v - v_prefix[k_v])
    best = loss.min()
    flat = cand[loss <= best + 1e-12 * (1.0 + abs(best))]
    return float(0.5 * (flat.min() + flat.max()))


def train_svm(features, labels, config=None):
    """
    Train a linear SVM with the Pegasos method.

    Features are standardized with the training mean and standard deviation
    (dimensions without variance are centered only). Then, for each epoch,
    the samples are visited in a seeded random order, and step t updates
    the weights with the step size 1 / (lam * t)::

        w <- (1 - 1/t) * w + eta * y * z    (if y * (w.z + b) < 1)
        w <- (1 - 1/t) * w                  (otherwise)

    followed by the projection of w onto the ball of radius 1/sqrt(lam).
    The unregularized bias is not stepped: it starts as the minimizer of the
    objective for w = 0 and is set to the minimizer for the current weights
    after each epoch (see :func:`best_bias`). The result is the last
    iterate or the average of the weight iterates of the second half of the
    training with its own best bias, whichever has the lower objective.

    The resolution of the weights is about 1 / (lam * steps), so small
    training sets with a small lambda need many epochs to come close to the
    optimum.

    Parameters:

      features (array-like): (n, dim) array of feature vectors.

      labels (array-like): +1 or -1 per feature vector.

      config (SvmConfig): Hyperparameters, or `None` for the defaults.

    Returns:
      SvmModel: The trained model, with the objective after each epoch in
      ``objective_history``.

    Raises:
      DataError: Empty training set or only one class.
      DimensionError: Number of labels does not match.
      ParameterError: Labels other than +1 and -1.
    """
    if config is None:
        config = SvmConfig()
    features, labels = _check_training_set(features, labels)
    n, dim = features.shape
    mean = features.mean(axis=0)
    scale = features.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    z = (features - mean) / scale

    lam = config.lam
    radius = 1.0 / math.sqrt(lam)
    rng = np.random.default_rng(derive_seed(config.seed, 'svm'))
    w = np.zeros(dim)
    b = best_bias(np.zeros(n), labels)
    w_sum = np.zeros(dim)
    n_avg = 0
    avg_from = (config.epochs // 2) * n + 1
    history = []
    t = 0
    for epoch in range(1, config.epochs + 1):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            zi = z[i]
            yi = labels[i]
            violated = yi * (np.dot(w, zi) + b) < 1.0
            w = (1.0 - 1.0 / t) * w
            if violated:
                w = w + eta * yi * zi
            norm = math.sqrt(np.dot(w, w))
            if norm > radius:
                w = w * (radius / norm)
            if t >= avg_from:
                w_sum += w
                n_avg += 1
        b = best_bias(z.dot(w), labels)
        history.append(hinge_objective(w, b, z, labels, lam))
        LOG.debug("SVM epoch %d/%d: objective %.6f", epoch, config.epochs,
                  history[-1])

    if n_avg:
        w_avg = w_sum / n_avg
        b_avg = best_bias(z.dot(w_avg), labels)
        if hinge_objective(w_avg, b_avg, z, labels, lam) < history[-1]:
            w, b = w_avg, b_avg
    model = SvmModel(w, b, mean, scale, lam, history)
    LOG.info("Trained SVM on %d samples of dimension %d: objective %.6f",
             n, dim, hinge_objective(w, b, z, labels, lam))
    return model


def save_svm(model, filepath, config=None):
    """
    Write an SVM to a checkpoint file.
    """
    params = OrderedDict([
        ('weights', model.weights),
        ('bias', np.array([model.bias])),
        ('mean', model.mean),
        ('scale', model.scale),
    ])
    architecture = OrderedDict([('dim', model.dim), ('lam', model.lam)])
    config_dict = config.to_dict() if config is not None else {}
    save_checkpoint(filepath, MODEL_KIND_SVM, architecture, params,
                    config_dict.get('seed', 0), config_dict)


def load_svm(filepath):
    """
    Read an SVM from a checkpoint file.

    Returns:
      SvmModel: The model.

    Raises:
      CheckpointFileError: Invalid checkpoint file.
    """
    data = load_checkpoint(filepath, MODEL_KIND_SVM)
    params = data['params']
    try:
        return SvmModel(params['weights'], params['bias'][0], params['mean'],
                        params['scale'], data['architecture']['lam'])
    except (KeyError, IndexError, ParameterError) as exc:
        new_exc = CheckpointFileError(
            "Invalid SVM in checkpoint file {fn}: {exc}".
            format(fn=filepath, exc=exc))
        new_exc.__cause__ = None
        raise new_exc  # CheckpointFileError
