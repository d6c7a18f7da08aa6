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
Test the _embed_net.py module.
"""

import os
import csv
from collections import OrderedDict
import numpy as np
import pytest
from testfixtures import TempDirectory

from polar_paas import TrainConfig, Conv2D, ReLU, GlobalAvgPool, Dense, \
    EmbeddingModel, AdamOptimizer, CropRect, resize_area, preprocess, \
    embed, embed_images, pair_distance, contrastive_loss, PairBatch, \
    loss_gradients, sample_pairs, train_siamese, train_siamese_on_images, \
    write_loss_log, save_model, load_model, save_checkpoint, \
    DatasetManifest, ParameterError, DimensionError, DataError, \
    CheckpointFileError

from ..utils.simplified_test_function import simplified_test_function
from ..utils.file_utils import write_toy_dataset

FD_STEP = 1e-5
FD_TOLERANCE = 1e-4


def small_config(**kwargs):
    """
    Training configuration of a model with about 100 parameters.
    """
    data = dict(input_side=6, resize_to=6, crop_to=6, conv_channels=[2, 3],
                conv_stride=2, hidden_units=4, embedding_dim=3,
                batch_pairs=4, epochs=2, learning_rate=5e-3)
    data.update(kwargs)
    return TrainConfig(**data)


def relative_error(actual, expected):
    """
    Norm-wise relative error of two arrays.
    """
    actual = np.ravel(actual)
    expected = np.ravel(expected)
    scale = max(np.linalg.norm(actual), np.linalg.norm(expected), 1e-12)
    return np.linalg.norm(actual - expected) / scale


def numeric_gradient(func, values):
    """
    Central finite-difference gradient of a scalar function of an array.
    """
    values = np.array(values, dtype=np.float64)
    grad = np.zeros_like(values)
    flat = values.ravel()
    gflat = grad.ravel()
    for k in range(flat.size):
        orig = flat[k]
        flat[k] = orig + FD_STEP
        plus = func(values)
        flat[k] = orig - FD_STEP
        minus = func(values)
        flat[k] = orig
        gflat[k] = (plus - minus) / (2 * FD_STEP)
    return grad


def check_layer(layer, x_shape, seed=0):
    """
    Compare the analytic input and parameter gradients of a layer with
    finite differences of sum(weights * output).
    """
    rng = np.random.default_rng(seed)
    params = layer.init_params(rng)
    for name in params:
        params[name] = params[name] + rng.normal(0, 0.1, params[name].shape)
    x = rng.normal(0, 1, x_shape)
    out, cache = layer.forward(params, x)
    weights = rng.normal(0, 1, out.shape)
    dx, grads = layer.backward(params, cache, weights)

    def objective_x(xv):
        return float(np.sum(layer.forward(params, xv)[0] * weights))

    assert relative_error(dx, numeric_gradient(objective_x, x)) <= \
        FD_TOLERANCE
    for name, value in params.items():

        def objective_p(pv, name=name):
            p = OrderedDict(params)
            p[name] = pv
            return float(np.sum(layer.forward(p, x)[0] * weights))

        assert relative_error(grads[name],
                              numeric_gradient(objective_p, value)) <= \
            FD_TOLERANCE


TESTCASES_LAYER_GRADIENTS = [

    # Testcases for the gradients of the layers

    # Each list item is a testcase tuple with these items:
    # * desc: Short testcase description.
    # * kwargs: Keyword arguments for the test function:
    #   * layer: The layer object.
    #   * x_shape: Shape of the input.
    # * exp_exc_types: Expected exception type(s), or None.
    # * exp_warn_types: Expected warning type(s), or None.
    # * condition: Boolean condition for testcase to run, or 'pdb' for debugger

    (
        "Convolution with stride 1",
        dict(layer=Conv2D(2, 3, 1), x_shape=(2, 2, 5, 5)),
        None, None, True
    ),
    (
        "Convolution with stride 2 on odd size",
        dict(layer=Conv2D(1, 2, 2), x_shape=(2, 1, 5, 5)),
        None, None, True
    ),
    (
        "Convolution with stride 2 on even size",
        dict(layer=Conv2D(2, 2, 2), x_shape=(1, 2, 6, 4)),
        None, None, True
    ),
    (
        "ReLU",
        dict(layer=ReLU(), x_shape=(3, 7)),
        None, None, True
    ),
    (
        "Global average pooling",
        dict(layer=GlobalAvgPool(), x_shape=(2, 3, 4, 5)),
        None, None, True
    ),
    (
        "Dense",
        dict(layer=Dense(5, 3), x_shape=(4, 5)),
        None, None, True
    ),
]


@pytest.mark.parametrize(
    "desc, kwargs, exp_exc_types, exp_warn_types, condition",
    TESTCASES_LAYER_GRADIENTS)
@simplified_test_function
def test_layer_gradients(testcase, layer, x_shape):
    """
    Test function for the backward pass of the layers
    """

    # The code to be tested
    check_layer(layer, x_shape)


def test_conv2d_forward_direct():
    """
    The convolution equals a direct loop over output positions.
    """
    rng = np.random.default_rng(1)
    layer = Conv2D(2, 3, 2)
    params = layer.init_params(rng)
    params['b'] = rng.normal(size=3)
    x = rng.normal(size=(1, 2, 5, 6))
    out, _ = layer.forward(params, x)
    assert out.shape == (1, 3, 3, 3)
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    for o in range(3):
        for i in range(3):
            for j in range(3):
                window = xp[0, :, 2 * i:2 * i + 3, 2 * j:2 * j + 3]
                exp = np.sum(window * params['w'][o]) + params['b'][o]
                np.testing.assert_allclose(out[0, o, i, j], exp, rtol=1e-12)


def perturbed_model(config, seed):
    """
    Model with randomly perturbed weights and positive biases, so that no
    ReLU input sits exactly at its kink.
    """
    model = EmbeddingModel(config.architecture(), seed=seed)
    rng = np.random.default_rng(seed)
    params = OrderedDict()
    for key, value in model.params.items():
        if key.endswith('.b'):
            params[key] = rng.uniform(0.05, 0.2, value.shape)
        else:
            params[key] = value + rng.normal(0, 0.1, value.shape)
    return EmbeddingModel(config.architecture(), params=params)


TESTCASES_MODEL_GRADIENT = [

    # Testcases for the contrastive loss gradient of a complete model

    # Each list item is a testcase tuple with these items:
    # * desc: Short testcase description.
    # * kwargs: Keyword arguments for the test function:
    #   * same: Same-class flags of the four pairs.
    #   * seed: Seed of the model and the inputs.
    # * exp_exc_types: Expected exception type(s), or None.
    # * exp_warn_types: Expected warning type(s), or None.
    # * condition: Boolean condition for testcase to run, or 'pdb' for debugger

    (
        "Same-class pairs only",
        dict(same=[1, 1, 1, 1], seed=3),
        None, None, True
    ),
    (
        "Different-class pairs only",
        dict(same=[0, 0, 0, 0], seed=3),
        None, None, True
    ),
    (
        "Mixed pairs",
        dict(same=[1, 0, 1, 0], seed=3),
        None, None, True
    ),
    (
        "Mixed pairs, other model",
        dict(same=[1, 1, 0, 0], seed=11),
        None, None, True
    ),
]


@pytest.mark.parametrize(
    "desc, kwargs, exp_exc_types, exp_warn_types, condition",
    TESTCASES_MODEL_GRADIENT)
@simplified_test_function
def test_model_end_to_end_gradient(testcase, same, seed):
    """
    Test function for the analytic contrastive loss gradient of a small
    model against finite differences, for every parameter.
    """
    config = small_config()
    model = perturbed_model(config, seed)
    rng = np.random.default_rng(seed + 2)
    x1 = rng.uniform(0, 1, (4, 1, 6, 6))
    x2 = rng.uniform(0, 1, (4, 1, 6, 6))
    # The hinge of different-class pairs is active
    margin = 10.0

    # The code to be tested
    loss, grads = loss_gradients(model, PairBatch(x1, x2, same), margin)

    # Ensure that exceptions raised in the remainder of this function
    # are not mistaken as expected exceptions
    assert testcase.exp_exc_types is None

    analytic = model.flatten_grads(grads)
    flat = model.get_flat()

    def objective(values):
        model.set_flat(values)
        return loss_gradients(model, PairBatch(x1, x2, same), margin)[0]

    numeric = numeric_gradient(objective, flat)
    model.set_flat(flat)
    assert model.parameter_count <= 500
    assert loss > 0
    assert np.linalg.norm(analytic) > 0
    assert relative_error(analytic, numeric) <= FD_TOLERANCE


def test_model_forward_shape():
    """
    Batches of the right shape give one embedding per input.
    """
    config = small_config()
    model = EmbeddingModel(config.architecture(), seed=0)
    emb, _ = model.forward(np.zeros((5, 1, 6, 6)))
    assert emb.shape == (5, 3)
    with pytest.raises(DimensionError):
        model.forward(np.zeros((5, 1, 7, 6)))
    with pytest.raises(DimensionError):
        embed(model, np.zeros((1, 5, 5)))


def test_model_init_deterministic():
    """
    The same seed gives the same initial parameters; biases start at 0.
    """
    arch = small_config().architecture()
    m1 = EmbeddingModel(arch, seed=7)
    m2 = EmbeddingModel(arch, seed=7)
    m3 = EmbeddingModel(arch, seed=8)
    np.testing.assert_array_equal(m1.get_flat(), m2.get_flat())
    assert not np.array_equal(m1.get_flat(), m3.get_flat())
    np.testing.assert_array_equal(m1.params['conv0.b'], 0.0)
    assert list(m1.params)[:2] == ['conv0.w', 'conv0.b']


def test_model_invalid_params():
    """
    Parameters not matching the architecture are rejected.
    """
    arch = small_config().architecture()
    params = EmbeddingModel(arch).params
    params = OrderedDict(params)
    params['fc1.b'] = np.zeros(7)
    with pytest.raises(ParameterError):
        EmbeddingModel(arch, params)


TESTCASES_CONTRASTIVE_LOSS = [

    # Testcases for contrastive_loss()

    # Each list item is a testcase tuple with these items:
    # * desc: Short testcase description.
    # * kwargs: Keyword arguments for the test function:
    #   * pairs: List of (S, y).
    #   * margin: Margin.
    #   * exp_loss: Expected loss.
    # * exp_exc_types: Expected exception type(s), or None.
    # * exp_warn_types: Expected warning type(s), or None.
    # * condition: Boolean condition for testcase to run, or 'pdb' for debugger

    (
        "Same-class pair",
        dict(pairs=[(0.5, 1)], margin=1.0, exp_loss=0.25),
        None, None, True
    ),
    (
        "Different-class pair beyond the margin",
        dict(pairs=[(1.5, 0)], margin=1.0, exp_loss=0.0),
        None, None, True
    ),
    (
        "Mixed batch of two pairs",
        dict(pairs=[(0.4, 1), (0.3, 0)], margin=1.0, exp_loss=0.275),
        None, None, True
    ),
    (
        "Different-class pair at the margin",
        dict(pairs=[(2.0, 0)], margin=2.0, exp_loss=0.0),
        None, None, True
    ),
    (
        "Empty batch",
        dict(pairs=[], margin=1.0, exp_loss=None),
        ParameterError, None, True
    ),
    (
        "Zero margin",
        dict(pairs=[(0.5, 1)], margin=0.0, exp_loss=None),
        ParameterError, None, True
    ),
]


@pytest.mark.parametrize(
    "desc, kwargs, exp_exc_types, exp_warn_types, condition",
    TESTCASES_CONTRASTIVE_LOSS)
@simplified_test_function
def test_contrastive_loss(testcase, pairs, margin, exp_loss):
    """
    Test function for contrastive_loss()
    """

    # The code to be tested
    loss = contrastive_loss(pairs, margin)

    # Ensure that exceptions raised in the remainder of this function
    # are not mistaken as expected exceptions
    assert testcase.exp_exc_types is None

    assert loss == pytest.approx(exp_loss, abs=1e-15)


def test_contrastive_loss_geometry():
    """
    The loss grows with S for same-class pairs and shrinks for others.
    """
    dists = np.linspace(0, 2, 21)
    same = [contrastive_loss([(s, 1)], 1.0) for s in dists]
    diff = [contrastive_loss([(s, 0)], 1.0) for s in dists]
    assert all(b >= a for a, b in zip(same, same[1:]))
    assert all(b <= a for a, b in zip(diff, diff[1:]))
    assert all(v == 0 for s, v in zip(dists, diff) if s >= 1.0)


TESTCASES_PAIR_BATCH = [

    # Testcases for PairBatch()

    # Each list item is a testcase tuple with these items:
    # * desc: Short testcase description.
    # * kwargs: Keyword arguments for the test function:
    #   * shapes: Shapes of the first and second inputs.
    #   * same: Same-class flags.
    # * exp_exc_types: Expected exception type(s), or None.
    # * exp_warn_types: Expected warning type(s), or None.
    # * condition: Boolean condition for testcase to run, or 'pdb' for debugger

    (
        "Valid batch of three pairs",
        dict(shapes=((3, 1, 6, 6), (3, 1, 6, 6)), same=[1, 0, 1]),
        None, None, True
    ),
    (
        "Empty batch",
        dict(shapes=((0, 1, 6, 6), (0, 1, 6, 6)), same=[]),
        ParameterError, None, True
    ),
    (
        "Inputs of different sizes",
        dict(shapes=((2, 1, 6, 6), (2, 1, 4, 4)), same=[1, 0]),
        DimensionError, None, True
    ),
    (
        "More flags than pairs",
        dict(shapes=((2, 1, 6, 6), (2, 1, 6, 6)), same=[1, 0, 1]),
        DimensionError, None, True
    ),
    (
        "Inputs without channel dimension",
        dict(shapes=((2, 6, 6), (2, 6, 6)), same=[1, 0]),
        DimensionError, None, True
    ),
    (
        "Flag other than 0 and 1",
        dict(shapes=((2, 1, 6, 6), (2, 1, 6, 6)), same=[1, 2]),
        ParameterError, None, True
    ),
]


@pytest.mark.parametrize(
    "desc, kwargs, exp_exc_types, exp_warn_types, condition",
    TESTCASES_PAIR_BATCH)
@simplified_test_function
def test_pair_batch(testcase, shapes, same):
    """
    Test function for PairBatch()
    """
    x1 = np.zeros(shapes[0])
    x2 = np.ones(shapes[1])

    # The code to be tested
    batch = PairBatch(x1, x2, same)

    # Ensure that exceptions raised in the remainder of this function
    # are not mistaken as expected exceptions
    assert testcase.exp_exc_types is None

    assert len(batch) == len(same)
    np.testing.assert_array_equal(batch.same, same)
    assert batch.x1.shape == shapes[0]


def test_pair_batch_from_pairs():
    """
    A batch built from index pairs holds the indexed inputs and flags.
    """
    tensors = np.arange(4 * 1 * 2 * 2, dtype=np.float64).reshape(4, 1, 2, 2)
    batch = PairBatch.from_pairs(tensors, [(0, 3, 0), (2, 1, 1)])
    assert len(batch) == 2
    np.testing.assert_array_equal(batch.x1, tensors[[0, 2]])
    np.testing.assert_array_equal(batch.x2, tensors[[3, 1]])
    np.testing.assert_array_equal(batch.same, [0, 1])


def test_gradients_zero_for_identical_pairs():
    """
    Identical same-class inputs have loss 0 and zero gradients.
    """
    model = EmbeddingModel(small_config().architecture(), seed=1)
    x = np.random.default_rng(2).uniform(0, 1, (3, 1, 6, 6))
    loss, grads = loss_gradients(
        model, PairBatch(x, x.copy(), [1, 1, 1]), 1.0)
    assert loss == 0.0
    for value in grads.values():
        assert np.all(value == 0.0)


def test_gradients_zero_beyond_margin():
    """
    Different-class pairs beyond the margin have zero gradients.
    """
    model = EmbeddingModel(small_config().architecture(), seed=1)
    rng = np.random.default_rng(4)
    x1 = rng.uniform(0, 1, (2, 1, 6, 6))
    x2 = rng.uniform(0, 1, (2, 1, 6, 6))
    loss, grads = loss_gradients(model, PairBatch(x1, x2, [0, 0]), 1e-9)
    assert loss == 0.0
    for value in grads.values():
        assert np.all(value == 0.0)


def test_gradients_swap_symmetry():
    """
    Loss and gradients do not change when the pair members are swapped.
    """
    model = EmbeddingModel(small_config().architecture(), seed=1)
    rng = np.random.default_rng(6)
    x1 = rng.uniform(0, 1, (4, 1, 6, 6))
    x2 = rng.uniform(0, 1, (4, 1, 6, 6))
    same = [1, 0, 1, 0]
    loss_a, grads_a = loss_gradients(model, PairBatch(x1, x2, same), 5.0)
    loss_b, grads_b = loss_gradients(model, PairBatch(x2, x1, same), 5.0)
    assert loss_a == pytest.approx(loss_b, rel=1e-12)
    np.testing.assert_allclose(model.flatten_grads(grads_a),
                               model.flatten_grads(grads_b),
                               rtol=1e-10, atol=1e-14)


def test_adam_first_step():
    """
    The first Adam step moves each parameter by the learning rate against
    the sign of its gradient.
    """
    opt = AdamOptimizer(0.1)
    result = opt.step(np.array([1.0, 1.0, 1.0]), np.array([2.0, -0.5, 0.0]))
    np.testing.assert_allclose(result, [0.9, 1.1, 1.0], rtol=1e-6)
    assert opt.steps == 1


TESTCASES_RESIZE_AREA = [

    # Testcases for resize_area()

    # Each list item is a testcase tuple with these items:
    # * desc: Short testcase description.
    # * kwargs: Keyword arguments for the test function:
    #   * plane: Input plane.
    #   * size: Target (height, width).
    #   * exp_plane: Expected result.
    # * exp_exc_types: Expected exception type(s), or None.
    # * exp_warn_types: Expected warning type(s), or None.
    # * condition: Boolean condition for testcase to run, or 'pdb' for debugger

    (
        "2:1 reduction gives block means",
        dict(plane=[[1, 3, 5, 7], [1, 3, 5, 7]], size=(1, 2),
             exp_plane=[[2, 6]]),
        None, None, True
    ),
    (
        "Identity size",
        dict(plane=[[1, 2], [3, 4]], size=(2, 2),
             exp_plane=[[1, 2], [3, 4]]),
        None, None, True
    ),
    (
        "1:2 enlargement replicates pixels",
        dict(plane=[[1, 2]], size=(2, 4),
             exp_plane=[[1, 1, 2, 2], [1, 1, 2, 2]]),
        None, None, True
    ),
    (
        "3:2 reduction weights fractional pixels",
        dict(plane=[[0, 3, 6]], size=(1, 2),
             exp_plane=[[1, 5]]),
        None, None, True
    ),
    (
        "Empty target",
        dict(plane=[[1, 2]], size=(0, 2), exp_plane=None),
        DimensionError, None, True
    ),
]


@pytest.mark.parametrize(
    "desc, kwargs, exp_exc_types, exp_warn_types, condition",
    TESTCASES_RESIZE_AREA)
@simplified_test_function
def test_resize_area(testcase, plane, size, exp_plane):
    """
    Test function for resize_area()
    """

    # The code to be tested
    result = resize_area(plane, *size)

    # Ensure that exceptions raised in the remainder of this function
    # are not mistaken as expected exceptions
    assert testcase.exp_exc_types is None

    np.testing.assert_allclose(result, exp_plane, rtol=1e-12)


def test_preprocess():
    """
    Evaluation preprocessing is deterministic and center-cropped; training
    preprocessing depends on the seed.
    """
    config = TrainConfig(input_side=4, resize_to=8, crop_to=4,
                         horizontal_flip=True)
    image = np.zeros((12, 12))
    image[2:10, 2:10] = np.arange(64).reshape(8, 8)
    crop = CropRect(2, 2, 8, 8)
    tensor = preprocess(image, crop, config)
    assert tensor.shape == (1, 4, 4)
    np.testing.assert_allclose(
        tensor[0], np.arange(64).reshape(8, 8)[2:6, 2:6], rtol=1e-12)
    variants = set(preprocess(image, crop, config, seed=s,
                              training=True).tobytes() for s in range(20))
    assert len(variants) > 1
    np.testing.assert_array_equal(
        preprocess(image, crop, config, seed=3, training=True),
        preprocess(image, crop, config, seed=3, training=True))


def test_preprocess_input_size_passthrough():
    """
    With the default configuration, evaluation preprocessing returns a face
    crop of the network input size unchanged; training preprocessing still
    augments it.
    """
    config = TrainConfig()
    side = config.input_side
    rng = np.random.default_rng(4)
    image = rng.uniform(0, 1, (side + 6, side + 4))
    crop = CropRect(3, 5, side, side)
    tensor = preprocess(image, crop, config)
    assert tensor.shape == (1, side, side)
    np.testing.assert_array_equal(tensor[0], image[5:5 + side, 3:3 + side])
    augmented = preprocess(image, crop, config, seed=1, training=True)
    assert augmented.shape == (1, side, side)
    assert not np.array_equal(augmented, tensor)


def test_embed_images_matches_embed():
    """
    Batched embedding equals embedding one input at a time.
    """
    model = EmbeddingModel(small_config().architecture(), seed=2)
    rng = np.random.default_rng(0)
    tensors = [rng.uniform(0, 1, (1, 6, 6)) for _ in range(5)]
    batch = embed_images(model, tensors, chunk=2)
    assert batch.shape == (5, 3)
    for k, tensor in enumerate(tensors):
        np.testing.assert_allclose(batch[k], embed(model, tensor),
                                   rtol=1e-12, atol=1e-15)
    assert embed_images(model, []).shape == (0, 3)


def test_pair_distance():
    """
    Euclidean distance of two embeddings.
    """
    assert pair_distance([0, 0], [3, 4]) == 5.0
    assert pair_distance([1, 2], [1, 2]) == 0.0
    assert abs(pair_distance([1, 0], [0, 1]) - np.sqrt(2.0)) <= 1e-15
    rng = np.random.default_rng(8)
    e1 = rng.normal(size=32)
    e2 = rng.normal(size=32)
    exp = sum((float(a) - float(b)) ** 2 for a, b in zip(e1, e2)) ** 0.5
    assert abs(pair_distance(e1, e2) - exp) <= 1e-12
    with pytest.raises(DimensionError):
        pair_distance([1, 2], [1, 2, 3])
    with pytest.raises(DimensionError):
        pair_distance([1], [1, 2, 3])


def test_embed_zero_parameters():
    """
    A network with all parameters zero maps every input to zero.
    """
    model = EmbeddingModel(small_config().architecture(), seed=4)
    model.set_flat(np.zeros(model.parameter_count))
    image = np.random.default_rng(1).uniform(size=(6, 6))
    np.testing.assert_array_equal(embed(model, image), np.zeros(3))


def test_embed_hand_computed():
    """
    A single convolution with only the center tap set passes a constant
    image through, so the embedding is the constant times the weights.
    """
    config = small_config(input_side=4, resize_to=4, crop_to=4,
                          conv_channels=[1], conv_stride=1, hidden_units=1,
                          embedding_dim=2)
    conv_w = np.zeros((1, 1, 3, 3))
    conv_w[0, 0, 1, 1] = 1.0
    params = OrderedDict([
        ('conv0.w', conv_w),
        ('conv0.b', np.zeros(1)),
        ('fc0.w', np.ones((1, 1))),
        ('fc0.b', np.zeros(1)),
        ('fc1.w', np.array([[2.0], [3.0]])),
        ('fc1.b', np.zeros(2)),
    ])
    model = EmbeddingModel(config.architecture(), params=params)
    result = embed(model, np.full((4, 4), 0.25))
    np.testing.assert_allclose(result, [0.5, 0.75], rtol=1e-15)
    np.testing.assert_array_equal(result, embed(model, np.full((4, 4), 0.25)))


def test_sample_pairs():
    """
    The first half of the pairs are distinct same-class pairs, the rest
    different-class pairs.
    """
    classes = [1, 1, 1, -1, -1]
    pairs = sample_pairs(classes, 9, np.random.default_rng(0))
    assert len(pairs) == 9
    for k, (i, j, y) in enumerate(pairs):
        if k < 5:
            assert y == 1 and classes[i] == classes[j] and i != j
        else:
            assert y == 0 and classes[i] != classes[j]
    with pytest.raises(DataError):
        sample_pairs([1, 1], 2, np.random.default_rng(0))


TESTCASES_TRAIN_CONFIG = [

    # Testcases for TrainConfig.__init__()

    # Each list item is a testcase tuple with these items:
    # * desc: Short testcase description.
    # * kwargs: Keyword arguments for the test function:
    #   * params: Keyword arguments for TrainConfig.
    # * exp_exc_types: Expected exception type(s), or None.
    # * exp_warn_types: Expected warning type(s), or None.
    # * condition: Boolean condition for testcase to run, or 'pdb' for debugger

    (
        "Defaults",
        dict(params={}),
        None, None, True
    ),
    (
        "Zero epochs",
        dict(params={'epochs': 0}),
        None, None, True
    ),
    (
        "Negative margin",
        dict(params={'margin': -1.0}),
        ParameterError, None, True
    ),
    (
        "Crop larger than resize",
        dict(params={'resize_to': 10, 'crop_to': 12}),
        ParameterError, None, True
    ),
    (
        "Empty convolution stack",
        dict(params={'conv_channels': []}),
        ParameterError, None, True
    ),
    (
        "Unknown parameter",
        dict(params={'dropout': 0.5}),
        ParameterError, None, True
    ),
]


@pytest.mark.parametrize(
    "desc, kwargs, exp_exc_types, exp_warn_types, condition",
    TESTCASES_TRAIN_CONFIG)
@simplified_test_function
def test_train_config(testcase, params):
    """
    Test function for TrainConfig.__init__()
    """

    # The code to be tested
    config = TrainConfig(**params)

    # Ensure that exceptions raised in the remainder of this function
    # are not mistaken as expected exceptions
    assert testcase.exp_exc_types is None

    assert TrainConfig.from_dict(config.to_dict()).to_dict() == \
        config.to_dict()
    assert config.margin == params.get('margin', 1.0)


def toy_images():
    """
    Constant 8x8 images: two dark and two bright ones.
    """
    planes = [np.full((8, 8), v) for v in (0.10, 0.11, 0.80, 0.81)]
    crops = [CropRect(0, 0, 8, 8)] * 4
    return planes, crops, [1, 1, -1, -1]


def test_train_toy_overfit():
    """
    Two well separated classes are fitted to a small loss.
    """
    planes, crops, classes = toy_images()
    config = TrainConfig(input_side=8, resize_to=8, crop_to=8,
                         conv_channels=[4], conv_stride=2, hidden_units=8,
                         embedding_dim=2, batch_pairs=4, epochs=200,
                         learning_rate=5e-3, seed=0)
    model = train_siamese_on_images(planes, crops, classes, config)
    assert len(model.loss_history) == 200
    assert model.loss_history[-1][1] < 0.01
    assert model.loss_history[-1][1] < model.loss_history[0][1]


def test_train_deterministic():
    """
    Training twice with the same seed gives identical parameters.
    """
    planes, crops, classes = toy_images()
    config = TrainConfig(input_side=8, resize_to=8, crop_to=6,
                         conv_channels=[2], hidden_units=4, embedding_dim=2,
                         batch_pairs=4, epochs=3, learning_rate=1e-2)
    m1 = train_siamese_on_images(planes, crops, classes, config)
    m2 = train_siamese_on_images(planes, crops, classes, config)
    np.testing.assert_array_equal(m1.get_flat(), m2.get_flat())
    assert m1.loss_history == m2.loss_history


def test_train_zero_epochs():
    """
    With zero epochs the initial model is returned with empty history.
    """
    planes, crops, classes = toy_images()
    config = small_config(input_side=8, resize_to=8, crop_to=8, epochs=0,
                          seed=4)
    model = train_siamese_on_images(planes, crops, classes, config)
    assert model.loss_history == []
    np.testing.assert_array_equal(
        model.get_flat(),
        EmbeddingModel(config.architecture(), seed=4).get_flat())


def test_train_single_class():
    """
    Training data of one class is rejected.
    """
    planes, crops, _ = toy_images()
    with pytest.raises(DataError):
        train_siamese_on_images(planes, crops, [1, 1, 1, 1], small_config())


def test_train_siamese_manifest():
    """
    Training from a manifest reads the channel planes of its records.
    """
    planes, _, _ = toy_images()
    labels = ['genuine', 'genuine', 'attack:print', 'attack:print']
    config = small_config(input_side=8, resize_to=8, crop_to=8)
    with TempDirectory() as tmp_dir:
        manifest = write_toy_dataset(tmp_dir.path, planes, labels)
        model = train_siamese(manifest, config, channel='s0')
        assert len(model.loss_history) == 2
        with pytest.raises(DataError):
            train_siamese(DatasetManifest(manifest.records[:2]), config)


def test_model_checkpoint_round_trip():
    """
    A saved model reloads with bit-identical parameters and embeddings.
    """
    config = small_config()
    model = EmbeddingModel(config.architecture(), seed=9)
    x = np.random.default_rng(1).uniform(0, 1, (1, 6, 6))
    with TempDirectory() as tmp_dir:
        filepath = os.path.join(tmp_dir.path, 'embedding.ckpt')
        save_model(model, filepath, config)
        loaded, loaded_config = load_model(filepath)
    np.testing.assert_array_equal(loaded.get_flat(), model.get_flat())
    np.testing.assert_array_equal(embed(loaded, x), embed(model, x))
    assert loaded.seed == 9
    assert loaded_config.to_dict() == config.to_dict()


def test_model_checkpoint_bad_architecture():
    """
    A checkpoint whose parameters do not fit its architecture is rejected.
    """
    arch = small_config().architecture()
    with TempDirectory() as tmp_dir:
        filepath = os.path.join(tmp_dir.path, 'embedding.ckpt')
        save_checkpoint(filepath, 'embedding', arch,
                        OrderedDict([('conv0.w', np.zeros(3))]), 0, {})
        with pytest.raises(CheckpointFileError):
            load_model(filepath)


def test_write_loss_log():
    """
    The loss log has a header and one row per epoch.
    """
    with TempDirectory() as tmp_dir:
        filepath = os.path.join(tmp_dir.path, 'loss.csv')
        write_loss_log(filepath, [(1, 0.5), (2, 0.25)])
        with open(filepath, newline='') as fp:
            rows = list(csv.reader(fp))
    assert rows == [['epoch', 'loss'], ['1', '0.5'], ['2', '0.25']]
