import math

import numpy as np
import pytest

from mcsa.attention import FeatureSample
from mcsa.errors import DimensionError
from mcsa.numeric import finite_diff_check
from mcsa.stream import (ChannelHeadParams, ModelConfig, StreamModel, backward_batch,
                         channel_distribution, cross_entropy, cross_entropy_batch, forward,
                         forward_batch, fuse, predict, reduce_mean, stack_samples)

from conftest import random_samples


class TestChannelDistribution:
    def test_zero_P_is_uniform(self):
        head = ChannelHeadParams(np.zeros((1, 3)), np.ones((4, 5)))
        np.testing.assert_allclose(channel_distribution(head, np.ones((3, 5))), 0.25)

    def test_hand_example(self):
        head = ChannelHeadParams(np.array([[1.0]]), np.array([[1.0, 0.0], [0.0, 0.0]]))
        out = channel_distribution(head, np.array([[2.0, 5.0]]))
        e = math.exp(2) / (math.exp(2) + 1)
        np.testing.assert_allclose(out, [e, 1 - e], atol=1e-12)
        np.testing.assert_allclose(out, [0.88080, 0.11920], atol=1e-5)

    def test_sums_to_one(self):
        rng = np.random.default_rng(0)
        head = ChannelHeadParams(rng.normal(size=(1, 4)), rng.normal(size=(6, 3)))
        assert channel_distribution(head, rng.normal(size=(4, 3))).sum() == pytest.approx(1, abs=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            channel_distribution(ChannelHeadParams(np.ones((1, 2)), np.ones((3, 4))), np.ones((2, 5)))

    def test_uniform_logit_shift_via_Q(self):
        rng = np.random.default_rng(1)
        P, Q, X = rng.normal(size=(1, 4)), rng.normal(size=(5, 6)), rng.normal(size=(4, 6))
        shifted = Q + rng.normal(size=(1, 6))  # same row added to every class
        np.testing.assert_allclose(channel_distribution(ChannelHeadParams(P, shifted), X),
                                   channel_distribution(ChannelHeadParams(P, Q), X), atol=1e-12)


class TestFuse:
    def test_identical_uniform_columns(self):
        D = np.full((4, 6), 0.25)
        np.testing.assert_allclose(fuse(np.arange(6.0)[None], D), 0.25)

    def test_zero_M(self):
        D = np.random.default_rng(0).dirichlet(np.ones(3), size=6).T
        np.testing.assert_allclose(fuse(np.zeros((1, 6)), D), 1 / 3)

    def test_first_channel_only(self):
        D = np.full((2, 6), 0.5)
        D[:, 0] = [0.9, 0.1]
        out = fuse([[1, 0, 0, 0, 0, 0]], D)
        e = math.exp(0.9) / (math.exp(0.9) + math.exp(0.1))
        np.testing.assert_allclose(out, [e, 1 - e], atol=1e-12)
        np.testing.assert_allclose(out, [0.68997, 0.31003], atol=1e-5)

    def test_shape(self):
        with pytest.raises(DimensionError):
            fuse(np.ones((1, 5)), np.ones((3, 5)))


class TestForward:
    def test_zero_model_is_uniform(self, tiny_config):
        x = random_samples(tiny_config, 1)[0]
        pred, vectors = forward(StreamModel.zeros(tiny_config), x)
        np.testing.assert_allclose(pred, 1 / 3)
        assert len(vectors) == 6
        for v in vectors[:3]:
            np.testing.assert_allclose(v, 1 / 4)
        for v in vectors[3:]:
            np.testing.assert_allclose(v, 1 / 3)

    def test_deterministic(self, tiny_model, tiny_config):
        x = random_samples(tiny_config, 1)[0]
        a, b = forward(tiny_model, x)[0], forward(tiny_model, x)[0]
        np.testing.assert_array_equal(a, b)
        assert a.sum() == pytest.approx(1, abs=1e-9)

    def test_batched_matches_single(self, tiny_model, tiny_config):
        xs = random_samples(tiny_config, 5, seed=4)
        S, T, _ = stack_samples(xs)
        batched = forward_batch(tiny_model, S, T).y
        for row, x in zip(batched, xs):
            np.testing.assert_allclose(row, forward(tiny_model, x)[0], atol=1e-14)

    def test_dims_checked(self, tiny_model):
        x = FeatureSample(np.zeros((3, 5)), np.zeros((3, 4)), 0)
        with pytest.raises(DimensionError):
            forward(tiny_model, x)

    def test_class_permutation(self, tiny_config):
        rng = np.random.default_rng(5)
        model = StreamModel.init(tiny_config, rng)
        pi = np.array([2, 0, 1])
        permuted = model.copy()
        for name in permuted.params:
            if ".Q" in name:
                permuted.params[name] = model.params[name][pi]
        for x in random_samples(tiny_config, 10, seed=6):
            np.testing.assert_allclose(forward(permuted, x)[0], forward(model, x)[0][pi], atol=1e-14)
            assert predict(permuted, x) == int(np.argmax(forward(model, x)[0][pi]))

    def test_distributions_sum_to_one(self, tiny_config):
        rng = np.random.default_rng(7)
        for _ in range(20):
            model = StreamModel(tiny_config, {n: rng.normal(scale=3, size=s)
                                              for n, s in tiny_config.shapes().items()})
            S, T = rng.normal(size=(4, 3, 4)), rng.normal(size=(4, 3, 3))
            cache = forward_batch(model, S, T)
            assert np.all(np.abs(cache.y.sum(axis=1) - 1) <= 1e-9)
            assert np.all(np.abs(cache.D.sum(axis=1) - 1) <= 1e-9)


class TestCrossEntropy:
    def test_uniform(self):
        assert cross_entropy(np.full(4, 0.25), 2) == pytest.approx(math.log(4), abs=1e-12)
        assert cross_entropy(np.full(4, 0.25), 2) == pytest.approx(1.38629, abs=1e-5)

    def test_certain(self):
        assert cross_entropy(np.array([0.0, 1.0]), 1) == 0.0

    def test_floor(self):
        assert cross_entropy(np.array([1.0, 0.0]), 1) == pytest.approx(-math.log(1e-12))

    def test_label_range(self):
        with pytest.raises(IndexError):
            cross_entropy(np.array([0.5, 0.5]), 2)


class TestPredict:
    def test_tie_break_zero_model(self, tiny_config):
        x = random_samples(tiny_config, 1)[0]
        assert predict(StreamModel.zeros(tiny_config), x) == 0

    @pytest.mark.parametrize("pred,expected", [((0.1, 0.7, 0.2), 1), ((0.5, 0.5), 0)])
    def test_argmax_rule(self, pred, expected):
        assert int(np.argmax(np.array(pred))) == expected


@pytest.mark.parametrize("seed", range(3))
def test_loss1_gradient(tiny_config, seed):
    rng = np.random.default_rng(seed)
    model = StreamModel.init(tiny_config, rng)
    S, T, y = stack_samples(random_samples(tiny_config, 4, seed=seed + 10))

    def f(params):
        cache = forward_batch(StreamModel(tiny_config, {k: v.copy() for k, v in params.items()}), S, T)
        return float(cross_entropy_batch(cache, y)[0].mean())

    cache = forward_batch(model, S, T)
    grads = reduce_mean(backward_batch(model, cache, cross_entropy_batch(cache, y)[1]))
    assert finite_diff_check(f, model.params, grads) <= 1e-4


class TestModel:
    def test_shapes(self):
        cfg = ModelConfig(s=5, t=4, G=6, k=3, a=7, b=2)
        shapes = cfg.shapes()
        assert shapes["spatial.W2"] == (7, 5)
        assert shapes["temporal.u3"] == (1, 2)
        assert shapes["spatial.Q1"] == (3, 6)
        assert shapes["temporal.Q1"] == (3, 5)
        assert shapes["temporal.P2"] == (1, 4)
        assert shapes["fusion.M"] == (1, 6)
        assert len(shapes) == 25

    def test_init_is_seeded_and_bounded(self, tiny_config):
        a = StreamModel.init(tiny_config, np.random.default_rng(3))
        b = StreamModel.init(tiny_config, np.random.default_rng(3))
        for name, (r, c) in tiny_config.shapes().items():
            np.testing.assert_array_equal(a.params[name], b.params[name])
            assert np.all(np.abs(a.params[name]) <= math.sqrt(6 / (r + c)))

    def test_wrong_param_shape(self, tiny_config):
        params = StreamModel.zeros(tiny_config).params
        params["fusion.M"] = np.zeros((1, 5))
        with pytest.raises(DimensionError):
            StreamModel(tiny_config, params)

    def test_k_at_least_two(self):
        with pytest.raises(DimensionError):
            ModelConfig(s=2, t=2, G=3, k=1)

    def test_channel_activations(self, tiny_model):
        assert [c.activation for c in tiny_model.spatial_channels] == ["sigmoid", "tanh", "leaky_relu"]
        assert [c.activation for c in tiny_model.temporal_channels] == ["sigmoid", "tanh", "leaky_relu"]
