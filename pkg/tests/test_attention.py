"""Softmax, similarity and linear attention, with and without rotary encoding."""

import numpy as np
import pytest

from attention import (
    AttentionSpec,
    MultiHeadAttention,
    exp_similarity,
    linear_attention,
    linear_attention_denominator,
    linear_attention_direct,
    rope_linear_attention,
    rope_linear_weight_stats,
    similarity_attention,
    softmax_attention,
)
from kit.constant import AttentionVariant, FeatureMap, PosEncoding
from kit.exception import ConfigurationError, DimensionError, NumericError
from numerics import Parameter, Rng, Tensor, grad_check
from rotary import get_encoder, make_schedule


class TestSoftmaxAttention:

    def test_single_token(self, rng):
        q, k, v = rng.normal((1, 4)), rng.normal((1, 4)), rng.normal((1, 4))
        np.testing.assert_allclose(softmax_attention(q, k, v).output.data, v, atol=1e-15)

    def test_equal_scores_average_values(self, rng):
        v = rng.normal((3, 4))
        out = softmax_attention(np.zeros((3, 4)), rng.normal((3, 4)), v).output.data
        np.testing.assert_allclose(out, np.tile(v.mean(axis=0), (3, 1)), atol=1e-14)

    def test_hand_weights(self):
        q = np.array([[1.0, 0.0, 0.0, 0.0]])
        k = np.array([[0.0, 0.0, 0.0, 0.0], [2 * np.log(2), 0.0, 0.0, 0.0]])
        v = np.array([[3.0, 0.0, 0.0, 0.0], [0.0, 6.0, 0.0, 0.0]])
        out = softmax_attention(q, k, v)
        np.testing.assert_allclose(out.weights.data, [[1 / 3, 2 / 3]], atol=1e-15)
        np.testing.assert_allclose(out.output.data, [[1.0, 4.0, 0.0, 0.0]], atol=1e-14)

    def test_rows_sum_to_one(self, rng):
        out = softmax_attention(rng.normal((2, 7, 8)), rng.normal((2, 7, 8)), rng.normal((2, 7, 8)))
        np.testing.assert_allclose(out.weights.data.sum(axis=-1), 1.0, atol=1e-12)

    def test_causal_mask(self, rng):
        out = softmax_attention(rng.normal((5, 4)), rng.normal((5, 4)), rng.normal((5, 4)), causal=True)
        assert np.all(np.triu(out.weights.data, k=1) == 0)

    def test_shape_checks(self):
        with pytest.raises(DimensionError):
            softmax_attention(np.ones((2, 4)), np.ones((2, 3)), np.ones((2, 4)))

    def test_rope_shift_equivariance(self, rng):
        enc = get_encoder(make_schedule(8))
        q, k, v = rng.normal((6, 8)), rng.normal((6, 8)), rng.normal((6, 8))
        positions = np.arange(6)
        base = softmax_attention(enc.rotate(q, positions), enc.rotate(k, positions), v).output.data
        for offset in (1, 17, 500):
            shifted = softmax_attention(
                enc.rotate(q, positions + offset), enc.rotate(k, positions + offset), v
            ).output.data
            np.testing.assert_allclose(shifted, base, atol=1e-9)

    def test_permutation_equivariance(self, rng):
        q, k, v = rng.normal((5, 4)), rng.normal((5, 4)), rng.normal((5, 4))
        order = np.array([3, 0, 4, 1, 2])
        base = softmax_attention(q, k, v).output.data
        permuted = softmax_attention(q[order], k[order], v[order]).output.data
        np.testing.assert_allclose(permuted, base[order], atol=1e-14)


class TestSimilarityAttention:

    def test_constant_similarity(self, rng):
        v = rng.normal((4, 3))
        out = similarity_attention(rng.normal((4, 2)), rng.normal((4, 2)), v, lambda a, b: 1.0)
        np.testing.assert_allclose(out, np.tile(v.mean(axis=0), (4, 1)), atol=1e-15)

    def test_exp_similarity_matches_softmax(self, rng):
        q, k, v = rng.normal((6, 4)), rng.normal((6, 4)), rng.normal((6, 4))
        generic = similarity_attention(q, k, v, exp_similarity(4))
        np.testing.assert_allclose(generic, softmax_attention(q, k, v).output.data, atol=1e-12)

    def test_delta_kernel(self, rng):
        q = np.eye(3)
        v = rng.normal((3, 2))
        out = similarity_attention(q, np.eye(3), v, lambda a, b: float(np.array_equal(a, b)))
        np.testing.assert_allclose(out, v)

    def test_zero_row(self, rng):
        with pytest.raises(NumericError):
            similarity_attention(np.ones((2, 2)), np.ones((2, 2)), np.ones((2, 2)), lambda a, b: 0.0)


@pytest.mark.parametrize("feature_map", list(FeatureMap))
class TestLinearAttention:

    def test_single_token(self, rng, feature_map):
        v = rng.normal((1, 4))
        out = linear_attention(rng.normal((1, 4)), rng.normal((1, 4)), v, feature_map)
        np.testing.assert_allclose(out.data, v, atol=1e-14)

    def test_identical_keys_average_values(self, rng, feature_map):
        k = np.tile(rng.normal(4), (5, 1))
        v = rng.normal((5, 3))
        out = linear_attention(rng.normal((5, 4)), k, v, feature_map)
        np.testing.assert_allclose(out.data, np.tile(v.mean(axis=0), (5, 1)), atol=1e-13)

    @pytest.mark.parametrize("causal", [False, True])
    def test_regrouped_matches_direct(self, rng, feature_map, causal):
        for seq, dim in ((5, 4), (64, 64), (17, 10)):
            q, k, v = rng.normal((seq, dim)), rng.normal((seq, dim)), rng.normal((seq, dim))
            fast, denominator = linear_attention(q, k, v, feature_map, causal, return_denominator=True)
            direct, direct_denominator = linear_attention_direct(q, k, v, feature_map, causal)
            np.testing.assert_allclose(fast.data, direct, atol=1e-10)
            np.testing.assert_allclose(denominator.data, direct_denominator, rtol=1e-12)

    def test_small_instance_tight(self, rng, feature_map):
        q, k, v = rng.normal((5, 4)), rng.normal((5, 4)), rng.normal((5, 4))
        fast = linear_attention(q, k, v, feature_map).data
        direct, _ = linear_attention_direct(q, k, v, feature_map)
        np.testing.assert_allclose(fast, direct, atol=1e-12)

    def test_positions_at_zero_equal_plain(self, rng, feature_map):
        q, k, v = rng.normal((6, 4)), rng.normal((6, 4)), rng.normal((6, 4))
        rotary = rope_linear_attention(q, k, v, feature_map, positions=np.zeros(6, dtype=int))
        np.testing.assert_allclose(rotary.data, linear_attention(q, k, v, feature_map).data, atol=1e-14)

    def test_rotary_single_token(self, rng, feature_map):
        v = rng.normal((1, 4))
        out = rope_linear_attention(
            rng.normal((1, 4)), rng.normal((1, 4)), v, feature_map, positions=np.array([37])
        )
        np.testing.assert_allclose(out.data, v, atol=1e-13)

    @pytest.mark.parametrize("causal", [False, True])
    def test_rotary_denominator_is_unrotated(self, rng, feature_map, causal):
        q, k, v = rng.normal((9, 8)), rng.normal((9, 8)), rng.normal((9, 8))
        _, plain = linear_attention(q, k, v, feature_map, causal, return_denominator=True)
        _, rotary = rope_linear_attention(q, k, v, feature_map, causal=causal, return_denominator=True)
        np.testing.assert_array_equal(rotary.data, plain.data)
        np.testing.assert_array_equal(
            linear_attention_denominator(q, k, feature_map, causal).data, plain.data
        )

    def test_weight_stats_reported(self, rng, feature_map):
        stats = rope_linear_weight_stats(rng.normal((12, 8)), rng.normal((12, 8)), feature_map)
        assert stats.count == 144
        assert 0.0 <= stats.negative_fraction <= 1.0
        assert np.isfinite(stats.min_weight)

    def test_gradient(self, rng, feature_map):
        q = Parameter(rng.normal((5, 4), 0.5), "q")
        k = Parameter(rng.normal((5, 4), 0.5), "k")
        v = Tensor(rng.normal((5, 4)))
        loss = lambda: rope_linear_attention(q, k, v, feature_map, causal=True).sum()
        assert grad_check(loss, [q, k], rng, samples=16) < 1e-6


class TestAttentionSpec:

    def test_rope_requires_even_head_dim(self):
        with pytest.raises(ConfigurationError):
            AttentionSpec(heads=3, head_dim=21, pos_encoding=PosEncoding.ROPE)

    def test_shaw_only_with_softmax(self):
        with pytest.raises(ConfigurationError):
            AttentionSpec(2, 4, AttentionVariant.LINEAR_ELU, PosEncoding.SHAW)

    def test_feature_map_of_variant(self):
        assert AttentionSpec(2, 4, AttentionVariant.LINEAR_SOFTMAX).feature_map == FeatureMap.SOFTMAX_EXP
        assert AttentionSpec(2, 4).feature_map is None


class TestMultiHeadAttention:

    @pytest.mark.parametrize(
        "variant,pos_encoding",
        [
            (AttentionVariant.SOFTMAX, PosEncoding.ROPE),
            (AttentionVariant.SOFTMAX, PosEncoding.SHAW),
            (AttentionVariant.LINEAR_ELU, PosEncoding.ROPE),
            (AttentionVariant.LINEAR_SOFTMAX, PosEncoding.NONE),
        ],
    )
    def test_shapes_and_causality(self, variant, pos_encoding):
        spec = AttentionSpec(2, 4, variant, pos_encoding, causal=True)
        layer = MultiHeadAttention(spec, Rng(1))
        x = Rng(2).normal((2, 5, 8))
        out = layer(Tensor(x)).data
        assert out.shape == (2, 5, 8)

        changed = x.copy()
        changed[:, 4] += 1.0
        prefix = layer(Tensor(changed)).data
        np.testing.assert_allclose(prefix[:, :4], out[:, :4], atol=1e-12)

    def test_same_seed_same_weights(self):
        spec = AttentionSpec(2, 4, pos_encoding=PosEncoding.ROPE)
        first = MultiHeadAttention(spec, Rng(3)).parameters()
        second = MultiHeadAttention(spec, Rng(3)).parameters()
        for a, b in zip(first, second):
            assert a.name == b.name
            np.testing.assert_array_equal(a.data, b.data)
