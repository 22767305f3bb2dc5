"""Rotary encoding: schedule, sparse rotation, dense matrices and relative scores."""

from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from kit.exception import ConfigurationError, DimensionError
from numerics import Parameter, Tensor, grad_check
from rotary import (
    Complex2DPair,
    RotaryEncoder,
    apply_rotary,
    complex_rope_score_2d,
    dense_rotate,
    dense_rotation_matrix,
    get_encoder,
    make_schedule,
    relative_rope_score,
    rope_score,
)


DIMS = [2, 4, 64, 128]


class TestSchedule:

    def test_known_schedules(self):
        np.testing.assert_allclose(make_schedule(2).thetas, [1.0])
        np.testing.assert_allclose(make_schedule(4).thetas, [1.0, 0.01], rtol=1e-15)
        np.testing.assert_allclose(make_schedule(8).thetas, [1.0, 0.1, 0.01, 0.001], rtol=1e-14)

    def test_strictly_decreasing(self):
        thetas = make_schedule(128).frequencies
        assert thetas[0] == 1.0
        assert np.all(np.diff(thetas) < 0)

    @pytest.mark.parametrize("dim", [0, 3, -2, 7])
    def test_rejects_odd_or_non_positive(self, dim):
        with pytest.raises(ConfigurationError):
            make_schedule(dim)

    def test_encoder_is_shared(self):
        assert get_encoder(make_schedule(16)) is get_encoder(make_schedule(16))


class TestApplyRotary:

    def test_position_zero_is_identity(self, rng):
        x = rng.normal((3, 8))
        np.testing.assert_array_equal(apply_rotary(get_encoder(make_schedule(8)), x, 0), x)

    def test_unit_vectors_in_2d(self):
        enc = get_encoder(make_schedule(2))
        np.testing.assert_allclose(apply_rotary(enc, np.array([1.0, 0.0]), 1), [np.cos(1), np.sin(1)], atol=1e-15)
        np.testing.assert_allclose(apply_rotary(enc, np.array([0.0, 1.0]), 1), [-np.sin(1), np.cos(1)], atol=1e-15)

    def test_norm_preserved(self, rng):
        for dim in DIMS:
            enc = get_encoder(make_schedule(dim))
            for _ in range(50):
                x = rng.normal(dim)
                m = rng.integers(0, 1025)
                assert abs(np.linalg.norm(enc.rotate(x, m)) - np.linalg.norm(x)) < 1e-12

    def test_negative_position_is_transpose(self, rng):
        schedule = make_schedule(8)
        enc = get_encoder(schedule)
        x = rng.normal(8)
        np.testing.assert_allclose(enc.rotate(x, -5), dense_rotation_matrix(schedule, 5).T @ x, atol=1e-14)
        np.testing.assert_allclose(enc.rotate(enc.rotate(x, 5), -5), x, atol=1e-14)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            get_encoder(make_schedule(4)).rotate(np.ones(6), 1)

    def test_position_count_mismatch(self):
        with pytest.raises(DimensionError):
            get_encoder(make_schedule(4)).rotate(np.ones((3, 4)), np.arange(2))

    def test_non_integer_positions(self):
        with pytest.raises(DimensionError):
            get_encoder(make_schedule(4)).rotate(np.ones((2, 4)), np.array([0.5, 1.0]))

    def test_tensor_path_matches_array_path(self, rng):
        enc = get_encoder(make_schedule(8))
        x = rng.normal((2, 5, 8))
        positions = np.arange(5) + 3
        out = enc.rotate(Tensor(x), positions)
        assert isinstance(out, Tensor)
        np.testing.assert_allclose(out.data, enc.rotate(x, positions), atol=1e-15)

    def test_tensor_gradient(self, rng):
        enc = get_encoder(make_schedule(6))
        x = Parameter(rng.normal((4, 6)), "x")
        weights = Tensor(rng.normal((4, 6)))
        assert grad_check(lambda: (enc.rotate(x, np.arange(4)) * weights).sum(), [x], rng, samples=10) < 1e-8


class TestSparseDense:

    def test_dense_identity_at_zero(self):
        np.testing.assert_array_equal(dense_rotation_matrix(make_schedule(6), 0), np.eye(6))

    def test_dense_2d_block(self):
        expected = [[np.cos(1), -np.sin(1)], [np.sin(1), np.cos(1)]]
        np.testing.assert_allclose(dense_rotation_matrix(make_schedule(2), 1), expected, atol=1e-15)

    @pytest.mark.parametrize("dim", DIMS + [256])
    def test_equivalence(self, rng, dim):
        schedule = make_schedule(dim)
        enc = get_encoder(schedule)
        for _ in range(10):
            x = rng.normal((6, dim))
            positions = rng.integers(-1024, 1025, 6)
            np.testing.assert_allclose(enc.rotate(x, positions), dense_rotate(schedule, x, positions), atol=1e-12)

    def test_orthogonal(self, rng):
        schedule = make_schedule(16)
        for _ in range(20):
            matrix = dense_rotation_matrix(schedule, rng.integers(0, 513))
            np.testing.assert_allclose(matrix.T @ matrix, np.eye(16), atol=1e-12)

    def test_relative_product(self, rng):
        for dim in DIMS:
            schedule = make_schedule(dim)
            for _ in range(20):
                m = rng.integers(0, 513)
                n = rng.integers(m, 513)
                product = dense_rotation_matrix(schedule, m).T @ dense_rotation_matrix(schedule, n)
                np.testing.assert_allclose(product, dense_rotation_matrix(schedule, n - m), atol=1e-12)


class TestGrowth:

    def test_tables_double(self):
        enc = RotaryEncoder(make_schedule(4), max_pos=8)
        enc.ensure(9)
        assert enc.max_pos == 16
        enc.ensure(100)
        assert enc.max_pos == 128

    def test_grown_rows_match_fresh_tables(self):
        grown = RotaryEncoder(make_schedule(8), max_pos=4)
        grown.ensure(300)
        fresh = RotaryEncoder(make_schedule(8), max_pos=512)
        np.testing.assert_allclose(grown.cos_table[:300], fresh.cos_table[:300], atol=1e-15)
        np.testing.assert_allclose(grown.sin_table[:300], fresh.sin_table[:300], atol=1e-15)

    def test_concurrent_readers(self, rng):
        schedule = make_schedule(8)
        enc = RotaryEncoder(schedule, max_pos=2)
        x = rng.normal(8)
        positions = list(range(0, 2000, 37))

        with ThreadPoolExecutor(max_workers=8) as executor:
            results = list(executor.map(lambda m: enc.rotate(x, m), positions))

        for m, out in zip(positions, results):
            np.testing.assert_allclose(out, dense_rotation_matrix(schedule, m) @ x, atol=1e-12)


class TestRelativeScore:

    def test_equal_positions_give_inner_product(self, rng):
        schedule = make_schedule(16)
        q, k = rng.normal(16), rng.normal(16)
        assert rope_score(q, k, 7, 7, schedule) == pytest.approx(q @ k, abs=1e-12)

    def test_2d_hand_value(self):
        score = rope_score(np.array([1.0, 0.0]), np.array([1.0, 0.0]), 5, 3, make_schedule(2))
        assert score == pytest.approx(np.cos(2), abs=1e-14)

    def test_shift_invariance(self, rng):
        for dim in DIMS:
            schedule = make_schedule(dim)
            for _ in range(100):
                q, k = rng.normal(dim), rng.normal(dim)
                m, n, s = (rng.integers(0, 513) for _ in range(3))
                base = rope_score(q, k, m, n, schedule)
                assert abs(base - rope_score(q, k, m + s, n + s, schedule)) < 1e-9
                assert abs(base - relative_rope_score(q, k, n - m, schedule)) < 1e-9

    def test_score_shape_check(self):
        with pytest.raises(DimensionError):
            rope_score(np.ones(3), np.ones(4), 0, 0, make_schedule(4))


class TestComplexForm:

    def test_unit_values(self):
        one = Complex2DPair.from_complex(1 + 0j)
        assert complex_rope_score_2d(one, one, 4, 4, 0.3) == pytest.approx(1.0)
        assert complex_rope_score_2d(one, one, 1, 0, 1.0) == pytest.approx(np.cos(1), abs=1e-15)

    def test_matches_real_form(self, rng):
        schedule = make_schedule(2)
        for _ in range(1000):
            q, k = rng.normal(2), rng.normal(2)
            m, n = rng.integers(0, 65), rng.integers(0, 65)
            complex_score = complex_rope_score_2d(Complex2DPair.from_vector(q), Complex2DPair.from_vector(k), m, n, 1.0)
            assert abs(complex_score - rope_score(q, k, m, n, schedule)) < 1e-12

    def test_pair_views(self):
        pair = Complex2DPair.from_vector(np.array([3.0, 4.0]))
        assert pair.as_complex() == 3 + 4j
        assert pair.modulus == pytest.approx(5.0)
        np.testing.assert_array_equal(pair.to_vector(), [3.0, 4.0])
