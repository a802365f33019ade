import numpy as np
import pytest
import scipy.fft
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

import masolver as ms


class TestMeasure:
    def test_clean_measurement_is_forward_application(self):
        rng = np.random.default_rng(50)
        op = ms.build_block_downsample(1, 4, 4, 2)
        x = rng.uniform(0, 1, 16)
        assert_allclose(ms.measure(op, x, ms.CorruptionSpec.none(), rng), op.apply(x))

    def test_gaussian_noise_scale(self):
        rng = np.random.default_rng(51)
        op = ms.build_identity(1, 100, 1000)
        x = np.zeros(10**5)
        y = ms.measure(op, x, ms.CorruptionSpec.gaussian(0.05), rng)
        emp = y.std()
        se = 0.05 / np.sqrt(2 * 10**5)
        assert abs(emp - 0.05) <= 3 * se

    def test_salt_pepper_exact_count_and_values(self):
        rng = np.random.default_rng(52)
        op = ms.build_identity(1, 10, 10)
        x = np.full(100, 0.5)
        y = ms.measure(op, x, ms.CorruptionSpec.salt_pepper(0.10), rng)
        changed = y != 0.5
        assert changed.sum() == round(0.10 * 100)
        assert set(np.unique(y[changed])) <= {-1.0, 1.0}

    def test_salt_pepper_reproducible(self):
        op = ms.build_identity(1, 8, 8)
        x = np.full(64, 0.3)
        spec = ms.CorruptionSpec.salt_pepper(0.2)
        a = ms.measure(op, x, spec, np.random.default_rng(7))
        b = ms.measure(op, x, spec, np.random.default_rng(7))
        assert np.array_equal(a, b)

    def test_salt_pepper_clip_option(self):
        rng = np.random.default_rng(53)
        op = ms.build_identity(1, 8, 8)
        x = np.full(64, 0.5)
        y = ms.measure(op, x, ms.CorruptionSpec.salt_pepper(0.3, clip=True), rng)
        assert y.min() >= 0.0 and y.max() <= 1.0

    def test_structured_corruptions_need_image_shape(self):
        rng = np.random.default_rng(54)
        op = ms.build_mask((1, 2, 2), [True, False, True, True])
        with pytest.raises(ValueError, match="image-shaped"):
            ms.measure(op, np.zeros(4), ms.CorruptionSpec.periodic(0.2, 5.0), rng)


class TestPeriodicNoise:
    def test_zero_amplitude(self):
        assert_allclose(ms.periodic_noise((1, 8, 8), 0.0, 5.0), 0.0)

    def test_amplitude_bound_attained(self):
        # height 20, frequency 5: the grid hits sin = 1 exactly at row 1
        field = ms.periodic_noise((1, 20, 8), 0.2, 5.0)
        assert abs(np.abs(field).max() - 0.2) <= 1e-12

    def test_whole_period_rows_average_to_zero(self):
        field = ms.periodic_noise((1, 20, 8), 0.2, 5.0).reshape(1, 20, 8)
        assert abs(field.sum()) <= 1e-12

    def test_column_axis(self):
        field = ms.periodic_noise((1, 4, 20), 0.2, 5.0, axis="col").reshape(1, 4, 20)
        # constant along rows, varying along columns
        assert_allclose(field[0, 0, :], field[0, 3, :])
        assert not np.allclose(field[0, :, 0], field[0, :, 1])


class TestQuantize:
    def test_one_bit_threshold(self):
        assert ms.quantize(np.array([0.3]), 1)[0] == 0.0
        assert ms.quantize(np.array([0.7]), 1)[0] == 1.0
        assert ms.quantize(np.array([0.5]), 1)[0] == 0.0  # tie goes down

    def test_two_bit_levels(self):
        assert_allclose(ms.quantize(np.array([0.3]), 2)[0], 1.0 / 3.0, atol=1e-15)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-0.5, 1.5, allow_nan=False), min_size=1, max_size=32),
           st.integers(1, 4))
    def test_idempotent_and_on_grid(self, values, bits):
        v = np.array(values)
        q = ms.quantize(v, bits)
        assert np.array_equal(ms.quantize(q, bits), q)
        levels = np.arange(2**bits) / (2**bits - 1)
        assert np.all(np.isin(q, levels))


class TestDctQuantize:
    def test_zero_proxy_is_identity(self):
        rng = np.random.default_rng(55)
        img = rng.uniform(0, 1, (1, 16, 16))
        assert np.array_equal(ms.dct_quantize(img, 0.0), img)

    def test_vanishing_proxy_is_identity_limit(self):
        rng = np.random.default_rng(56)
        img = rng.uniform(0, 1, (1, 16, 16))
        assert np.abs(ms.dct_quantize(img, 1e-9) - img).max() <= 1e-8

    def test_constant_image_survives(self):
        img = np.full((1, 8, 8), 0.42)
        out = ms.dct_quantize(img, 1.0)
        assert_allclose(out, out[0, 0, 0])
        assert abs(out[0, 0, 0] - 0.42) < 0.1  # DC quantization step only

    def test_blockwise_transform_round_trip_oracle(self):
        # the underlying orthonormal transform must reconstruct exactly
        rng = np.random.default_rng(57)
        block = rng.standard_normal((8, 8))
        coeff = scipy.fft.dctn(block, type=2, norm="ortho")
        back = scipy.fft.idctn(coeff, type=2, norm="ortho")
        assert np.abs(back - block).max() <= 1e-9

    def test_padding_for_odd_sizes(self):
        rng = np.random.default_rng(58)
        img = rng.uniform(0, 1, (1, 12, 20))
        out = ms.dct_quantize(img, 0.5)
        assert out.shape == img.shape

    def test_strong_quantization_loses_detail(self):
        rng = np.random.default_rng(59)
        img = rng.uniform(0, 1, (1, 16, 16))
        weak = ms.dct_quantize(img, 0.2)
        strong = ms.dct_quantize(img, 4.0)
        err_weak = np.abs(weak - img).mean()
        err_strong = np.abs(strong - img).mean()
        assert err_strong > err_weak


class TestCorruptionSpecValidation:
    def test_fraction_range(self):
        with pytest.raises(ValueError, match="fraction"):
            ms.CorruptionSpec.salt_pepper(1.5)

    def test_bits_floor(self):
        with pytest.raises(ValueError, match="bits"):
            ms.CorruptionSpec.quantize(0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="kind"):
            ms.CorruptionSpec(kind="speckle")
