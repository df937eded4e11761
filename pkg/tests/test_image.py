import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dts.image import (
    ImageError,
    as_image,
    bicubic_upsample,
    bilinear_sample,
    catmull_rom_weights,
    transpose,
    x_derivative_sample,
)


def test_bilinear_midpoint():
    img = np.array([[0.0, 10.0]], dtype=np.float32)
    assert bilinear_sample(img, 0.5, 0.0) == 5.0


def test_bilinear_integer_and_clamp():
    img = np.array([[0.0, 10.0]], dtype=np.float32)
    assert bilinear_sample(img, 1, 0) == 10.0
    assert bilinear_sample(img, -3.7, 0) == 0.0
    assert bilinear_sample(img, 5.2, 3.0) == 10.0


def test_bilinear_channel_out_of_range():
    img = np.zeros((2, 2, 3), np.float32)
    with pytest.raises(ImageError):
        bilinear_sample(img, 0, 0, ch=3)
    with pytest.raises(ImageError):
        bilinear_sample(np.zeros((2, 2), np.float32), 0, 0, ch=1)


def test_bilinear_rejects_nonfinite_coords():
    with pytest.raises(ImageError):
        bilinear_sample(np.zeros((2, 2), np.float32), np.nan, 0)


@given(arrays(np.float32, (5, 6, 2), elements=st.floats(-100, 100, width=32)))
@settings(max_examples=30, deadline=None)
def test_bilinear_exact_at_integer_coords(img):
    ys, xs = np.mgrid[0:5, 0:6]
    for ch in range(2):
        np.testing.assert_array_equal(bilinear_sample(img, xs, ys, ch), img[:, :, ch])


def test_x_derivative_constant_and_ramp():
    assert x_derivative_sample(np.full((3, 4), 7.0, np.float32), 1.4, 0.6) == 0.0
    ramp = np.array([[0.0, 2.0, 4.0]], np.float32)
    assert x_derivative_sample(ramp, 1.3, 0.0) == pytest.approx(2.0)


def test_x_derivative_matches_finite_difference():
    rng = np.random.default_rng(3)
    img = rng.random((8, 8)).astype(np.float32)
    h = 1e-3
    for _ in range(200):
        x = rng.uniform(0.05, 6.95)
        if abs(x - round(x)) < 0.01:
            continue
        y = rng.uniform(0, 7)
        fd = (bilinear_sample(img, x + h, y) - bilinear_sample(img, x - h, y)) / (2 * h)
        d = x_derivative_sample(img, x, y)
        assert abs(d - fd) <= 1e-3 * max(abs(fd), 1e-3)


def test_x_derivative_flat_outside():
    img = np.array([[0.0, 2.0, 4.0]], np.float32)
    assert x_derivative_sample(img, -0.5, 0) == 0.0
    assert x_derivative_sample(img, 2.5, 0) == 0.0


def test_catmull_rom_weights_partition_unity():
    t = np.linspace(0, 1, 11)
    np.testing.assert_allclose(catmull_rom_weights(t).sum(axis=-1), 1.0, atol=1e-12)


def test_bicubic_identity_factor_one():
    img = np.random.default_rng(0).random((5, 4, 3)).astype(np.float32)
    out = bicubic_upsample(img, 1)
    assert out is not img
    np.testing.assert_array_equal(out, img)


@pytest.mark.parametrize("factor", [2, 3, 4, 8])
def test_bicubic_constant(factor):
    img = np.full((3, 5), 4.25, np.float32)
    out = bicubic_upsample(img, factor)
    assert out.shape == (3 * factor, 5 * factor)
    np.testing.assert_allclose(out, 4.25, atol=1e-6)


def test_bicubic_reproduces_linear_interior():
    ramp = np.array([[0.0, 1.0, 2.0, 3.0]], np.float32)
    out = bicubic_upsample(ramp, 2)[0]
    # low-res sample k sits at 2k + 0.5, so high-res p is at u = (p - 0.5) / 2
    p = np.arange(8)
    u = (p - 0.5) / 2
    interior = (u >= 1) & (u <= 2)  # all four taps inside the image
    np.testing.assert_allclose(out[interior], u[interior], atol=1e-5)


def test_bicubic_sample_alignment():
    # direct evaluation of the kernel at one output pixel
    rng = np.random.default_rng(1)
    row = rng.random((1, 6)).astype(np.float32)
    out = bicubic_upsample(row, 4)[0]
    p = 13
    u = (p - 1.5) / 4
    k = int(np.floor(u))
    w = catmull_rom_weights(u - k)
    taps = row[0, np.clip(np.arange(k - 1, k + 3), 0, 5)]
    assert out[p] == pytest.approx(float(np.dot(w, taps)), abs=1e-6)


def test_bicubic_overshoot_bound():
    rng = np.random.default_rng(2)
    img = rng.random((6, 6)).astype(np.float32)
    out = bicubic_upsample(img, 4)
    span = img.max() - img.min()
    # Catmull-Rom negative lobes total 0.125 per axis
    assert out.max() <= img.max() + 0.3 * span
    assert out.min() >= img.min() - 0.3 * span


def test_bicubic_rejects_zero_factor():
    with pytest.raises(ImageError):
        bicubic_upsample(np.zeros((2, 2), np.float32), 0)


def test_transpose_cases():
    one = np.array([[3.0]], np.float32)
    np.testing.assert_array_equal(transpose(one), one)
    img = np.arange(6, dtype=np.float32).reshape(3, 2)  # 2 wide, 3 tall
    t = transpose(img)
    assert t.shape == (2, 3)
    for y in range(3):
        for x in range(2):
            assert t[x, y] == img[y, x]


@given(arrays(np.float32, st.tuples(st.integers(1, 6), st.integers(1, 6), st.integers(1, 3)),
              elements=st.floats(-1e6, 1e6, width=32)))
@settings(max_examples=30, deadline=None)
def test_transpose_involution(img):
    np.testing.assert_array_equal(transpose(transpose(img)), img)
    assert transpose(img).flags.c_contiguous


def test_as_image_rejects_nan():
    with pytest.raises(ImageError):
        as_image(np.array([[np.nan]]))
    with pytest.raises(ImageError):
        as_image(np.zeros(3))
