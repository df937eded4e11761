import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dts.domain_transform import DtParams
from dts.image import ImageError, bicubic_upsample
from dts.solver import SolverConfig
from dts.superres import SuperresInputs, bump_weight, gaussian_bump_confidence, superresolve
from dts.synthetic import piecewise_depth_scene, random_guide


def rms(a):
    return float(np.sqrt(np.mean(np.square(a, dtype=np.float64))))


def test_bump_values():
    assert bump_weight(0.0, 4) == 1.0
    assert bump_weight(math.sqrt(2), 4) == pytest.approx(math.exp(-1))


def test_bump_confidence_centers_and_example():
    c = gaussian_bump_confidence(4, (8, 8))
    # centers at 1.5: pixel (0, 0) is sqrt(1.5^2 + 1.5^2) away
    assert c[0, 0] == pytest.approx(math.exp(-(1.5 ** 2 * 2) / 2), rel=1e-6)
    c3 = gaussian_bump_confidence(3, (6, 6))
    assert c3[1, 1] == 1.0 and c3[4, 4] == 1.0
    assert c3[0, 0] == pytest.approx(math.exp(-2 / (2 * 0.75 ** 2)), rel=1e-6)


@given(st.integers(1, 9), st.integers(1, 40), st.integers(1, 40))
@settings(max_examples=40, deadline=None)
def test_bump_confidence_periodic_and_bounded(f, h, w):
    c = gaussian_bump_confidence(f, (h, w))
    assert c.shape == (h, w)
    assert np.all(c > 0) and np.all(c <= 1)
    if h > f:
        np.testing.assert_array_equal(c[f:], c[:-f])
    if w > f:
        np.testing.assert_array_equal(c[:, f:], c[:, :-f])
    if f % 2 == 1 and h >= f and w >= f:
        assert c.max() == 1.0


def test_factor_one_confidence_is_one():
    np.testing.assert_array_equal(gaussian_bump_confidence(1, (3, 4)), 1.0)


def test_inputs_validation():
    with pytest.raises(ImageError):
        SuperresInputs(np.zeros((4, 4)), np.zeros((15, 16, 3)), 4)
    with pytest.raises(ValueError):
        SuperresInputs(np.zeros((4, 4)), np.zeros((16, 16, 3)), 0)


def test_factor_one_zero_iterations_identity():
    rng = np.random.default_rng(0)
    low = rng.random((6, 7)).astype(np.float32)
    inp = SuperresInputs(low, random_guide(rng, 6, 7), 1)
    out = superresolve(inp, SolverConfig(iterations=0, use_charbonnier=False))
    np.testing.assert_array_equal(out, low)


@pytest.mark.parametrize("factor", [2, 4, 8])
def test_constant_depth_stays_constant(factor):
    rng = np.random.default_rng(factor)
    low = np.full((5, 6), 37.5, np.float32)
    inp = SuperresInputs(low, random_guide(rng, 5 * factor, 6 * factor), factor)
    out = superresolve(inp)
    assert out.shape == (5 * factor, 6 * factor)
    np.testing.assert_allclose(out, 37.5, atol=1e-4)


def test_default_config_follows_factor():
    cfg = SolverConfig.superres(8)
    assert cfg.dt.sigma_x == cfg.dt.sigma_y == 160
    assert cfg.dt.sigma_r == 0.25 and cfg.iterations == 10 and cfg.step == 0.99


def test_synthetic_scene_beats_bicubic():
    scene = piecewise_depth_scene()
    out = superresolve(SuperresInputs(scene.low_depth, scene.guide, scene.factor))
    bic = bicubic_upsample(scene.low_depth, scene.factor)
    assert rms(out - scene.ground_truth) <= 0.7 * rms(bic - scene.ground_truth)


def test_output_within_local_target_range():
    scene = piecewise_depth_scene(low_size=16, factor=4, seed=2)
    params = DtParams(8, 8, 0.25)
    cfg = SolverConfig(iterations=10, use_charbonnier=False, dt=params)
    out = superresolve(SuperresInputs(scene.low_depth, scene.guide, scene.factor), cfg)
    bic = bicubic_upsample(scene.low_depth, scene.factor)
    assert out.min() >= bic.min() - 1e-3 and out.max() <= bic.max() + 1e-3
