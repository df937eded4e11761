"""Procedural scenes with known ground truth for tests, benchmarks and reports."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FAR_COLOR = np.array([0.15, 0.3, 0.75])
NEAR_COLOR = np.array([0.9, 0.6, 0.1])


@dataclass
class StereoScene:
    left: np.ndarray
    right: np.ndarray
    ground_truth: np.ndarray
    target: np.ndarray
    edge_x: int
    d_far: float
    d_near: float


def _texture(u, y, color, amp):
    # smooth so the bilinear slope of the right image is informative
    t = np.sin(0.45 * u + 0.3 * y)[..., None] * np.array([1.0, -0.7, 0.5]) + np.cos(0.21 * u - 0.37 * y)[..., None] * 0.6
    return np.clip(color + amp * t, 0.0, 1.0)


def two_plane_stereo(height=24, width=32, d_far=4.0, d_near=10.0, noise=0.5, seed=0,
                     texture=0.05) -> StereoScene:
    """Far plane on the left, near plane on the right, with a color edge at the depth edge."""
    rng = np.random.default_rng(seed)
    edge = width // 2
    y, x = np.mgrid[0:height, 0:width].astype(np.float64)
    near = x >= edge
    gt = np.where(near, d_near, d_far)
    left = np.where(near[..., None], _texture(x, y, NEAR_COLOR, texture), _texture(x, y, FAR_COLOR, texture))
    # right pixel xr shows the left surface point at xr + d; the near plane occludes
    u_near = x + d_near
    u_far = x + d_far
    sees_near = u_near >= edge
    right = np.where(sees_near[..., None], _texture(u_near, y, NEAR_COLOR, texture),
                     _texture(u_far, y, FAR_COLOR, texture))
    target = gt + rng.normal(0.0, noise, gt.shape)
    return StereoScene(
        left=left.astype(np.float32),
        right=right.astype(np.float32),
        ground_truth=gt.astype(np.float32),
        target=target.astype(np.float32),
        edge_x=edge,
        d_far=d_far,
        d_near=d_near,
    )


def stereo_scene_megapixels(mp: float, seed=0, noise=1.0) -> StereoScene:
    """4:3 two-plane scene with about `mp` megapixels."""
    h = int(round(np.sqrt(mp * 1e6 * 3 / 4)))
    w = int(round(h * 4 / 3))
    return two_plane_stereo(height=h, width=w, d_far=8.0, d_near=24.0, noise=noise, seed=seed)


@dataclass
class DepthScene:
    guide: np.ndarray
    ground_truth: np.ndarray
    low_depth: np.ndarray
    factor: int


_REGION_COLORS = np.array(
    [[0.85, 0.2, 0.2], [0.2, 0.75, 0.3], [0.25, 0.3, 0.9], [0.9, 0.85, 0.2], [0.6, 0.2, 0.7]]
)


def piecewise_depth_scene(low_size=32, factor=8, noise=2.0, seed=0) -> DepthScene:
    """Piecewise-constant depth with region edges that coincide with guide color edges.

    Region boundaries are not aligned with the low-res blocks.
    """
    rng = np.random.default_rng(seed)
    n = low_size * factor
    y, x = np.mgrid[0:n, 0:n].astype(np.float64) / n
    label = np.zeros((n, n), dtype=np.intp)
    label[(x > 0.37) & (y < 0.61)] = 1
    label[(x - 0.3) ** 2 + (y - 0.72) ** 2 < 0.18 ** 2] = 2
    label[(x > 0.66) & (y > 0.52) & (x + y < 1.55)] = 3
    label[(np.abs(x - 0.2) < 0.09) & (np.abs(y - 0.23) < 0.13)] = 4
    depths = np.array([40.0, 90.0, 140.0, 65.0, 180.0])
    gt = depths[label]
    guide = _REGION_COLORS[label] + rng.normal(0.0, 0.01, (n, n, 3))
    low = gt.reshape(low_size, factor, low_size, factor).mean(axis=(1, 3))
    low = low + rng.normal(0.0, noise, low.shape)
    return DepthScene(
        guide=np.clip(guide, 0, 1).astype(np.float32),
        ground_truth=gt.astype(np.float32),
        low_depth=low.astype(np.float32),
        factor=factor,
    )


def random_guide(rng, height, width, channels=3, blocks=4):
    """Blocky random color image plus fine noise: strong and weak edges."""
    coarse = rng.random((blocks, blocks, channels))
    ys = np.minimum(np.arange(height) * blocks // height, blocks - 1)
    xs = np.minimum(np.arange(width) * blocks // width, blocks - 1)
    img = coarse[ys][:, xs] + 0.05 * rng.standard_normal((height, width, channels))
    return np.clip(img, 0, 1).astype(np.float32)
