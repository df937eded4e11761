"""Disparity refinement against a rectified stereo pair.

Disparity is referenced to the left image: pixel ``(x, y)`` in the left
image matches ``(x - d, y)`` in the right image.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from numba import njit, prange

from .domain_transform import DomainTransform, confidence_from_variance, edge_aware_variance
from .image import ImageError, as_channels_last, as_image, bilinear_sample, channels, x_derivative_sample
from .solver import DataTerm, ProblemInstance, SolverConfig, solve


@dataclass
class StereoInputs:
    left: np.ndarray
    right: np.ndarray
    target_disparity: np.ndarray
    gamma: float = 0.001
    disparity_range: Tuple[float, float] = (0.0, np.inf)
    valid: Optional[np.ndarray] = None  # 0 where the target is unknown

    def __post_init__(self):
        self.left = as_image(self.left, "left")
        self.right = as_image(self.right, "right")
        self.target_disparity = as_image(self.target_disparity, "target_disparity")
        if self.left.shape != self.right.shape:
            raise ImageError(f"left {self.left.shape} and right {self.right.shape} differ")
        if self.target_disparity.shape != self.left.shape[:2]:
            raise ImageError("target disparity must match the image size")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        lo, hi = self.disparity_range
        if not lo <= hi:
            raise ValueError(f"empty disparity range {self.disparity_range}")
        if self.valid is not None:
            self.valid = np.asarray(self.valid, dtype=np.float32)
            if self.valid.shape != self.target_disparity.shape:
                raise ImageError("valid mask must match the target size")
        self.target_disparity = np.clip(self.target_disparity, lo, hi).astype(np.float32)


@njit(parallel=True, cache=True)
def _photometric_rows(left, right, z):
    """Per-pixel ``1/2 sum (I_L - I_R(x - z))^2`` and ``sum (I_L - I_R) * dI_R/dx``."""
    h, w, nch = left.shape
    value = np.empty((h, w), dtype=np.float32)
    deriv = np.empty((h, w), dtype=np.float32)
    for y in prange(h):
        for x in range(w):
            xr = x - np.float64(z[y, x])
            inside = xr >= 0.0 and xr <= w - 1
            xc = min(max(xr, 0.0), w - 1.0)
            k = min(int(np.floor(xc)), max(w - 2, 0))
            f = xc - k
            k1 = min(k + 1, w - 1)
            v = 0.0
            d = 0.0
            for c in range(nch):
                a = np.float64(right[y, k, c])
                b = np.float64(right[y, k1, c])
                diff = np.float64(left[y, x, c]) - ((1.0 - f) * a + f * b)
                v += diff * diff
                if inside:
                    d += diff * (b - a)
            value[y, x] = 0.5 * v
            deriv[y, x] = d
    return value, deriv


def photometric_term(inputs: StereoInputs, pixel, z: float):
    """Weighted photometric cost and its z-derivative at one pixel.

    value = gamma/2 * sum_ch (I_L - I_R(x - z))^2
    """
    x, y = pixel
    value = 0.0
    deriv = 0.0
    for ch in range(channels(inputs.left)):
        lv = float(as_channels_last(inputs.left)[y, x, ch])
        diff = lv - bilinear_sample(inputs.right, x - z, y, ch)
        value += diff * diff
        # d/dz I_R(x - z) = -dI_R/dx, and d/dz (diff^2) / 2 = -diff * d/dz I_R
        deriv += diff * x_derivative_sample(inputs.right, x - z, y, ch)
    return 0.5 * inputs.gamma * value, inputs.gamma * deriv


def photometric_data_term(inputs: StereoInputs) -> DataTerm:
    """Vectorized photometric term with unit weight inside, ``gamma`` as the solver weight."""
    left = np.ascontiguousarray(as_channels_last(inputs.left))
    right = np.ascontiguousarray(as_channels_last(inputs.right))

    def evaluate(z):
        return _photometric_rows(left, right, np.ascontiguousarray(z, dtype=np.float32))

    return DataTerm(evaluate=evaluate, weight=inputs.gamma)


def target_confidence(inputs: StereoInputs, cfg: SolverConfig, transform: DomainTransform | None = None):
    dt = transform if transform is not None else DomainTransform(inputs.left, cfg.dt)
    var = edge_aware_variance(inputs.target_disparity, inputs.left, cfg.dt, transform=dt)
    conf = confidence_from_variance(var, cfg.sigma_c)
    if inputs.valid is not None:
        conf = conf * (inputs.valid > 0)
    return conf.astype(np.float32)


def _fill_unknown(target, valid, dt):
    # normalized edge-aware mean of the known values; leaves known pixels as they are
    v = valid.astype(np.float64)
    num = dt.mean(target.astype(np.float64) * v)
    den = dt.mean(v)
    filled = np.where(den > 0, num / np.maximum(den, 1e-12), 0.0)
    return np.where(v > 0, target, filled).astype(np.float32)


def refine_disparity(inputs: StereoInputs, cfg: SolverConfig, callback=None) -> np.ndarray:
    """Refine the target disparity; output is clamped to ``inputs.disparity_range``."""
    cfg = dataclasses.replace(cfg, use_charbonnier=True)
    dt = DomainTransform(inputs.left, cfg.dt)
    target = inputs.target_disparity
    if inputs.valid is not None and not np.all(inputs.valid > 0):
        target = _fill_unknown(target, inputs.valid, dt)
        inputs = dataclasses.replace(inputs, target_disparity=target)
    conf = target_confidence(inputs, cfg, dt)
    term = photometric_data_term(inputs) if inputs.gamma > 0 else None
    problem = ProblemInstance(target=target, confidence=conf, guide=inputs.left, data_term=term)
    z = solve(problem, cfg, callback=callback, transform=dt)
    lo, hi = inputs.disparity_range
    return np.clip(z, lo, hi).astype(np.float32)
