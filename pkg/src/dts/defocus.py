"""Layered shallow depth-of-field rendering from a color image and a disparity map.

Disparity is split into equal-width layers; each layer is disc-blurred as a
premultiplied RGBA image and composited back to front (small disparity is
far). A thin-lens proxy gives the blur radius: ``aperture * |d - d_focus|``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage, signal

from .image import ImageError, as_channels_last, as_image

ALPHA_FLOOR = 1e-3
_FFT_MIN_TAPS = 15  # kernels wider than this go through FFT convolution
_FFT_NOISE = 1e-6


@dataclass(frozen=True)
class DefocusParams:
    focal_disparity: float
    aperture: float = 0.5
    layers: int = 32

    def __post_init__(self):
        if not (np.isfinite(self.aperture) and self.aperture >= 0):
            raise ValueError(f"aperture must be finite and >= 0, got {self.aperture}")
        if int(self.layers) != self.layers or self.layers < 2:
            raise ValueError(f"layers must be an integer >= 2, got {self.layers}")


def blur_radius_map(disparity, params: DefocusParams) -> np.ndarray:
    d = np.asarray(disparity, dtype=np.float32)
    return (np.float32(params.aperture) * np.abs(d - np.float32(params.focal_disparity))).astype(np.float32)


def disc_kernel(radius: float) -> np.ndarray:
    """Normalized disc: taps whose pixel center lies within `radius`."""
    r = int(np.floor(radius))
    yy, xx = np.mgrid[-r : r + 1, -r : r + 1]
    k = (xx * xx + yy * yy <= radius * radius).astype(np.float64)
    return k / k.sum()


def disc_blur(img: np.ndarray, radius: float) -> np.ndarray:
    """Disc blur with clamp-to-edge borders, channel by channel."""
    k = disc_kernel(radius)
    if k.shape[0] == 1:
        return np.array(img, dtype=np.float64)
    src = np.asarray(img, dtype=np.float64)
    if k.shape[0] <= _FFT_MIN_TAPS:
        if src.ndim == 2:
            return ndimage.correlate(src, k, mode="nearest")
        return np.stack([ndimage.correlate(src[..., c], k, mode="nearest") for c in range(src.shape[2])], axis=-1)
    r = k.shape[0] // 2
    pad = ((r, r), (r, r)) + ((0, 0),) * (src.ndim - 2)
    padded = np.pad(src, pad, mode="edge")
    kk = k if src.ndim == 2 else k[:, :, None]
    out = signal.fftconvolve(padded, kk, mode="valid", axes=(0, 1))
    out[np.abs(out) < _FFT_NOISE] = 0.0
    return out


def layer_indices(disparity: np.ndarray, layers: int) -> np.ndarray:
    d = np.asarray(disparity, dtype=np.float64)
    lo, hi = float(d.min()), float(d.max())
    if hi <= lo:
        return np.zeros(d.shape, dtype=np.intp)
    idx = np.floor((d - lo) / (hi - lo) * layers).astype(np.intp)
    return np.clip(idx, 0, layers - 1)


def render_defocus(color, disparity, params: DefocusParams) -> np.ndarray:
    color = as_image(color, "color")
    disparity = as_image(disparity, "disparity")
    if disparity.ndim != 2 or color.shape[:2] != disparity.shape:
        raise ImageError(f"color {color.shape} and disparity {disparity.shape} must share (H, W)")
    rgb = as_channels_last(color).astype(np.float64)
    radius = blur_radius_map(disparity, params)
    idx = layer_indices(disparity, params.layers)

    acc_rgb = np.zeros_like(rgb)
    acc_a = np.zeros(disparity.shape)
    for layer in range(params.layers):  # far (small disparity) to near
        mask = idx == layer
        if not mask.any():
            continue
        r = float(radius[mask].mean())
        alpha = mask.astype(np.float64)
        premult = rgb * alpha[:, :, None]
        if disc_kernel(r).shape[0] > 1:
            premult = disc_blur(premult, r)
            alpha = disc_blur(alpha, r)
        acc_rgb = premult + (1.0 - alpha)[:, :, None] * acc_rgb
        acc_a = alpha + (1.0 - alpha) * acc_a

    covered = acc_a > ALPHA_FLOOR
    safe = np.where(covered, acc_a, 1.0)
    out = np.where(covered[:, :, None], acc_rgb / safe[:, :, None], rgb)
    out = out.astype(np.float32)
    return out[:, :, 0] if color.ndim == 2 else out
