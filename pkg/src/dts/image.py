"""Float raster helpers shared by every pipeline.

Images are plain numpy arrays: ``(H, W)`` for single-channel data and
``(H, W, C)`` for multi-channel data, stored as contiguous float32.
Borders are clamp-to-edge everywhere.
"""

from __future__ import annotations

import numpy as np


class ImageError(ValueError):
    pass


def as_image(a, name="image") -> np.ndarray:
    """Return `a` as a contiguous float32 array, rejecting bad shapes or non-finite data."""
    arr = np.ascontiguousarray(a, dtype=np.float32)
    if arr.ndim not in (2, 3) or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ImageError(f"{name}: expected (H, W) or (H, W, C) array, got shape {arr.shape}")
    if arr.ndim == 3 and arr.shape[2] < 1:
        raise ImageError(f"{name}: zero channels")
    if not np.all(np.isfinite(arr)):
        raise ImageError(f"{name}: contains NaN or Inf")
    return arr


def channels(img: np.ndarray) -> int:
    return 1 if img.ndim == 2 else img.shape[2]


def as_channels_last(img: np.ndarray) -> np.ndarray:
    """View a 2-D image as ``(H, W, 1)``."""
    return img[:, :, None] if img.ndim == 2 else img


def _plane(img, ch):
    n = channels(img)
    if not 0 <= ch < n:
        raise ImageError(f"channel {ch} out of range for {n}-channel image")
    return img if img.ndim == 2 else img[:, :, ch]


def _cell(coord, size):
    """Clamp `coord` to the image and split into (lower index, fraction)."""
    c = np.clip(np.asarray(coord, dtype=np.float64), 0.0, size - 1)
    if size == 1:
        return np.zeros(c.shape, dtype=np.intp), np.zeros_like(c)
    k = np.minimum(np.floor(c).astype(np.intp), size - 2)
    return k, c - k


def bilinear_sample(img: np.ndarray, x, y, ch: int = 0):
    """Bilinearly interpolate channel `ch` at continuous pixel coordinates.

    `x` and `y` may be scalars or broadcastable arrays. Integer coordinates
    return stored values exactly.
    """
    plane = _plane(img, ch)
    h, w = plane.shape
    x, y = np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ImageError("sample coordinates must be finite")
    x0, fx = _cell(x, w)
    y0, fy = _cell(y, h)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    p = plane.astype(np.float64, copy=False)
    top = (1.0 - fx) * p[y0, x0] + fx * p[y0, x1]
    bot = (1.0 - fx) * p[y1, x0] + fx * p[y1, x1]
    out = (1.0 - fy) * top + fy * bot
    return float(out) if out.ndim == 0 else out


def x_derivative_sample(img: np.ndarray, x, y, ch: int = 0):
    """Horizontal derivative of the bilinear surface at `(x, y)`.

    Inside cell ``[k, k+1)`` this is the y-interpolated difference
    ``img[., k+1] - img[., k]``; the last column reuses the final cell.
    Outside ``[0, W-1]`` the clamped surface is flat, so the result is 0.
    """
    plane = _plane(img, ch)
    h, w = plane.shape
    x, y = np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ImageError("sample coordinates must be finite")
    if w == 1:
        out = np.zeros(x.shape)
        return float(out) if out.ndim == 0 else out
    x0, _ = _cell(x, w)
    y0, fy = _cell(y, h)
    y1 = np.minimum(y0 + 1, h - 1)
    p = plane.astype(np.float64, copy=False)
    d_top = p[y0, x0 + 1] - p[y0, x0]
    d_bot = p[y1, x0 + 1] - p[y1, x0]
    out = (1.0 - fy) * d_top + fy * d_bot
    out = np.where((x < 0.0) | (x > w - 1), 0.0, out)
    return float(out) if out.ndim == 0 else out


def catmull_rom_weights(t):
    """Catmull-Rom (a = -0.5) weights for taps at offsets -1, 0, 1, 2."""
    t = np.asarray(t, dtype=np.float64)
    t2 = t * t
    t3 = t2 * t
    return np.stack(
        [
            0.5 * (-t3 + 2.0 * t2 - t),
            0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
            0.5 * (-3.0 * t3 + 4.0 * t2 + t),
            0.5 * (t3 - t2),
        ],
        axis=-1,
    )


def _upsample_matrix(n_in: int, factor: int) -> np.ndarray:
    # low-res sample k sits at high-res coordinate k*factor + (factor-1)/2
    p = np.arange(n_in * factor, dtype=np.float64)
    u = (p - (factor - 1) / 2.0) / factor
    base = np.floor(u).astype(np.intp)
    wts = catmull_rom_weights(u - base)
    m = np.zeros((n_in * factor, n_in))
    rows = np.arange(n_in * factor)
    for tap in range(4):
        idx = np.clip(base + tap - 1, 0, n_in - 1)
        np.add.at(m, (rows, idx), wts[:, tap])
    return m


def bicubic_upsample(img: np.ndarray, factor: int) -> np.ndarray:
    """Upsample by an integer factor with a separable Catmull-Rom kernel."""
    if int(factor) != factor or factor < 1:
        raise ImageError(f"factor must be an integer >= 1, got {factor}")
    factor = int(factor)
    img = np.asarray(img, dtype=np.float32)
    if factor == 1:
        return img.copy()
    h, w = img.shape[:2]
    my = _upsample_matrix(h, factor)
    mx = _upsample_matrix(w, factor)
    src = as_channels_last(img).astype(np.float64)
    out = np.einsum("ph,hwc,qw->pqc", my, src, mx, optimize=True)
    out = out.astype(np.float32)
    return out[:, :, 0] if img.ndim == 2 else out


def transpose(img: np.ndarray) -> np.ndarray:
    """Swap x and y, keeping channels last."""
    return np.ascontiguousarray(np.swapaxes(img, 0, 1))


def normalize_rgb(img: np.ndarray) -> np.ndarray:
    """Rescale 8-bit-range color data into [0, 1]; data already in range is returned as float32."""
    arr = np.asarray(img, dtype=np.float32)
    if arr.size and arr.max() > 1.0:
        arr = arr / 255.0
    return np.clip(arr, 0.0, 1.0)
