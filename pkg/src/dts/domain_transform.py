"""Scanline domain transform and O(n) edge-aware box statistics.

Each scanline of the guide is warped to a 1-D coordinate ``t`` whose
increments measure joint pixel/color distance. Edge-aware windows are then
intervals ``|t[j] - t[i]| <= radius`` and are evaluated with prefix sums and
two monotone pointers, so cost does not depend on the radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .image import ImageError, as_channels_last, as_image, transpose

DEFAULT_RADIUS_SCALE = math.sqrt(3.0)


@dataclass(frozen=True)
class DtParams:
    """Spatial/range scales of the transform.

    The box radius along an axis is ``radius_scale * sigma``; the default
    sqrt(3) gives the box the same variance as a Gaussian of std ``sigma``.
    """

    sigma_x: float = 64.0
    sigma_y: float = 64.0
    sigma_r: float = 0.25
    radius_scale: float = DEFAULT_RADIUS_SCALE

    def __post_init__(self):
        for name in ("sigma_x", "sigma_y", "sigma_r"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")
        if not (math.isfinite(self.radius_scale) and self.radius_scale >= 0):
            raise ValueError(f"radius_scale must be >= 0, got {self.radius_scale}")

    @property
    def radius_x(self) -> float:
        return self.radius_scale * self.sigma_x

    @property
    def radius_y(self) -> float:
        return self.radius_scale * self.sigma_y


def warp_row(guide_row, sigma_s: float, sigma_r: float) -> np.ndarray:
    """Cumulative transform of one scanline of colors, shape ``(n,)`` or ``(n, c)``."""
    row = np.asarray(guide_row, dtype=np.float64)
    if row.ndim == 1:
        row = row[:, None]
    if row.shape[0] < 1:
        raise ImageError("empty row")
    if not np.all(np.isfinite(row)):
        raise ImageError("guide colors must be finite")
    return warp_rows(row[None], sigma_s, sigma_r)[0]


def warp_rows(guide: np.ndarray, sigma_s: float, sigma_r: float) -> np.ndarray:
    """Warp every row of an ``(H, W[, C])`` guide; returns float64 ``(H, W)``."""
    g = as_channels_last(np.asarray(guide, dtype=np.float64))
    ratio2 = (sigma_s / sigma_r) ** 2
    d2 = np.sum(np.diff(g, axis=1) ** 2, axis=2)
    inc = np.sqrt(1.0 + ratio2 * d2)
    t = np.zeros(g.shape[:2])
    np.cumsum(inc, axis=1, out=t[:, 1:])
    return t


@njit(cache=True, nogil=True)
def _mean_row(values, t, radius, out):
    n = values.shape[0]
    prefix = np.empty(n + 1)
    prefix[0] = 0.0
    for i in range(n):
        prefix[i + 1] = prefix[i] + values[i]
    lo = 0
    hi = 0
    for i in range(n):
        while t[i] - t[lo] > radius:
            lo += 1
        if hi < i:
            hi = i
        while hi + 1 < n and t[hi + 1] - t[i] <= radius:
            hi += 1
        if hi == lo:
            out[i] = values[i]
        else:
            out[i] = (prefix[hi + 1] - prefix[lo]) / (hi + 1 - lo)


@njit(cache=True, nogil=True)
def _weighted_mean_row(values, weights, t, radius, out):
    n = values.shape[0]
    pv = np.empty(n + 1)
    pw = np.empty(n + 1)
    pv[0] = 0.0
    pw[0] = 0.0
    for i in range(n):
        pv[i + 1] = pv[i] + weights[i] * values[i]
        pw[i + 1] = pw[i] + weights[i]
    lo = 0
    hi = 0
    for i in range(n):
        while t[i] - t[lo] > radius:
            lo += 1
        if hi < i:
            hi = i
        while hi + 1 < n and t[hi + 1] - t[i] <= radius:
            hi += 1
        wsum = pw[hi + 1] - pw[lo]
        if hi == lo:
            out[i] = values[i]
        elif wsum > 0.0:
            out[i] = (pv[hi + 1] - pv[lo]) / wsum
        else:
            out[i] = values[i]


@njit(cache=True, nogil=True)
def _count_row(t, radius, out):
    n = t.shape[0]
    lo = 0
    hi = 0
    for i in range(n):
        while t[i] - t[lo] > radius:
            lo += 1
        if hi < i:
            hi = i
        while hi + 1 < n and t[hi + 1] - t[i] <= radius:
            hi += 1
        out[i] = hi + 1 - lo


@njit(parallel=True, cache=True)
def _mean_rows(values, t, radius):
    out = np.empty_like(values)
    for r in prange(values.shape[0]):
        _mean_row(values[r], t[r], radius, out[r])
    return out


@njit(parallel=True, cache=True)
def _count_rows(t, radius):
    out = np.empty(t.shape, dtype=np.int64)
    for r in prange(t.shape[0]):
        _count_row(t[r], radius, out[r])
    return out


def _check_row(values, warped):
    if values.shape != warped.shape or values.ndim != 1:
        raise ImageError(f"row length mismatch: {values.shape} vs {warped.shape}")


def box_mean_row(values, warped, radius: float, weights=None) -> np.ndarray:
    """Windowed mean of `values` over ``|t[j] - t[i]| <= radius``.

    With `weights`, a window whose weights are all zero returns ``values[i]``.
    """
    if radius < 0:
        raise ValueError("radius must be >= 0")
    v = np.ascontiguousarray(values, dtype=np.float64)
    t = np.ascontiguousarray(warped, dtype=np.float64)
    _check_row(v, t)
    out = np.empty_like(v)
    if weights is None:
        _mean_row(v, t, float(radius), out)
    else:
        w = np.ascontiguousarray(weights, dtype=np.float64)
        _check_row(w, t)
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        _weighted_mean_row(v, w, t, float(radius), out)
    return out


def box_count_row(warped, radius: float) -> np.ndarray:
    """Number of samples within `radius` of each sample in the warped domain."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    t = np.ascontiguousarray(warped, dtype=np.float64)
    out = np.empty(t.shape, dtype=np.int64)
    _count_row(t, float(radius), out)
    return out


class DomainTransform:
    """Per-guide warps, radii and window support, built once and reused.

    `mean` runs one horizontal pass then one vertical pass (as a horizontal
    pass over the transposed image). Rows are processed independently, so
    both passes are parallel loops over scanlines.
    """

    def __init__(self, guide: np.ndarray, params: DtParams, radius_scale: float | None = None):
        guide = as_image(guide, "guide")
        self.params = params
        self.shape = guide.shape[:2]
        scale = params.radius_scale if radius_scale is None else radius_scale
        if scale < 0:
            raise ValueError("radius_scale must be >= 0")
        self.radius_x = float(scale * params.sigma_x)
        self.radius_y = float(scale * params.sigma_y)
        self.tx = warp_rows(guide, params.sigma_x, params.sigma_r)
        self.ty = warp_rows(transpose(guide), params.sigma_y, params.sigma_r)
        self._support = None

    def count_x(self) -> np.ndarray:
        return _count_rows(self.tx, self.radius_x)

    def count_y(self) -> np.ndarray:
        """Vertical window sizes, in image ``(H, W)`` layout."""
        return transpose(_count_rows(self.ty, self.radius_y))

    @property
    def support(self) -> np.ndarray:
        """Separable window size ``count_x * count_y`` per pixel (float32)."""
        if self._support is None:
            self._support = (self.count_x() * self.count_y()).astype(np.float32)
        return self._support

    def mean(self, values: np.ndarray) -> np.ndarray:
        if values.shape != self.shape:
            raise ImageError(f"values shape {values.shape} does not match guide {self.shape}")
        v = np.ascontiguousarray(values)
        mx = _mean_rows(v, self.tx, self.radius_x)
        my = _mean_rows(transpose(mx), self.ty, self.radius_y)
        return transpose(my)


def edge_aware_mean(values, guide, params: DtParams, radius_scale: float | None = None):
    """Edge-aware box mean of a single-channel image and its window support.

    Returns ``(mean, support)``, both float32 ``(H, W)``.
    """
    values = as_image(values, "values")
    guide = as_image(guide, "guide")
    if values.ndim != 2:
        raise ImageError("values must be single-channel")
    if values.shape != guide.shape[:2]:
        raise ImageError(f"values {values.shape} and guide {guide.shape[:2]} differ in size")
    dt = DomainTransform(guide, params, radius_scale)
    return dt.mean(values), dt.support


def edge_aware_variance(values, guide, params: DtParams, transform: DomainTransform | None = None):
    """Local variance ``E[z^2] - E[z]^2`` under the edge-aware mean, clamped at 0."""
    values = as_image(values, "values")
    if values.ndim != 2:
        raise ImageError("values must be single-channel")
    dt = transform if transform is not None else DomainTransform(guide, params)
    if values.shape != dt.shape:
        raise ImageError(f"values {values.shape} and guide {dt.shape} differ in size")
    v = values.astype(np.float64)
    var = dt.mean(v * v) - dt.mean(v) ** 2
    return np.maximum(var, 0.0).astype(np.float32)


def confidence_from_variance(variance, sigma_c: float) -> np.ndarray:
    """Map local variance to a confidence in (0, 1]: ``exp(-V / (2 sigma_c^2))``."""
    if not sigma_c > 0:
        raise ValueError(f"sigma_c must be > 0, got {sigma_c}")
    v = np.asarray(variance, dtype=np.float64)
    return np.exp(-v / (2.0 * sigma_c * sigma_c)).astype(np.float32)
