"""Guided depth upsampling: bicubic target, bump-shaped confidence, edge-aware solve."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import ImageError, as_image, bicubic_upsample
from .solver import ProblemInstance, SolverConfig, solve


@dataclass
class SuperresInputs:
    low_depth: np.ndarray
    guide: np.ndarray
    factor: int

    def __post_init__(self):
        self.low_depth = as_image(self.low_depth, "low_depth")
        self.guide = as_image(self.guide, "guide")
        if int(self.factor) != self.factor or self.factor < 1:
            raise ValueError(f"factor must be a positive integer, got {self.factor}")
        self.factor = int(self.factor)
        if self.low_depth.ndim != 2:
            raise ImageError("low_depth must be single-channel")
        h, w = self.low_depth.shape
        if self.guide.shape[:2] != (h * self.factor, w * self.factor):
            raise ImageError(
                f"guide {self.guide.shape[:2]} must be {self.factor}x the depth size {(h, w)}"
            )


def bump_weight(distance, factor: int):
    """Gaussian falloff with std ``factor / 4`` as a function of distance to a sample center."""
    sigma = factor / 4.0
    d = np.asarray(distance, dtype=np.float64)
    return np.exp(-(d * d) / (2.0 * sigma * sigma))


def gaussian_bump_confidence(factor: int, out_dims) -> np.ndarray:
    """Confidence peaking at 1 on low-res sample centers, periodic with period `factor`."""
    if int(factor) != factor or factor < 1:
        raise ValueError(f"factor must be a positive integer, got {factor}")
    h, w = out_dims
    if factor == 1:
        return np.ones((h, w), dtype=np.float32)
    half = (factor - 1) / 2.0
    dy = np.abs(np.arange(h) % factor - half)
    dx = np.abs(np.arange(w) % factor - half)
    d = np.sqrt(dy[:, None] ** 2 + dx[None, :] ** 2)
    return bump_weight(d, factor).astype(np.float32)


def superresolve(inputs: SuperresInputs, cfg: SolverConfig | None = None) -> np.ndarray:
    if cfg is None:
        cfg = SolverConfig.superres(inputs.factor)
    target = bicubic_upsample(inputs.low_depth, inputs.factor)
    conf = gaussian_bump_confidence(inputs.factor, target.shape)
    problem = ProblemInstance(target=target, confidence=conf, guide=inputs.guide)
    return solve(problem, cfg)
