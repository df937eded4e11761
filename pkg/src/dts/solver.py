"""Gradient-descent solver for the edge-aware smoothness + fidelity objective.

Per pixel the descent direction is::

    g = lam * (z - mean(z)) + c_hat * rho'(z - t) + lam_m * phi'(z)

with ``mean`` the edge-aware mean (held fixed within a step and recomputed
between steps), ``c_hat = c / S`` the confidence divided by the window
support, and ``rho`` either Charbonnier or the quadratic ``r^2 / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .domain_transform import DomainTransform, DtParams
from .image import ImageError, as_image


class StabilityError(ValueError):
    """Step size and smoothness weight would make descent diverge."""


def charbonnier(r, epsilon: float):
    r = np.asarray(r, dtype=np.float64)
    out = np.sqrt(r * r + epsilon * epsilon)
    return float(out) if out.ndim == 0 else out


def charbonnier_deriv(r, epsilon: float):
    r = np.asarray(r, dtype=np.float64)
    out = r / np.sqrt(r * r + epsilon * epsilon)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SolverConfig:
    lam: float = 0.99
    step: float = 0.99
    iterations: int = 3000
    epsilon: float = 1e-3
    use_charbonnier: bool = True
    dt: DtParams = field(default_factory=DtParams)
    sigma_c: float = 16.0

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if not (math.isfinite(self.step) and self.step > 0):
            raise ValueError(f"step must be > 0, got {self.step}")
        if int(self.iterations) != self.iterations or self.iterations < 0:
            raise ValueError(f"iterations must be a non-negative integer, got {self.iterations}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if not self.sigma_c > 0:
            raise ValueError(f"sigma_c must be > 0, got {self.sigma_c}")
        # confidence is at most 1, so lam + 1 bounds the quadratic curvature
        if not self.step * (self.lam + 1.0) < 2.0:
            raise StabilityError(
                f"step * (lam + 1) = {self.step * (self.lam + 1.0):.4g} must be < 2 for stable descent"
            )

    @classmethod
    def stereo(cls, **overrides) -> "SolverConfig":
        """Stereo refinement defaults (grid-searched on Middlebury)."""
        return cls(**overrides)

    @classmethod
    def superres(cls, factor: int, **overrides) -> "SolverConfig":
        """Depth upsampling defaults; spatial sigma is 20 px per unit of upsampling factor."""
        sigma = 20.0 * factor
        kw = dict(
            iterations=10,
            use_charbonnier=False,
            dt=DtParams(sigma_x=sigma, sigma_y=sigma, sigma_r=0.25),
        )
        kw.update(overrides)
        return cls(**kw)


@dataclass
class DataTerm:
    """Application term evaluated over the whole estimate at once.

    ``evaluate(z)`` returns per-pixel ``(value, derivative)`` arrays; the
    solver scales both by `weight`.
    """

    evaluate: Callable[[np.ndarray], tuple]
    weight: float = 1.0

    def __post_init__(self):
        if not self.weight >= 0:
            raise ValueError(f"data term weight must be >= 0, got {self.weight}")


@dataclass
class ProblemInstance:
    target: np.ndarray
    confidence: np.ndarray
    guide: np.ndarray
    initial: Optional[np.ndarray] = None
    data_term: Optional[DataTerm] = None

    def __post_init__(self):
        self.target = as_image(self.target, "target")
        self.confidence = as_image(self.confidence, "confidence")
        self.guide = as_image(self.guide, "guide")
        self.initial = self.target.copy() if self.initial is None else as_image(self.initial, "initial")
        shape = self.guide.shape[:2]
        for name in ("target", "confidence", "initial"):
            a = getattr(self, name)
            if a.shape != shape:
                raise ImageError(f"{name} shape {a.shape} does not match guide {shape}")
        c = self.confidence
        if c.min() < 0 or c.max() > 1:
            raise ImageError("confidence must lie in [0, 1]")


def _rho(r, cfg):
    if cfg.use_charbonnier:
        return charbonnier(r, cfg.epsilon)
    return 0.5 * r * r


def _rho_prime(r, cfg):
    if cfg.use_charbonnier:
        return r / np.sqrt(r * r + np.float32(cfg.epsilon * cfg.epsilon))
    return r


def effective_confidence(problem: ProblemInstance, transform: DomainTransform) -> np.ndarray:
    """Confidence divided by the edge-aware window support."""
    return (problem.confidence / transform.support).astype(np.float32)


def gradient(problem, z, cfg, transform=None, mean=None):
    """Descent direction at `z` with the edge-aware mean frozen at `z`."""
    dt = transform if transform is not None else DomainTransform(problem.guide, cfg.dt)
    m = dt.mean(z) if mean is None else mean
    c_hat = effective_confidence(problem, dt)
    g = np.float32(cfg.lam) * (z - m) + c_hat * _rho_prime(z - problem.target, cfg)
    term = problem.data_term
    if term is not None and term.weight > 0:
        _, d = term.evaluate(z)
        g = g + np.float32(term.weight) * d.astype(np.float32)
    return g.astype(np.float32, copy=False)


def objective(problem, z, cfg, transform=None) -> float:
    """Objective value at `z` with the edge-aware mean frozen at `z` (float64)."""
    dt = transform if transform is not None else DomainTransform(problem.guide, cfg.dt)
    z = as_image(z, "z")
    m = dt.mean(z.astype(np.float64))
    z64 = z.astype(np.float64)
    c_hat = problem.confidence.astype(np.float64) / dt.support
    f = 0.5 * cfg.lam * np.sum((z64 - m) ** 2)
    f += np.sum(c_hat * _rho(z64 - problem.target, cfg))
    term = problem.data_term
    if term is not None and term.weight > 0:
        v, _ = term.evaluate(z)
        f += term.weight * float(np.sum(v, dtype=np.float64))
    return float(f)


def solve(problem: ProblemInstance, cfg: SolverConfig, callback=None, transform=None) -> np.ndarray:
    """Run ``cfg.iterations`` fixed-size descent steps from ``problem.initial``.

    `callback(k, z)` is called after step k (1-based) when given.
    """
    dt = transform if transform is not None else DomainTransform(problem.guide, cfg.dt)
    if dt.shape != problem.target.shape:
        raise ImageError("transform was built for a different image size")
    step = np.float32(cfg.step)
    lam = np.float32(cfg.lam)
    c_hat = effective_confidence(problem, dt)
    t = problem.target
    term = problem.data_term
    use_term = term is not None and term.weight > 0
    z = problem.initial.copy()
    for k in range(int(cfg.iterations)):
        g = lam * (z - dt.mean(z))
        g += c_hat * _rho_prime(z - t, cfg)
        if use_term:
            g += np.float32(term.weight) * term.evaluate(z)[1].astype(np.float32)
        z = z - step * g
        if callback is not None:
            callback(k + 1, z)
    return z
