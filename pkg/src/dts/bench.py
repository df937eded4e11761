"""Timing and convergence sweeps over procedurally generated stereo scenes."""

from __future__ import annotations

import time

import numpy as np

from .domain_transform import DtParams
from .solver import SolverConfig
from .stereo import StereoInputs, refine_disparity
from .synthetic import stereo_scene_megapixels, two_plane_stereo

PIXEL_SWEEP = (0.25, 0.5, 1.0, 2.0)
SIGMA_X_SWEEP = (16.0, 32.0, 128.0, 256.0)
SIGMA_R_SWEEP = (0.1, 0.2, 0.3, 0.5, 0.75, 0.9)
ITER_CHECKPOINTS = (10, 30, 100, 300, 1000, 3000)


def _inputs(scene):
    return StereoInputs(scene.left, scene.right, scene.target, gamma=0.001,
                        disparity_range=(0.0, 2.0 * scene.d_near))


def time_refine(scene, cfg: SolverConfig, repeats: int = 5) -> float:
    """Best-of-`repeats` wall time of a full refinement (transform setup included)."""
    return _best_times([(scene, cfg)], repeats)[0]


def _best_times(cases, repeats):
    """Best wall time per (scene, cfg) case.

    Repeats are interleaved across cases so slow drift in machine load
    affects every setting alike instead of biasing the ones timed last.
    """
    inputs = [_inputs(scene) for scene, _ in cases]
    for inp, (_, cfg) in zip(inputs, cases):
        refine_disparity(inp, SolverConfig(iterations=1, dt=cfg.dt))  # JIT warm-up
    best = [np.inf] * len(cases)
    for _ in range(max(1, int(repeats))):
        for i, (inp, (_, cfg)) in enumerate(zip(inputs, cases)):
            t0 = time.perf_counter()
            refine_disparity(inp, cfg)
            best[i] = min(best[i], time.perf_counter() - t0)
    return [float(b) for b in best]


def sweep_pixels(mps=PIXEL_SWEEP, iterations=20, repeats=5, seed=0):
    scenes = [stereo_scene_megapixels(mp, seed=seed) for mp in mps]
    cfg = SolverConfig(iterations=iterations)
    secs = _best_times([(sc, cfg) for sc in scenes], repeats)
    return [{"setting": mp, "megapixels": sc.target.size / 1e6, "seconds": t}
            for mp, sc, t in zip(mps, scenes, secs)]


def _sweep_dt(scene, params, settings, iterations, repeats):
    cases = [(scene, SolverConfig(iterations=iterations, dt=p)) for p in params]
    secs = _best_times(cases, repeats)
    return [{"setting": s, "megapixels": scene.target.size / 1e6, "seconds": t}
            for s, t in zip(settings, secs)]


def sweep_sigma_x(sigmas=SIGMA_X_SWEEP, mp=1.0, iterations=20, repeats=5, seed=0):
    scene = stereo_scene_megapixels(mp, seed=seed)
    params = [DtParams(sigma_x=s, sigma_y=s, sigma_r=0.25) for s in sigmas]
    return _sweep_dt(scene, params, sigmas, iterations, repeats)


def sweep_sigma_r(sigmas=SIGMA_R_SWEEP, mp=1.0, iterations=20, repeats=5, seed=0):
    scene = stereo_scene_megapixels(mp, seed=seed)
    params = [DtParams(sigma_x=64.0, sigma_y=64.0, sigma_r=s) for s in sigmas]
    return _sweep_dt(scene, params, sigmas, iterations, repeats)


def sweep_iterations(checkpoints=ITER_CHECKPOINTS, height=48, width=64, noise=1.0, seed=0):
    """One long solve, recording MAE against ground truth at each checkpoint."""
    scene = two_plane_stereo(height=height, width=width, d_far=6.0, d_near=18.0, noise=noise, seed=seed)
    inputs = _inputs(scene)
    marks = set(checkpoints)
    lo, hi = inputs.disparity_range
    err0 = np.abs(inputs.target_disparity - scene.ground_truth)
    rows = [{
        "setting": 0,
        "megapixels": err0.size / 1e6,
        "seconds": 0.0,
        "mae": float(err0.mean()),
        "rmse": float(np.sqrt(np.mean(err0 ** 2))),
    }]
    t0 = time.perf_counter()

    def record(k, z):
        if k in marks:
            err = np.abs(np.clip(z, lo, hi) - scene.ground_truth)
            rows.append({
                "setting": k,
                "megapixels": z.size / 1e6,
                "seconds": time.perf_counter() - t0,
                "mae": float(err.mean()),
                "rmse": float(np.sqrt(np.mean(err ** 2))),
            })

    refine_disparity(inputs, SolverConfig(iterations=max(checkpoints)), callback=record)
    return rows


def linear_fit_r2(x, y) -> float:
    """Coefficient of determination of a least-squares line through (x, y)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    slope, icept = np.polyfit(x, y, 1)
    ss_res = np.sum((y - (slope * x + icept)) ** 2)
    ss_tot = np.sum((y - y.mean()) ** 2)
    return float(1.0 - ss_res / ss_tot) if ss_tot > 0 else 1.0


MODES = {
    "pixels": sweep_pixels,
    "sigma-x": sweep_sigma_x,
    "sigma-r": sweep_sigma_r,
    "iters": sweep_iterations,
}
