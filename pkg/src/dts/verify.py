"""Reproducible self-check report: oracle comparisons, residuals and gradient checks.

Everything here is a function of the seed; no timing fields are recorded.
"""

from __future__ import annotations

import numpy as np

from .domain_transform import DomainTransform, DtParams, box_count_row, box_mean_row
from .oracle import build_dense_weights, compare_solvers, dense_gradient, residual, solve_dense
from .solver import ProblemInstance, SolverConfig, charbonnier, charbonnier_deriv, gradient, objective, solve
from .stereo import StereoInputs, photometric_term
from .synthetic import random_guide

ORACLE_PARAMS = DtParams(sigma_x=3.0, sigma_y=3.0, sigma_r=0.5)
ORACLE_CFG = SolverConfig(lam=0.99, step=0.99, iterations=3000, use_charbonnier=False, dt=ORACLE_PARAMS)


def _rel_err(a, b):
    return float(abs(a - b) / max(abs(a), abs(b), 1e-12))


def brute_window_mean(values, t, radius):
    v = np.asarray(values, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    inside = np.abs(t[None, :] - t[:, None]) <= radius
    return (inside * v[None, :]).sum(axis=1) / inside.sum(axis=1), inside.sum(axis=1)


def windowing_check(rng, rows=100):
    worst_mean, count_mismatch = 0.0, 0
    for _ in range(rows):
        n = int(rng.integers(1, 129))
        t = np.concatenate([[0.0], np.cumsum(1.0 + rng.exponential(2.0, n - 1))])
        v = rng.normal(0.0, 5.0, n)
        r = float(rng.uniform(0.0, 20.0))
        ref_mean, ref_count = brute_window_mean(v, t, r)
        worst_mean = max(worst_mean, float(np.abs(box_mean_row(v, t, r) - ref_mean).max()))
        count_mismatch += int(np.sum(box_count_row(t, r) != ref_count))
    return {"rows": rows, "max_mean_err": worst_mean, "count_mismatches": count_mismatch}


def degenerate_cases(rng):
    h, w = 8, 7
    guide = random_guide(rng, h, w)
    target = (rng.random((h, w)) * 10).astype(np.float32)
    ident = DtParams(sigma_x=1.0, sigma_y=1.0, sigma_r=0.1, radius_scale=0.0)
    a = compare_solvers(guide, target, np.ones((h, w), np.float32), ident, ORACLE_CFG)
    flat = np.full((h, w, 3), 0.5, np.float32)
    const = np.full((h, w), 3.25, np.float32)
    wide = DtParams(sigma_x=50.0, sigma_y=50.0, sigma_r=0.1)
    b = compare_solvers(flat, const, rng.random((h, w)).astype(np.float32), wide, ORACLE_CFG)
    return {
        "identity_weights": {"rms_diff": a["rms_diff"], "max_diff": a["max_diff"]},
        "constant_scene": {"rms_diff": b["rms_diff"], "max_diff": b["max_diff"]},
    }


def random_oracle_instance(seed: int, height=12, width=10):
    rng = np.random.default_rng(seed)
    guide = random_guide(rng, height, width)
    target = (rng.random((height, width)) * 10).astype(np.float32)
    conf = rng.random((height, width)).astype(np.float32)
    return guide, target, conf


def oracle_report(seed):
    guide, target, conf = random_oracle_instance(seed)
    r = compare_solvers(guide, target, conf, ORACLE_PARAMS, ORACLE_CFG)
    rng = np.random.default_rng(seed + 1)
    g6 = random_guide(rng, 6, 6)
    t6 = rng.random((6, 6)) * 10
    c6 = rng.random((6, 6))
    w6 = build_dense_weights(g6, ORACLE_PARAMS, lambda_bl=0.5)
    z6 = solve_dense(w6, t6, c6)
    return {
        "random_12x10": {"rms_diff": r["rms_diff"], "max_diff": r["max_diff"],
                         "dense_residual": r["dense_residual"]},
        "random_6x6": {"residual": residual(w6, z6, t6, c6),
                       "gradient_inf_norm": float(np.abs(dense_gradient(w6, z6, t6, c6)).max())},
    }


def fixed_point_report(seed, instances=3, iterations=2000):
    rng = np.random.default_rng(seed)
    params = DtParams(sigma_x=4.0, sigma_y=4.0, sigma_r=0.5)
    lam = 0.99
    cfg = SolverConfig(lam=lam, step=0.99, iterations=iterations, use_charbonnier=False, dt=params)
    worst_grad, worst_fp = 0.0, 0.0
    for _ in range(instances):
        guide = random_guide(rng, 12, 16)
        t = (rng.random((12, 16)) * 10).astype(np.float32)
        c = rng.random((12, 16)).astype(np.float32)
        z = solve(ProblemInstance(t, c, guide), cfg)
        dt = DomainTransform(guide, params)
        m = dt.mean(z.astype(np.float64))
        ch = c / dt.support.astype(np.float64)
        worst_grad = max(worst_grad, float(np.abs(lam * (z - m) + ch * (z - t)).max()))
        worst_fp = max(worst_fp, float(np.abs(z - (lam * m + ch * t) / (lam + ch)).max()))
    return {"instances": instances, "lam": lam, "gradient_residual": worst_grad, "fixed_point_residual": worst_fp}


def gradient_report(seed, h=1e-3):
    rng = np.random.default_rng(seed)
    eps = 1e-3
    charb = max(_rel_err(charbonnier_deriv(r, eps), (charbonnier(r + 1e-6, eps) - charbonnier(r - 1e-6, eps)) / 2e-6)
                for r in (-2.0, -0.01, 0.5))

    left = random_guide(rng, 8, 8)
    right = random_guide(rng, 8, 8)
    inputs = StereoInputs(left, right, np.zeros((8, 8), np.float32), gamma=1.0, disparity_range=(-8, 8))
    photo = 0.0
    for y in range(8):
        for x in range(3, 8):
            z = 1.7 + 0.013 * y
            _, d = photometric_term(inputs, (x, y), z)
            fd = (photometric_term(inputs, (x, y), z + h)[0] - photometric_term(inputs, (x, y), z - h)[0]) / (2 * h)
            if abs(fd) > 1e-6:
                photo = max(photo, _rel_err(d, fd))

    guide = random_guide(rng, 8, 8)
    t = (rng.random((8, 8)) * 4).astype(np.float32)
    c = rng.random((8, 8)).astype(np.float32)
    cfg = SolverConfig(lam=0.7, step=0.5, iterations=0, use_charbonnier=True, epsilon=0.5,
                       dt=DtParams(sigma_x=2.0, sigma_y=2.0, sigma_r=0.5))
    prob = ProblemInstance(t, c, guide)
    dt = DomainTransform(guide, cfg.dt)
    z = (t + rng.normal(0, 1, t.shape)).astype(np.float32)
    total = _frozen_fd_error(prob, z, cfg, dt, h)
    return {"charbonnier_rel_err": charb, "photometric_rel_err": photo, "total_rel_err": total}


def _frozen_fd_error(prob, z, cfg, dt, h):
    """Worst relative error of the descent direction against central differences
    of the objective with the mean frozen at z."""
    z64 = z.astype(np.float64)
    m = dt.mean(z64)
    ch = prob.confidence.astype(np.float64) / dt.support

    def f(zz):
        r = zz - prob.target
        return 0.5 * cfg.lam * np.sum((zz - m) ** 2) + np.sum(ch * np.sqrt(r * r + cfg.epsilon ** 2))

    g = gradient(prob, z, cfg, dt).astype(np.float64)
    worst = 0.0
    for idx in np.ndindex(z.shape):
        zp = z64.copy()
        zm = z64.copy()
        zp[idx] += h
        zm[idx] -= h
        fd = (f(zp) - f(zm)) / (2 * h)
        worst = max(worst, _rel_err(g[idx], fd))
    return worst


def build_report(seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    return {
        "seed": seed,
        "windowing": windowing_check(rng),
        "degenerate": degenerate_cases(np.random.default_rng(seed + 100)),
        "oracle": oracle_report(seed),
        "fixed_point": fixed_point_report(seed),
        "gradients": gradient_report(seed),
        "objective_at_target": objective(
            ProblemInstance(np.ones((4, 4), np.float32), np.ones((4, 4), np.float32), np.zeros((4, 4, 3), np.float32)),
            np.ones((4, 4), np.float32),
            SolverConfig(use_charbonnier=False, dt=DtParams(4, 4, 0.25)),
        ),
    }
