"""Explicit pairwise-weight reference solver for tiny images.

Builds the 0/1 window weights the fast path implies and solves the pairwise
smoothness problem

    F(z) = lam_bl/2 * sum_ij W_ij (z_i - z_j)^2 + 1/2 * sum_i c_i (z_i - t_i)^2

whose stationarity condition is ``(2 lam_bl (D - W) + C) z = C t``. Used in
tests and ``dts verify`` only.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numba import njit
from scipy.sparse.csgraph import connected_components

from .domain_transform import DomainTransform, DtParams
from .image import ImageError, as_image
from .solver import ProblemInstance, SolverConfig, solve

MAX_PIXELS = 4096


class SingularSystemError(ValueError):
    """Some connected group of pixels has no confidence, so its level is undetermined."""


@dataclass
class DenseWeights:
    shape: tuple
    matrix: sp.csr_matrix  # W_ij in {0, 1}, row i = pixel y*W + x
    lambda_bl: float = 0.5

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def entries(self):
        coo = self.matrix.tocoo()
        return list(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def is_symmetric(self) -> bool:
        return (self.matrix != self.matrix.T).nnz == 0

    def symmetric(self) -> sp.csr_matrix:
        """``(W + W^T) / 2``; equals W when the windows are mutual."""
        return ((self.matrix + self.matrix.T) * 0.5).tocsr()

    def laplacian(self) -> sp.csr_matrix:
        w = self.symmetric()
        d = np.asarray(w.sum(axis=1)).ravel()
        return (sp.diags(d) - w).tocsr()


def build_dense_weights(guide, params: DtParams, lambda_bl: float = 0.5) -> DenseWeights:
    """``W_ij = 1`` iff x_j is in i's row window and y_j is in i's column window."""
    guide = as_image(guide, "guide")
    h, w = guide.shape[:2]
    if h * w > MAX_PIXELS:
        raise ImageError(f"dense oracle is limited to {MAX_PIXELS} pixels, got {h * w}")
    dt = DomainTransform(guide, params)
    rows, cols = [], []
    for y in range(h):
        for x in range(w):
            tx = dt.tx[y]
            ty = dt.ty[x]
            xs = np.nonzero(np.abs(tx - tx[x]) <= dt.radius_x)[0]
            ys = np.nonzero(np.abs(ty - ty[y]) <= dt.radius_y)[0]
            j = (ys[:, None] * w + xs[None, :]).ravel()
            rows.append(np.full(j.size, y * w + x))
            cols.append(j)
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    mat = sp.csr_matrix((np.ones(r.size), (r, c)), shape=(h * w, h * w))
    return DenseWeights(shape=(h, w), matrix=mat, lambda_bl=float(lambda_bl))


@njit(cache=True)
def _gauss_seidel(indptr, indices, data, diag, b, z, active, tol, max_sweeps):
    n = b.shape[0]
    for sweep in range(max_sweeps + 1):
        res = 0.0
        for i in range(n):
            if not active[i]:
                continue
            acc = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                acc += data[k] * z[indices[k]]
            r = abs(b[i] - acc)
            if r > res:
                res = r
        if res <= tol or sweep == max_sweeps:
            return sweep, res
        for i in range(n):
            if not active[i]:
                continue
            acc = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                j = indices[k]
                if j != i:
                    acc += data[k] * z[j]
            z[i] = (b[i] - acc) / diag[i]
    return max_sweeps, res


def system(weights: DenseWeights, confidence) -> sp.csr_matrix:
    c = np.asarray(confidence, dtype=np.float64).ravel()
    return (2.0 * weights.lambda_bl * weights.laplacian() + sp.diags(c)).tocsr()


def dense_gradient(weights: DenseWeights, z, target, confidence) -> np.ndarray:
    """Gradient of the pairwise objective, evaluated term by term."""
    z = np.asarray(z, dtype=np.float64).ravel()
    t = np.asarray(target, dtype=np.float64).ravel()
    c = np.asarray(confidence, dtype=np.float64).ravel()
    w = weights.symmetric().tocoo()
    g = np.zeros_like(z)
    np.add.at(g, w.row, 2.0 * weights.lambda_bl * w.data * (z[w.row] - z[w.col]))
    return g + c * (z - t)


def solve_dense(weights: DenseWeights, target, confidence, gauge: bool = False,
                tol: float = 1e-10, max_sweeps: int = 100_000) -> np.ndarray:
    """Gauss-Seidel solve in float64 starting from the target.

    Pixel groups that are connected by W but carry zero total confidence have
    no unique solution; they raise unless `gauge` is set, in which case they
    are pinned to the mean of their targets.
    """
    target = np.asarray(target, dtype=np.float64)
    conf = np.asarray(confidence, dtype=np.float64)
    if target.shape != weights.shape or conf.shape != weights.shape:
        raise ImageError("target/confidence must match the weight grid")
    t = target.ravel()
    c = conf.ravel()
    a = system(weights, c)
    if weights.lambda_bl > 0:
        _, labels = connected_components(weights.symmetric(), directed=False)
    else:
        labels = np.arange(t.size)
    group_conf = np.bincount(labels, weights=c)
    floating = group_conf[labels] <= 0
    z = t.copy()
    if floating.any():
        if not gauge:
            raise SingularSystemError(
                f"{int(floating.sum())} pixels belong to groups with zero confidence"
            )
        means = np.bincount(labels, weights=t) / np.bincount(labels)
        z[floating] = means[labels[floating]]
    b = c * t
    a.sort_indices()
    sweeps, res = _gauss_seidel(a.indptr, a.indices, a.data, a.diagonal(), b, z, ~floating,
                                tol, max_sweeps)
    return z.reshape(weights.shape)


def residual(weights: DenseWeights, z, target, confidence) -> float:
    a = system(weights, confidence)
    t = np.asarray(target, dtype=np.float64).ravel()
    c = np.asarray(confidence, dtype=np.float64).ravel()
    return float(np.abs(a @ np.asarray(z, dtype=np.float64).ravel() - c * t).max())


def compare_solvers(guide, target, confidence, params: DtParams, cfg: SolverConfig) -> dict:
    """Run the fast solver and the dense reference on the same inputs.

    The fast solver uses ``lam = 2 * lambda_bl``. Differences are normalized
    by the target's peak-to-peak range (1 when the target is constant).
    """
    cfg = dataclasses.replace(cfg, use_charbonnier=False, dt=params)
    weights = build_dense_weights(guide, params, lambda_bl=cfg.lam / 2.0)
    dense = solve_dense(weights, target, confidence)
    fast = solve(ProblemInstance(target=target, confidence=confidence, guide=guide), cfg)
    diff = fast.astype(np.float64) - dense
    span = float(np.ptp(np.asarray(target, dtype=np.float64)))
    scale = span if span > 0 else 1.0
    return {
        "rms_diff": float(np.sqrt(np.mean(diff ** 2)) / scale),
        "max_diff": float(np.abs(diff).max() / scale),
        "dense_residual": residual(weights, dense, target, confidence),
        "fast": fast,
        "dense": dense,
    }
