"""Matrix-shaped conjugate gradient and SVD-based thresholding."""

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

__all__ = [
    "CGBreakdown",
    "CGConfig",
    "CGResult",
    "cg_solve",
    "svd_thin",
    "svt",
    "nuclear_norm",
    "numeric_rank",
]


class CGBreakdown(FloatingPointError):
    """Raised when CG produces non-finite iterates."""


@dataclass(frozen=True)
class CGConfig:
    tol: float = 1e-8
    max_iter: int = 300

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("CG tolerance must be positive")
        if self.max_iter < 1:
            raise ValueError("CG needs at least one iteration")


class CGResult(NamedTuple):
    x: np.ndarray
    residual: float  # relative: ||op(x) - rhs|| / ||rhs||
    iters: int


def _dot(a, b):
    return float(np.vdot(a, b))


def cg_solve(op, rhs, x0=None, cfg=None, callback: Optional[Callable] = None):
    """Solve ``op(X) = rhs`` for symmetric positive semidefinite `op`.

    `op` maps a matrix to a matrix of the same shape and the inner product is
    the Frobenius one, so Sylvester-type operators such as
    ``X -> A @ X @ B + X @ C`` never need to be vectorized.

    Parameters
    ----------
    op : callable
        Linear operator acting on arrays shaped like `rhs`.
    rhs : ndarray
    x0 : ndarray, optional
        Warm start; zeros if omitted.
    cfg : CGConfig, optional
    callback : callable, optional
        Called with the current iterate after every step.

    Returns
    -------
    CGResult
        ``(x, residual, iters)``; ``residual <= cfg.tol`` means converged.
    """
    cfg = cfg or CGConfig()
    rhs = np.asarray(rhs, dtype=np.float64)
    x = np.zeros_like(rhs) if x0 is None else np.array(x0, dtype=np.float64)
    if x.shape != rhs.shape:
        raise ValueError(f"x0 shape {x.shape} does not match rhs shape {rhs.shape}")
    bnorm = np.linalg.norm(rhs)
    if bnorm == 0.0:
        return CGResult(np.zeros_like(rhs), 0.0, 0)

    r = rhs - op(x)
    if r.shape != rhs.shape:
        raise ValueError(f"operator returned shape {r.shape}, expected {rhs.shape}")
    rr = _dot(r, r)
    if not np.isfinite(rr):
        raise CGBreakdown("non-finite initial residual")
    target = cfg.tol * bnorm
    if np.sqrt(rr) <= target:
        return CGResult(x, np.sqrt(rr) / bnorm, 0)

    p = r.copy()
    iters = 0
    for iters in range(1, cfg.max_iter + 1):
        ap = op(p)
        pap = _dot(p, ap)
        if not np.isfinite(pap):
            raise CGBreakdown(f"non-finite curvature at CG iteration {iters}")
        if pap <= 0.0:
            # p lies in the null space of a semidefinite operator: no progress possible
            iters -= 1
            break
        alpha = rr / pap
        x += alpha * p
        r -= alpha * ap
        rr_new = _dot(r, r)
        if not np.isfinite(rr_new) or not np.all(np.isfinite(x)):
            raise CGBreakdown(f"non-finite iterate at CG iteration {iters}")
        if callback is not None:
            callback(x)
        if np.sqrt(rr_new) <= target:
            rr = rr_new
            break
        p = r + (rr_new / rr) * p
        rr = rr_new
    return CGResult(x, float(np.sqrt(rr) / bnorm), iters)


def svd_thin(m):
    """Economy SVD ``m = U @ diag(s) @ V.T`` with `s` descending."""
    m = np.asarray(m, dtype=np.float64)
    if not np.all(np.isfinite(m)):
        raise ValueError("svd_thin: matrix has non-finite entries")
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    return u, s, vt.T


def svt(m, tau):
    """Singular value thresholding, the proximal map of ``tau * ||.||_*``."""
    if tau < 0:
        raise ValueError("threshold must be non-negative")
    u, s, v = svd_thin(m)
    s = np.maximum(s - tau, 0.0)
    keep = s > 0
    return (u[:, keep] * s[keep]) @ v[:, keep].T


def nuclear_norm(m):
    return float(np.sum(np.linalg.svd(np.asarray(m, dtype=np.float64), compute_uv=False)))


def numeric_rank(m, tol=1e-9):
    """Number of singular values above ``tol`` times the largest one."""
    s = np.linalg.svd(np.asarray(m, dtype=np.float64), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))
