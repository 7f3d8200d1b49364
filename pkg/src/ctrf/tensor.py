"""Dense tensor primitives: unfoldings, folding, cyclic shifts, mode products.

Tensors are plain ``numpy.ndarray`` objects in float64 with the usual C
linearization (first index slowest). Mode numbers follow the mathematical
convention and start at 1.

Every unfolding lists its column modes with the *first listed mode varying
fastest*, which is a Fortran-order reshape of the permuted array.
"""

import math

import numpy as np

__all__ = [
    "as_tensor",
    "mode_n_unfold",
    "tr_unfold",
    "block_unfold",
    "fold_n",
    "circ_shift",
    "mode2_ttm",
    "kron",
    "inner",
    "fro_norm",
]


def as_tensor(t):
    """Return `t` as a float64 ndarray with at least one dimension."""
    a = np.asarray(t, dtype=np.float64)
    if a.ndim == 0:
        raise ValueError("tensor must have order >= 1")
    if any(d < 1 for d in a.shape):
        raise ValueError(f"tensor dimensions must be >= 1, got {a.shape}")
    return a


def _check_mode(n, order):
    if not 1 <= n <= order:
        raise ValueError(f"mode {n} out of range for order-{order} tensor")


def mode_n_unfold(t, n):
    """Classical mode-n unfolding ``H_(n)`` of shape ``I_n x prod(others)``.

    Columns enumerate modes ``1..n-1, n+1..N`` with the first one fastest.
    """
    t = as_tensor(t)
    _check_mode(n, t.ndim)
    return np.moveaxis(t, n - 1, 0).reshape(t.shape[n - 1], -1, order="F")


def fold_n(m, shape, n):
    """Inverse of :func:`mode_n_unfold`."""
    shape = tuple(int(s) for s in shape)
    _check_mode(n, len(shape))
    m = np.asarray(m, dtype=np.float64)
    rest = shape[: n - 1] + shape[n:]
    if m.ndim != 2 or m.shape[0] != shape[n - 1] or m.shape[1] != int(np.prod(rest)):
        raise ValueError(f"matrix of shape {m.shape} cannot fold to {shape} along mode {n}")
    moved = m.reshape((shape[n - 1],) + rest, order="F")
    return np.ascontiguousarray(np.moveaxis(moved, 0, n - 1))


def circ_shift(t, n):
    """Rotate the modes left by `n`: shape ``(I_{n+1},...,I_N,I_1,...,I_n)``."""
    t = as_tensor(t)
    if not 0 <= n < t.ndim:
        raise ValueError(f"shift {n} out of range for order-{t.ndim} tensor")
    axes = tuple(range(n, t.ndim)) + tuple(range(n))
    return np.ascontiguousarray(np.transpose(t, axes))


def tr_unfold(t, n):
    """Cyclic mode-n unfolding ``H_<n>``.

    Columns enumerate modes ``n+1,...,N,1,...,n-1`` with the first one fastest,
    i.e. ``mode_n_unfold(circ_shift(t, n - 1), 1)``.
    """
    t = as_tensor(t)
    _check_mode(n, t.ndim)
    return mode_n_unfold(circ_shift(t, n - 1), 1)


def block_unfold(t, i):
    """Matricization ``H[I_1...I_i, I_{i+1}...I_N]`` (first listed mode fastest on both sides)."""
    t = as_tensor(t)
    if not 1 <= i <= t.ndim - 1:
        raise ValueError(f"split point {i} out of range for order-{t.ndim} tensor")
    rows = int(np.prod(t.shape[:i]))
    return t.reshape(rows, -1, order="F")


def mode2_ttm(core, p):
    """Mode-2 product ``core x_2 p`` for an order-3 core of shape (Ra, I, Rb)."""
    core = as_tensor(core)
    p = np.asarray(p, dtype=np.float64)
    if core.ndim != 3:
        raise ValueError("mode2_ttm expects an order-3 core")
    if p.ndim != 2 or p.shape[1] != core.shape[1]:
        raise ValueError(f"operator of shape {p.shape} does not match core middle dimension {core.shape[1]}")
    return np.einsum("ij,ajb->aib", p, core)


def kron(a, b):
    """Kronecker product of two matrices."""
    return np.kron(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))


def inner(t, w):
    """Sum of elementwise products of two equally shaped tensors."""
    t = np.asarray(t, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if t.shape != w.shape:
        raise ValueError(f"shape mismatch: {t.shape} vs {w.shape}")
    # fsum is correctly rounded, so the result does not depend on element order
    return math.fsum((t * w).ravel().tolist())


def fro_norm(t):
    t = np.asarray(t, dtype=np.float64)
    return math.sqrt(inner(t, t))
