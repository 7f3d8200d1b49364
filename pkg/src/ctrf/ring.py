"""Tensor-ring representation.

A ring of N order-3 cores ``G(n)`` of shape ``(R_n, I_n, R_{n+1})`` with
``R_{N+1} = R_1`` represents the tensor whose entries are traces of products
of lateral slices::

    H[i_1, ..., i_N] = trace(G(1)[:, i_1, :] @ ... @ G(N)[:, i_N, :])

Core indices in this module are 0-based Python positions; mode numbers passed
to unfoldings stay 1-based as in :mod:`ctrf.tensor`.
"""

from dataclasses import dataclass

import numpy as np

from .numerics import numeric_rank
from .tensor import as_tensor, mode_n_unfold, tr_unfold

__all__ = [
    "TRCores",
    "tr_element",
    "tr_reconstruct",
    "merge_pair",
    "merge_cores",
    "tr_init",
    "rank_bound_check",
]


@dataclass
class TRCores:
    """Ordered ring of order-3 cores."""

    cores: list

    def __post_init__(self):
        self.cores = [as_tensor(g) for g in self.cores]
        if not self.cores:
            raise ValueError("a tensor ring needs at least one core")
        for k, g in enumerate(self.cores):
            if g.ndim != 3:
                raise ValueError(f"core {k} has order {g.ndim}, expected 3")
        n = len(self.cores)
        for k in range(n):
            right = self.cores[k].shape[2]
            left = self.cores[(k + 1) % n].shape[0]
            if right != left:
                raise ValueError(
                    f"rank mismatch between core {k} (R={right}) and core {(k + 1) % n} (R={left})"
                )

    def __len__(self):
        return len(self.cores)

    def __getitem__(self, k):
        return self.cores[k]

    def __iter__(self):
        return iter(self.cores)

    @property
    def ranks(self):
        """``(R_1, ..., R_N)``; the closing rank equals ``R_1``."""
        return tuple(g.shape[0] for g in self.cores)

    @property
    def shape(self):
        return tuple(g.shape[1] for g in self.cores)

    def rotated(self, k):
        """Ring starting at core `k`; reconstructs to ``circ_shift(H, k)``."""
        k %= len(self.cores)
        return TRCores(self.cores[k:] + self.cores[:k])

    def copy(self):
        return TRCores([g.copy() for g in self.cores])


def tr_element(ring, idx):
    """Single entry of the represented tensor, by the trace formula."""
    idx = tuple(int(i) for i in idx)
    if len(idx) != len(ring):
        raise ValueError(f"index has {len(idx)} entries, ring has order {len(ring)}")
    prod = None
    for g, i in zip(ring, idx):
        if not 0 <= i < g.shape[1]:
            raise IndexError(f"index {idx} out of range for shape {ring.shape}")
        prod = g[:, i, :] if prod is None else prod @ g[:, i, :]
    return float(np.trace(prod))


def merge_pair(left, right):
    """Multilinear product of two adjacent cores.

    Slice ``j * I_left + i`` of the result is ``left[:, i, :] @ right[:, j, :]``,
    so the left core's index runs fastest along the merged middle mode.
    """
    if left.shape[2] != right.shape[0]:
        raise ValueError(f"cannot merge cores of shapes {left.shape} and {right.shape}")
    ra, ii, _ = left.shape
    _, ij, rc = right.shape
    out = np.tensordot(left, right, axes=(2, 0))  # (ra, ii, ij, rc)
    return out.reshape(ra, ii * ij, rc, order="F")


def merge_cores(ring, first=0, last=None):
    """Merge the cyclic run of cores ``first, first+1, ..., last`` (inclusive).

    With ``last`` omitted the run closes just before `first`, i.e. the whole
    ring. ``last`` may be smaller than ``first`` to wrap around.
    """
    n = len(ring)
    if not 0 <= first < n:
        raise ValueError(f"first core {first} out of range")
    if last is None:
        last = (first - 1) % n
    if not 0 <= last < n:
        raise ValueError(f"last core {last} out of range")
    count = (last - first) % n + 1
    out = ring[first]
    for step in range(1, count):
        out = merge_pair(out, ring[(first + step) % n])
    return out


def tr_reconstruct(ring):
    """Full tensor represented by `ring` (computed by sequential core merging)."""
    if len(ring) == 1:
        vals = np.einsum("aia->i", ring[0])
    else:
        # contract the last core straight into the trace to skip the full merge
        rest = merge_cores(ring, 0, len(ring) - 2)
        vals = np.einsum("aib,bka->ik", rest, ring[-1], optimize=True)
    return np.ascontiguousarray(vals.reshape(ring.shape, order="F"))


def tr_init(shape, ranks, seed=None, target_norm=1.0):
    """Random ring with i.i.d. Gaussian cores, each of Frobenius norm ``target_norm**(1/N)``."""
    shape = tuple(int(s) for s in shape)
    ranks = tuple(int(r) for r in ranks)
    if len(ranks) != len(shape):
        raise ValueError(f"{len(ranks)} ranks given for an order-{len(shape)} tensor")
    if any(r < 1 for r in ranks) or any(s < 1 for s in shape):
        raise ValueError("ranks and dimensions must be >= 1")
    rng = np.random.default_rng(seed)
    n = len(shape)
    scale = float(target_norm) ** (1.0 / n)
    cores = []
    for k in range(n):
        g = rng.standard_normal((ranks[k], shape[k], ranks[(k + 1) % n]))
        cores.append(g * (scale / np.linalg.norm(g)))
    return TRCores(cores)


def rank_bound_check(ring, n, tol=1e-9):
    """Compare ``rank(G(n)_<2>)`` with ``rank(H_(n))`` for the 1-based mode `n`.

    Returns ``(rank_core, rank_tensor, holds)``.
    """
    if not 1 <= n <= len(ring):
        raise ValueError(f"mode {n} out of range")
    lhs = numeric_rank(tr_unfold(ring[n - 1], 2), tol)
    rhs = numeric_rank(mode_n_unfold(tr_reconstruct(ring), n), tol)
    return lhs, rhs, lhs >= rhs
