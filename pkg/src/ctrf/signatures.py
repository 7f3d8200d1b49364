"""Class-signature analysis: spectral subspaces from a TR fit vs per-class SVD.

Pixels of each class are laid out as contiguous blocks of a small
``rows x cols x B`` cube and a 3-core ring is fitted to it. The spectral core
``G3`` (``R3 x B x R1``) holds one ``B x R1`` signature block per class once
the bond between ``G2`` and ``G3`` is aligned with that class. The alignment
vector for class ``c`` is the dominant right singular vector of the stacked
coefficient matrices ``G1[:, i, :] @ G2[:, j, :]`` over the class's pixels,
which makes the extracted subspace independent of the ring's gauge.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import subspace_angles

from .degradation import DegradationModel
from .numerics import numeric_rank
from .solver import FusionProblem, SolverConfig, solve

__all__ = ["ClassSignatures", "arrange_pixels", "signature_analysis"]


@dataclass
class ClassSignatures:
    label: object
    tr_basis: np.ndarray  # B x k, orthonormal
    svd_basis: np.ndarray  # B x k, orthonormal
    angles_deg: np.ndarray  # principal angles, ascending

    @property
    def max_angle(self):
        return float(self.angles_deg.max()) if self.angles_deg.size else 0.0


def _default_cols(per_class, total):
    limit = int(np.floor(np.sqrt(total)))
    for cols in range(limit, 0, -1):
        if per_class % cols == 0:
            return cols
    return 1


def arrange_pixels(pixels, labels, spatial_shape=None):
    """Sort pixels by class and reshape them into a ``rows x cols x B`` cube.

    Returns ``(cube, classes, pixel_class)`` with ``pixel_class`` the class
    position of every cube pixel in row-major order.
    """
    pixels = np.asarray(pixels, dtype=np.float64)
    labels = np.asarray(labels)
    if pixels.ndim != 2:
        raise ValueError("pixels must be a (pixels x bands) matrix")
    if labels.shape != (pixels.shape[0],):
        raise ValueError(f"{labels.size} labels for {pixels.shape[0]} pixels")
    classes, counts = np.unique(labels, return_counts=True)
    if np.any(counts != counts[0]):
        raise ValueError(f"classes must have equal pixel counts, got {dict(zip(classes.tolist(), counts.tolist()))}")
    order = np.argsort(labels, kind="stable")
    total = pixels.shape[0]
    if spatial_shape is None:
        cols = _default_cols(int(counts[0]), total)
        spatial_shape = (total // cols, cols)
    rows, cols = spatial_shape
    if rows * cols != total:
        raise ValueError(f"spatial shape {spatial_shape} does not hold {total} pixels")
    cube = pixels[order].reshape(rows, cols, pixels.shape[1])
    pixel_class = np.searchsorted(classes, labels[order])
    return cube, classes, pixel_class


def _orth(m, k):
    u, _, _ = np.linalg.svd(m, full_matrices=False)
    return u[:, :k]


def _concentration(m):
    s = np.linalg.svd(m, compute_uv=False)
    total = float(np.sum(s**2))
    return (float(s[0] ** 2) / total if total > 0 else 0.0), s


def _class_block(coeff, g3):
    """Spectral signature block of one class from its ``(pixels, R1, R3)`` coefficients.

    The class usually lives on the ``G2``-``G3`` bond, but when ``R1 == R3`` a
    fit may equally put it on the ``G3``-``G1`` bond; the bond along which
    the coefficients are closer to rank one wins.
    """
    n, r1, r3 = coeff.shape
    on_r3 = coeff.reshape(n * r1, r3)
    on_r1 = coeff.transpose(0, 2, 1).reshape(n * r3, r1)
    conc3, _ = _concentration(on_r3)
    conc1, _ = _concentration(on_r1)
    if conc3 >= conc1:
        v = np.linalg.svd(on_r3, full_matrices=False)[2][0]
        return np.tensordot(v, g3, axes=(0, 0))  # B x R1
    u = np.linalg.svd(on_r1, full_matrices=False)[2][0]
    return np.tensordot(g3, u, axes=(2, 0)).T  # B x R3


def signature_analysis(pixels, labels, ranks, spatial_shape=None, iters=300, restarts=3, seed=0, tol=1e-9):
    """Compare TR-extracted class subspaces against per-class SVD subspaces.

    Parameters
    ----------
    pixels : (P, B) array
    labels : (P,) array
        Class label per pixel; all classes must be the same size.
    ranks : (R1, R2, R3)
        ``R1`` is the per-class subspace dimension, ``R3`` usually the number
        of classes.
    spatial_shape : (rows, cols), optional
    iters, restarts, seed
        Fit budget; the restart with the lowest residual is kept.

    Returns
    -------
    list of ClassSignatures
    """
    cube, classes, pixel_class = arrange_pixels(pixels, labels, spatial_shape)
    problem = FusionProblem(cube, cube, DegradationModel.identity(cube.shape), ranks)
    best = None
    for r in range(restarts):
        res = solve(problem, SolverConfig(mode="ctrf", outer_iters=iters, seed=seed + r))
        obj = res.trace[-1]["objective"] if res.trace else np.inf
        if best is None or obj < best[0]:
            best = (obj, res)
    g1, g2, g3 = best[1].cores

    rows, cols, _ = cube.shape
    coeff = np.einsum("aib,bjc->ijac", g1, g2).reshape(rows * cols, g1.shape[0], g3.shape[0])
    report = []
    for c, label in enumerate(classes):
        members = pixel_class == c
        sig = _class_block(coeff[members], g3)
        data = cube.reshape(rows * cols, -1)[members].T  # B x n_c
        k = max(1, min(numeric_rank(sig, tol), numeric_rank(data, tol), sig.shape[1]))
        tr_basis, svd_basis = _orth(sig, k), _orth(data, k)
        angles = np.sort(np.degrees(subspace_angles(tr_basis, svd_basis)))
        report.append(ClassSignatures(label, tr_basis, svd_basis, angles))
    return report
