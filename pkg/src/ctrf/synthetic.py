"""Synthetic cubes for demos and tests (no real datasets are bundled)."""

import numpy as np
from scipy.ndimage import gaussian_filter

from .ring import TRCores, tr_init, tr_reconstruct
from .tensor import fold_n

__all__ = ["tr_cube", "low_rank_spectral_ring", "demo_scene"]


def tr_cube(shape, ranks, seed=0, peak=255.0):
    """``(cube, ring)`` for a random ring, scaled so ``max|cube| == peak``.

    Only multiplicative scaling is applied, so the cube stays exactly TR.
    """
    ring = tr_init(shape, ranks, seed=seed)
    x = tr_reconstruct(ring)
    s = peak / np.abs(x).max()
    ring.cores[0] = ring.cores[0] * s
    return tr_reconstruct(ring), ring


def low_rank_spectral_ring(shape, ranks, spectral_rank, seed=0, peak=255.0):
    """Ring whose spectral core has a mode-2 unfolding of rank `spectral_rank`.

    The cube's spectral unfolding then has rank at most `spectral_rank` even
    though the ranks around the spectral core may be larger.
    """
    rng = np.random.default_rng(seed)
    ring = tr_init(shape, ranks, seed=rng.integers(2**31))
    g3 = ring.cores[2]
    basis = rng.standard_normal((g3.shape[1], spectral_rank))
    mix = rng.standard_normal((spectral_rank, g3.shape[0] * g3.shape[2]))
    ring = TRCores([ring.cores[0], ring.cores[1], fold_n(basis @ mix, g3.shape, 2)])
    x = tr_reconstruct(ring)
    ring.cores[0] = ring.cores[0] * (peak / np.abs(x).max())
    return tr_reconstruct(ring), ring


def demo_scene(shape=(64, 64, 31), n_materials=5, seed=0, smooth=4.0):
    """Nonnegative scene: smooth abundance maps times smooth material spectra, in [0, 1]."""
    rows, cols, bands = shape
    rng = np.random.default_rng(seed)
    maps = gaussian_filter(rng.random((n_materials, rows, cols)), sigma=(0, smooth, smooth))
    maps = np.exp(8.0 * (maps - maps.mean(axis=0, keepdims=True)))
    maps /= maps.sum(axis=0, keepdims=True)
    spectra = np.cumsum(rng.standard_normal((n_materials, bands)), axis=1)
    spectra = gaussian_filter(spectra, sigma=(0, 1.5))
    spectra -= spectra.min(axis=1, keepdims=True)
    spectra = 0.2 + spectra / spectra.max(axis=1, keepdims=True)
    x = np.einsum("krc,kb->rcb", maps, spectra)
    return x / x.max()
