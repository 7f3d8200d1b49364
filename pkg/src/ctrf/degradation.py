"""Spatial/spectral degradation operators and the observation simulator."""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .tensor import as_tensor

__all__ = [
    "DegradationModel",
    "SimulationConfig",
    "build_spatial_operator",
    "equal_band_groups",
    "build_spectral_operator",
    "load_spectral_operator",
    "save_spectral_operator",
    "build_model",
    "degrade",
    "noise_sigma",
    "add_noise",
    "rescale_to",
    "simulate",
]


@dataclass
class DegradationModel:
    """Separable blur-and-decimate operators ``p1`` (m x M), ``p2`` (n x N)
    and the spectral response ``p3`` (b x B)."""

    p1: np.ndarray
    p2: np.ndarray
    p3: np.ndarray
    spatial_factor: int = 1
    kernel_size: int = 1
    band_groups: Optional[list] = None

    def __post_init__(self):
        self.p1 = np.asarray(self.p1, dtype=np.float64)
        self.p2 = np.asarray(self.p2, dtype=np.float64)
        self.p3 = np.asarray(self.p3, dtype=np.float64)
        for name in ("p1", "p2", "p3"):
            if getattr(self, name).ndim != 2:
                raise ValueError(f"{name} must be a matrix")

    @property
    def hr_shape(self):
        """``(M, N, B)`` of the high-resolution cube."""
        return (self.p1.shape[1], self.p2.shape[1], self.p3.shape[1])

    @property
    def hsi_shape(self):
        return (self.p1.shape[0], self.p2.shape[0], self.p3.shape[1])

    @property
    def msi_shape(self):
        return (self.p1.shape[1], self.p2.shape[1], self.p3.shape[0])

    @classmethod
    def identity(cls, shape):
        m, n, b = shape
        return cls(np.eye(m), np.eye(n), np.eye(b), band_groups=[[k] for k in range(b)])


@dataclass(frozen=True)
class SimulationConfig:
    snr_db: float = math.inf
    seed: int = 0
    scale_max: float = 255.0

    def __post_init__(self):
        if not self.snr_db > 0:
            raise ValueError("SNR must be positive (use inf for noiseless)")


def build_spatial_operator(full_dim, factor, kernel_size):
    """Average-kernel blur followed by decimation, as an ``(M/factor) x M`` matrix.

    Row ``r`` averages `kernel_size` samples starting at
    ``r*factor - (kernel_size - factor)//2``; windows are clipped at the borders
    and renormalized so every row sums to one.
    """
    if factor < 1 or full_dim % factor:
        raise ValueError(f"dimension {full_dim} is not divisible by factor {factor}")
    if kernel_size < factor:
        raise ValueError(f"kernel size {kernel_size} is smaller than factor {factor}")
    rows = full_dim // factor
    offset = (kernel_size - factor) // 2
    p = np.zeros((rows, full_dim))
    for r in range(rows):
        lo = max(r * factor - offset, 0)
        hi = min(r * factor - offset + kernel_size, full_dim)
        p[r, lo:hi] = 1.0 / (hi - lo)
    return p


def equal_band_groups(n_bands, n_groups):
    """Split ``range(n_bands)`` into contiguous groups; earlier groups take the remainder."""
    if not 1 <= n_groups <= n_bands:
        raise ValueError(f"cannot split {n_bands} bands into {n_groups} groups")
    base, extra = divmod(n_bands, n_groups)
    groups, start = [], 0
    for g in range(n_groups):
        size = base + (1 if g < extra else 0)
        groups.append(list(range(start, start + size)))
        start += size
    return groups


def build_spectral_operator(n_bands, band_groups):
    """Band-averaging spectral response: row g is the mean of the bands in group g."""
    seen = set()
    p = np.zeros((len(band_groups), n_bands))
    for g, group in enumerate(band_groups):
        group = [int(k) for k in group]
        if not group:
            raise ValueError(f"band group {g} is empty")
        for k in group:
            if not 0 <= k < n_bands:
                raise ValueError(f"band {k} outside 0..{n_bands - 1}")
            if k in seen:
                raise ValueError(f"band {k} appears in more than one group")
            seen.add(k)
        p[g, group] = 1.0 / len(group)
    return p


def load_spectral_operator(path):
    """Read a b x B spectral response written as whitespace-separated rows."""
    p = np.loadtxt(path, dtype=np.float64, ndmin=2)
    if p.size == 0:
        raise ValueError(f"{path}: empty spectral response")
    return p


def save_spectral_operator(path, p):
    # repr-precision keeps the round trip exact
    np.savetxt(path, np.asarray(p, dtype=np.float64), fmt="%.17g")


def build_model(hr_shape, factor, kernel_size, n_msi_bands=None, band_groups=None, p3=None):
    """Assemble a :class:`DegradationModel` for an ``M x N x B`` cube."""
    m, n, b = hr_shape
    p1 = build_spatial_operator(m, factor, kernel_size)
    p2 = build_spatial_operator(n, factor, kernel_size)
    if p3 is None:
        if band_groups is None:
            band_groups = equal_band_groups(b, n_msi_bands or 4)
        p3 = build_spectral_operator(b, band_groups)
    else:
        p3 = np.asarray(p3, dtype=np.float64)
        if p3.shape[1] != b:
            raise ValueError(f"spectral response has {p3.shape[1]} columns, cube has {b} bands")
        band_groups = None
    return DegradationModel(p1, p2, p3, factor, kernel_size, band_groups)


def degrade(x, model):
    """Return ``(y, z)``: ``y = x x1 P1 x2 P2`` and ``z = x x3 P3``."""
    x = as_tensor(x)
    if x.shape != model.hr_shape:
        raise ValueError(f"cube shape {x.shape} does not match operators {model.hr_shape}")
    y = np.einsum("im,mnb->inb", model.p1, x)
    y = np.einsum("jn,inb->ijb", model.p2, y)
    z = np.einsum("cb,mnb->mnc", model.p3, x)
    return y, z


def noise_sigma(t, snr_db):
    """Noise standard deviation giving `snr_db` relative to the mean signal power."""
    if math.isinf(snr_db):
        return 0.0
    power = float(np.mean(np.square(t)))
    return math.sqrt(power * 10.0 ** (-snr_db / 10.0))


def add_noise(t, snr_db, rng=None):
    """Add i.i.d. Gaussian noise at `snr_db` (``inf`` returns a copy).

    `rng` is a ``numpy.random.Generator`` or a seed.
    """
    t = as_tensor(t)
    if not snr_db > 0:
        raise ValueError("SNR must be positive")
    if math.isinf(snr_db):
        return t.copy()
    rng = np.random.default_rng(rng)
    return t + noise_sigma(t, snr_db) * rng.standard_normal(t.shape)


def rescale_to(t, max_value=255.0):
    """Affine map sending ``min(t)`` to 0 and ``max(t)`` to `max_value`."""
    t = as_tensor(t)
    lo, hi = float(t.min()), float(t.max())
    if hi == lo:
        raise ValueError("cannot rescale a constant tensor")
    return (t - lo) / (hi - lo) * max_value


def simulate(x, model, cfg=SimulationConfig()):
    """Rescale `x`, degrade it and add noise to both observations.

    Returns ``(x_scaled, y, z)``. The HSI noise is drawn before the MSI noise
    from a single generator seeded with ``cfg.seed``.
    """
    xs = rescale_to(x, cfg.scale_max)
    y, z = degrade(xs, model)
    rng = np.random.default_rng(cfg.seed)
    return xs, add_noise(y, cfg.snr_db, rng), add_noise(z, cfg.snr_db, rng)
