"""Reconstruction quality indices for hyperspectral cubes (rows x cols x bands).

PSNR and SSIM are computed band by band and averaged. SSIM uses an 8x8
uniform window over all valid positions with population (co)variances.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

__all__ = [
    "QualityReport",
    "METRIC_KEYS",
    "rmse",
    "psnr",
    "ergas",
    "sam",
    "ssim",
    "evaluate",
]

METRIC_KEYS = ("psnr", "rmse", "ergas", "sam", "ssim")


@dataclass(frozen=True)
class QualityReport:
    psnr: float
    rmse: float
    ergas: float
    sam: float
    ssim: float

    def as_dict(self):
        return asdict(self)

    def to_text(self):
        return "\n".join(f"{k} = {getattr(self, k)!r}" for k in METRIC_KEYS)

    def csv_header(self):
        return ",".join(METRIC_KEYS)

    def csv_row(self):
        return ",".join(repr(float(getattr(self, k))) for k in METRIC_KEYS)


def _pair(x_hat, x_ref):
    a = np.asarray(x_hat, dtype=np.float64)
    b = np.asarray(x_ref, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def _bands(a):
    # treat a 2-D image as a single band
    return a[..., None] if a.ndim == 2 else a


def rmse(x_hat, x_ref):
    a, b = _pair(x_hat, x_ref)
    return float(np.sqrt(np.mean(np.square(a - b))))


def psnr(x_hat, x_ref, peak=255.0, cap=100.0):
    """Band-averaged PSNR in dB; a band with zero error contributes `cap`."""
    a, b = _pair(x_hat, x_ref)
    a, b = _bands(a), _bands(b)
    mse = np.mean(np.square(a - b), axis=(0, 1))
    vals = [cap if m == 0 else 10.0 * math.log10(peak**2 / m) for m in mse]
    return float(np.mean(vals))


def ergas(x_hat, x_ref, ratio):
    """``100/ratio * sqrt(mean_b (rmse_b / mean_b)^2)`` with band means of the reference."""
    a, b = _pair(x_hat, x_ref)
    a, b = _bands(a), _bands(b)
    means = np.mean(b, axis=(0, 1))
    if np.any(means == 0):
        raise ValueError("ERGAS undefined: reference has a band with zero mean")
    band_rmse = np.sqrt(np.mean(np.square(a - b), axis=(0, 1)))
    return float(100.0 / ratio * np.sqrt(np.mean(np.square(band_rmse / means))))


def sam(x_hat, x_ref):
    """Mean spectral angle in degrees over pixels whose spectra are both non-zero."""
    a, b = _pair(x_hat, x_ref)
    u = a.reshape(-1, a.shape[-1])
    v = b.reshape(-1, b.shape[-1])
    nu = np.linalg.norm(u, axis=1)
    nv = np.linalg.norm(v, axis=1)
    ok = (nu > 0) & (nv > 0)
    if not np.any(ok):
        raise ValueError("SAM undefined: every pixel has a zero spectrum")
    u, v, nu, nv = u[ok], v[ok], nu[ok, None], nv[ok, None]
    # Kahan's formula: exact zero for parallel spectra, accurate near 0 and 90 degrees
    diff = np.linalg.norm(u * nv - v * nu, axis=1)
    summ = np.linalg.norm(u * nv + v * nu, axis=1)
    ang = 2.0 * np.arctan2(diff, summ)
    return float(np.degrees(np.mean(ang)))


def _box_mean(img, w):
    c = np.cumsum(np.cumsum(img, axis=0), axis=1)
    c = np.pad(c, ((1, 0), (1, 0)))
    s = c[w:, w:] - c[:-w, w:] - c[w:, :-w] + c[:-w, :-w]
    return s / (w * w)


def _ssim_band(x, y, peak, window):
    c1 = (0.01 * peak) ** 2
    c2 = (0.03 * peak) ** 2
    # (co)variances are shift invariant; centring first limits cancellation
    off_x, off_y = x.mean(), y.mean()
    xc, yc = x - off_x, y - off_y
    mx, my = _box_mean(xc, window), _box_mean(yc, window)
    vx = _box_mean(xc * xc, window) - mx * mx
    vy = _box_mean(yc * yc, window) - my * my
    cxy = _box_mean(xc * yc, window) - mx * my
    mx, my = mx + off_x, my + off_y
    num = (2 * mx * my + c1) * (2 * cxy + c2)
    den = (mx * mx + my * my + c1) * (vx + vy + c2)
    return float(np.mean(num / den))


def ssim(x_hat, x_ref, peak=255.0, window=8):
    """Band-averaged single-scale SSIM with a `window` x `window` uniform window."""
    a, b = _pair(x_hat, x_ref)
    a, b = _bands(a), _bands(b)
    if a.shape[0] < window or a.shape[1] < window:
        raise ValueError(f"image {a.shape[:2]} smaller than the {window}x{window} SSIM window")
    return float(np.mean([_ssim_band(a[:, :, k], b[:, :, k], peak, window) for k in range(a.shape[2])]))


def evaluate(x_hat, x_ref, ratio, peak=255.0):
    """All five indices as a :class:`QualityReport`."""
    return QualityReport(
        psnr=psnr(x_hat, x_ref, peak),
        rmse=rmse(x_hat, x_ref),
        ergas=ergas(x_hat, x_ref, ratio),
        sam=sam(x_hat, x_ref),
        ssim=ssim(x_hat, x_ref, peak),
    )
