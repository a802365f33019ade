"""Restoration quality metrics: PSNR and SSIM."""

import math
from dataclasses import dataclass

import numpy as np

from .operators import ImageTensor


@dataclass
class MetricReport:
    psnr_db: float  # math.inf when the images are identical
    ssim: float

    @property
    def identical(self):
        return math.isinf(self.psnr_db)


def _as_image(x):
    if isinstance(x, ImageTensor):
        return x.data
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3:
        raise ValueError(f"expected a (c, h, w) image, got shape {arr.shape}")
    return arr


def psnr(a, b, peak=1.0):
    """10 log10(peak^2 / MSE); returns inf for identical inputs."""
    a, b = _as_image(a), _as_image(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak**2 / mse)


def _gaussian_window(size, sigma):
    x = np.arange(size) - (size - 1) / 2.0
    w = np.exp(-(x**2) / (2.0 * sigma**2))
    return w / w.sum()


def _windowed(img, win):
    """Separable 'valid' correlation of a (h, w) image with win x win."""
    size = win.size
    h, w = img.shape
    rows = np.empty((h, w - size + 1))
    for i, wi in enumerate(win):
        piece = img[:, i : w - size + 1 + i]
        rows = rows + wi * piece if i else wi * piece
    out = np.empty((h - size + 1, rows.shape[1]))
    for i, wi in enumerate(win):
        piece = rows[i : h - size + 1 + i, :]
        out = out + wi * piece if i else wi * piece
    return out


def ssim(a, b, window=11, k1=0.01, k2=0.03, sigma=1.5, peak=1.0):
    """Mean local structural similarity with a Gaussian window.

    Channels are scored independently and averaged; only windows fully
    inside the image contribute.
    """
    a, b = _as_image(a), _as_image(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if min(a.shape[1], a.shape[2]) < window:
        raise ValueError(f"image smaller than the {window}x{window} window")
    win = _gaussian_window(window, sigma)
    c1 = (k1 * peak) ** 2
    c2 = (k2 * peak) ** 2
    scores = []
    for ca, cb in zip(a, b):
        mu_a = _windowed(ca, win)
        mu_b = _windowed(cb, win)
        var_a = _windowed(ca * ca, win) - mu_a**2
        var_b = _windowed(cb * cb, win) - mu_b**2
        cov = _windowed(ca * cb, win) - mu_a * mu_b
        num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
        den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
        scores.append(float(np.mean(num / den)))
    return float(np.mean(scores))


def report(a, b, peak=1.0):
    return MetricReport(psnr_db=psnr(a, b, peak), ssim=ssim(a, b, peak=peak))
