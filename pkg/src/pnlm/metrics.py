"""Seeded Gaussian noise and image-quality metrics (MSE, PSNR, SSIM).

Noise is drawn with numpy's ``PCG64`` bit generator and ziggurat normal
sampler (``numpy.random.Generator.standard_normal``), row-major over the
image.  The same seed gives the same noisy image on every platform for a
given numpy major version.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .grid import as_image

__all__ = [
    "NoiseSpec",
    "QualityReport",
    "add_gaussian",
    "mse",
    "psnr",
    "ssim",
    "quality",
    "ssim_window",
]

PEAK = 255.0


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")


@dataclass(frozen=True)
class QualityReport:
    mse: float
    psnr: float
    ssim: float

    @property
    def ssim_x100(self) -> float:
        return 100.0 * self.ssim


def add_gaussian(img, spec: NoiseSpec) -> np.ndarray:
    """Add i.i.d. N(0, sigma^2) noise.  The result is not clipped."""
    img = as_image(img)
    if spec.sigma == 0:
        return img.copy()
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    return img + spec.sigma * rng.standard_normal(img.shape)


def _same_shape(a, b):
    a, b = as_image(a), as_image(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def mse(a, b) -> float:
    a, b = _same_shape(a, b)
    return float(np.mean((a - b) ** 2))


def psnr(mse_value: float) -> float:
    """``10 log10(255^2 / mse)``; ``inf`` when ``mse == 0``."""
    if mse_value < 0:
        raise ValueError("mse must be >= 0")
    if mse_value == 0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK / mse_value)


def ssim_window(size: int = 11, std: float = 1.5) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2
    g = np.exp(-(x ** 2) / (2 * std * std))
    k = np.outer(g, g)
    return k / k.sum()


def ssim(a, b, k1: float = 0.01, k2: float = 0.03, size: int = 11, std: float = 1.5) -> float:
    """Mean SSIM over all fully-covered 11x11 Gaussian windows (std 1.5, L = 255)."""
    a, b = _same_shape(a, b)
    if a.shape[0] < size or a.shape[1] < size:
        raise ValueError(f"image smaller than the {size}x{size} SSIM window")
    win = ssim_window(size, std)
    c1 = (k1 * PEAK) ** 2
    c2 = (k2 * PEAK) ** 2
    half = size // 2
    crop = (slice(half, a.shape[0] - (size - 1 - half)), slice(half, a.shape[1] - (size - 1 - half)))

    def filt(x):
        return ndimage.correlate(x, win, mode="constant")[crop]

    mu_a, mu_b = filt(a), filt(b)
    var_a = filt(a * a) - mu_a ** 2
    var_b = filt(b * b) - mu_b ** 2
    cov = filt(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
    return float((num / den).mean())


def quality(estimate, clean) -> QualityReport:
    m = mse(estimate, clean)
    return QualityReport(m, psnr(m), ssim(estimate, clean))
