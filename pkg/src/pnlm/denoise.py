"""NLM, hard-pruned NLM and sigmoid-pruned NLM (PNLM), with the exact divergence.

PNLM replaces each weight ``w`` by ``psi(w) = w * phi(w)`` where ``phi`` is a
logistic step centred at the threshold ``lam`` with slope ``alpha``.  Because
``psi`` is smooth, ``d xhat_i / d y_i`` has a closed form, which is what SURE
needs.  The divergence accounts for every copy of ``y_i`` in the extended
image, so it is exact at the borders as well as in the interior.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import _kernels
from .grid import as_image, reflect_index
from .patch import DEFAULT_CACHE_MB, DistanceField, NlmParams, compute_distance_field

__all__ = [
    "PruneConfig",
    "DenoiseResult",
    "PnlmEvaluator",
    "step_threshold",
    "sigmoid_threshold",
    "psi",
    "psi_prime",
    "denoise",
    "naive_nlm",
]

Mode = Literal["none", "hard", "soft"]


@dataclass(frozen=True)
class PruneConfig:
    mode: Mode = "none"
    lam: float = 0.0
    alpha: float = 100.0

    def __post_init__(self):
        if self.mode not in ("none", "hard", "soft"):
            raise ValueError(f"unknown prune mode {self.mode!r}")
        if self.mode != "none":
            if not 0.0 <= self.lam <= 1.0:
                raise ValueError("lam must lie in [0, 1]")
            if not self.alpha > 0:
                raise ValueError("alpha must be > 0")


@dataclass(frozen=True)
class DenoiseResult:
    denoised: np.ndarray
    divergence: np.ndarray | None = None
    weight_sum: np.ndarray | None = None


def step_threshold(t, lam: float):
    """1 where ``lam <= t``, else 0."""
    out = (np.asarray(t) >= lam).astype(np.float64)
    return float(out) if out.ndim == 0 else out


def _exp_neg_abs(x):
    return np.exp(-np.abs(x))


def sigmoid_threshold(t, lam: float, alpha: float = 100.0):
    """Logistic relaxation ``1 / (1 + exp(-alpha (t - lam)))`` of the step."""
    x = alpha * (np.asarray(t, dtype=np.float64) - lam)
    u = _exp_neg_abs(x)
    out = np.where(x >= 0, 1.0 / (1.0 + u), u / (1.0 + u))
    return float(out) if out.ndim == 0 else out


def psi(t, cfg: PruneConfig):
    t = np.asarray(t, dtype=np.float64)
    out = t * sigmoid_threshold(t, cfg.lam, cfg.alpha)
    return float(out) if np.ndim(out) == 0 else out


def psi_prime(t, cfg: PruneConfig):
    """Derivative of ``psi``: ``(1 + (1 + alpha t) E) / (1 + E)**2``, ``E = exp(-alpha (t - lam))``.

    Evaluated as ``(u**2 + (1 + alpha t) u) / (1 + u)**2`` with ``u = 1/E`` when
    ``E > 1`` so large slopes do not overflow.
    """
    t = np.asarray(t, dtype=np.float64)
    a = cfg.alpha
    x = a * (t - cfg.lam)
    u = _exp_neg_abs(x)
    lin = 1.0 + a * t
    out = np.where(x >= 0,
                   (1.0 + lin * u) / (1.0 + u) ** 2,
                   (u * u + lin * u) / (1.0 + u) ** 2)
    return float(out) if out.ndim == 0 else out


def _mirror_offsets(n: int, reach: int) -> tuple[np.ndarray, np.ndarray]:
    """For each index i, the offsets q in [-reach, reach] whose reflection lands on i."""
    m = reflect_index(n, reach)
    q = np.arange(-reach, reach + 1)
    hits = m[np.arange(n)[:, None] + reach + q[None, :]] == np.arange(n)[:, None]
    counts = hits.sum(axis=1).astype(np.int64)
    table = np.zeros((n, int(counts.max())), dtype=np.int64)
    for i in range(n):
        sel = q[hits[i]]
        # put 0 first so interior rows read as [0]
        table[i, :len(sel)] = sorted(sel, key=abs)
    return table, counts


class PnlmEvaluator:
    """Evaluate PNLM and its divergence for many thresholds on one distance field.

    Weights ``w`` and ``exp(-alpha (w - lam_ref))`` are computed once and kept
    when they fit within ``cache_mb``; each threshold then costs one pass with
    no exponentials.  When they do not fit, they are recomputed band by band.
    """

    def __init__(self, noisy, params: NlmParams, field: DistanceField,
                 alpha: float = 100.0, lam_ref: float = 0.5,
                 cache_mb: float = DEFAULT_CACHE_MB):
        noisy = as_image(noisy)
        _check_field(noisy, params, field)
        if not alpha > 0:
            raise ValueError("alpha must be > 0")
        self.noisy = noisy
        self.params = params
        self.field = field
        self.alpha = float(alpha)
        self.lam_ref = float(lam_ref)
        self.inv_h2 = 1.0 / (params.h * params.h)
        self._yp = field.padded
        reach = params.S + params.K
        self._qr, self._nqr = _mirror_offsets(noisy.shape[0], reach)
        self._qc, self._nqc = _mirror_offsets(noisy.shape[1], reach)
        self._cache = None
        if field.cached and 2 * field.nbytes <= cache_mb * 2 ** 20:
            self._cache = [(r0, r1, *self._weights(band)) for r0, r1, band in field.bands()]
        self.n_evals = 0

    def _weights(self, d):
        w = np.exp(d * (-self.inv_h2))
        with np.errstate(over="ignore"):
            e = np.exp((w - self.lam_ref) * (-self.alpha))
        return w, e

    def _bands(self):
        if self._cache is not None:
            yield from self._cache
            return
        for r0, r1, band in self.field.bands():
            yield (r0, r1, *self._weights(band))

    def __call__(self, lam: float, divergence: bool = True) -> DenoiseResult:
        if not 0.0 <= lam <= 1.0:
            raise ValueError("lam must lie in [0, 1]")
        self.n_evals += 1
        with np.errstate(over="ignore"):
            c = math.exp(min(self.alpha * (lam - self.lam_ref), 709.0))
        shape = self.noisy.shape
        out = np.empty(shape)
        wsum = np.empty(shape)
        div = np.empty(shape) if divergence else np.empty((1, 1))
        p = self.params
        for r0, r1, w, e in self._bands():
            dv = div[r0:r1] if divergence else div
            _kernels.pnlm_band(w, e, c, self.alpha, self._yp, self.field.pad, p.S, p.K,
                               r0, self.inv_h2, divergence, self._qr, self._nqr,
                               self._qc, self._nqc, out[r0:r1], dv, wsum[r0:r1])
        return DenoiseResult(out, div if divergence else None, wsum)


def _check_field(noisy: np.ndarray, params: NlmParams, field: DistanceField) -> None:
    if field.shape != noisy.shape:
        raise ValueError(f"distance field shape {field.shape} != image shape {noisy.shape}")
    if (field.S, field.K) != (params.S, params.K):
        raise ValueError("distance field radii do not match params")


def denoise(noisy, params: NlmParams, cfg: PruneConfig = PruneConfig(),
            field: DistanceField | None = None, **field_kw) -> DenoiseResult:
    """Denoise ``noisy`` with plain NLM (``mode='none'``), hard pruning or PNLM.

    Only ``mode='soft'`` returns a divergence plane.  ``field`` is computed on
    the fly if not given (``field_kw`` goes to :func:`compute_distance_field`).
    """
    noisy = as_image(noisy)
    if field is None:
        field = compute_distance_field(noisy, params, **field_kw)
    _check_field(noisy, params, field)
    if cfg.mode == "soft":
        ev = PnlmEvaluator(noisy, params, field, alpha=cfg.alpha, lam_ref=cfg.lam,
                           cache_mb=0)
        return ev(cfg.lam)

    inv_h2 = 1.0 / (params.h * params.h)
    out = np.empty(noisy.shape)
    wsum = np.empty(noisy.shape)
    hard = cfg.mode == "hard"
    for r0, r1, band in field.bands():
        w = np.exp(band * (-inv_h2))
        _kernels.nlm_band(w, field.padded, field.pad, params.S, r0, float(cfg.lam), hard,
                          out[r0:r1], wsum[r0:r1])
    return DenoiseResult(out, None, wsum)


def naive_nlm(noisy, params: NlmParams, cfg: PruneConfig = PruneConfig()) -> np.ndarray:
    """Textbook quadruple loop over pixels, window and patch (slow; for checks)."""
    from .grid import extend

    noisy = as_image(noisy)
    S, K, h = params.S, params.K, params.h
    p = S + K
    yp = extend(noisy, p).data
    out = np.empty(noisy.shape)
    for i in range(noisy.shape[0]):
        for j in range(noisy.shape[1]):
            num = den = 0.0
            for dr in range(-S, S + 1):
                for dc in range(-S, S + 1):
                    d = 0.0
                    for ki in range(-K, K + 1):
                        for kj in range(-K, K + 1):
                            diff = yp[p + i + ki, p + j + kj] - yp[p + i + dr + ki, p + j + dc + kj]
                            d += diff * diff
                    w = math.exp(-d / (h * h))
                    if cfg.mode == "hard":
                        w *= step_threshold(w, cfg.lam)
                    elif cfg.mode == "soft":
                        w = psi(w, cfg)
                    num += w * yp[p + i + dr, p + j + dc]
                    den += w
            out[i, j] = num / den
    return out
