"""SURE-driven selection of the pruning threshold.

SURE estimates the MSE of a denoiser from the noisy image alone, given the
divergence of the estimator.  The threshold search starts from a cubic rule
in the noise level and refines it with golden-section search on a fixed
bracket around that guess, reusing one distance field for every probe.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .denoise import DenoiseResult, PnlmEvaluator
from .grid import as_image, write_csv
from .patch import DEFAULT_CACHE_MB, DistanceField, NlmParams

__all__ = [
    "CUBIC_COEFFS",
    "TuneResult",
    "NumericalFault",
    "sure",
    "lambda_init",
    "eval_cubic",
    "fit_lambda_rule",
    "golden_section_search",
    "golden_section_tune",
    "tune_and_denoise",
]

# lambda* ~ c3 sigma^3 + c2 sigma^2 + c1 sigma + c0, fitted for S=10, K=3, h=10 sigma
CUBIC_COEFFS = (4.3e-7, -1.1e-4, 9.2e-3, 0.039)

RHO = 0.618
DELTA = 0.05
TOL = 1e-4
LAM_MIN, LAM_MAX = 0.001, 0.999


class NumericalFault(ArithmeticError):
    """A risk evaluation produced a non-finite value."""


@dataclass
class TuneResult:
    lambda_star: float
    sure_at_star: float
    iterations: int
    trace: list[tuple[float, float]] = field(default_factory=list)
    bracket: tuple[float, float] = (0.0, 1.0)
    widths: list[float] = field(default_factory=list)

    @property
    def n_evals(self) -> int:
        return len(self.trace)

    def to_csv(self, path=None) -> str:
        """Probe trace as CSV with columns ``iter, lambda, sure``."""
        return write_csv(path, ["iter", "lambda", "sure"],
                         [(k, lam, val) for k, (lam, val) in enumerate(self.trace)])


def sure(denoised, noisy, divergence, sigma: float) -> float:
    """Stein's unbiased estimate of the per-pixel MSE of ``denoised``.

    ``mean((xhat - y)^2) - sigma^2 + 2 sigma^2 mean(d xhat_i / d y_i)``.
    Can be negative.
    """
    xh = as_image(denoised)
    y = as_image(noisy)
    div = np.asarray(divergence, dtype=np.float64)
    if xh.shape != y.shape or div.shape != y.shape:
        raise ValueError("denoised, noisy and divergence must have the same shape")
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    s2 = sigma * sigma
    return float(np.mean((xh - y) ** 2) - s2 + 2.0 * s2 * np.mean(div))


def eval_cubic(coeffs, sigma):
    c3, c2, c1, c0 = coeffs
    return ((c3 * sigma + c2) * sigma + c1) * sigma + c0


def lambda_init(sigma: float, coeffs=CUBIC_COEFFS) -> float:
    """Starting threshold from the cubic noise-level rule, clamped to [0, 1].

    The default coefficients were fitted for ``S=10, K=3, h=10 sigma``.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    return float(min(1.0, max(0.0, eval_cubic(coeffs, sigma))))


def fit_lambda_rule(samples) -> tuple[float, float, float, float]:
    """Least-squares cubic through ``(sigma, lambda*)`` pairs; returns ``(c3, c2, c1, c0)``."""
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("samples must be (sigma, lambda) pairs")
    sig, lam = arr[:, 0], arr[:, 1]
    if len(np.unique(sig)) < 4:
        raise np.linalg.LinAlgError("rank-deficient design: need at least 4 distinct sigma values")
    # scale sigma to keep the Vandermonde system well conditioned
    scale = float(np.max(np.abs(sig))) or 1.0
    V = np.vander(sig / scale, 4)
    coef, *_ = np.linalg.lstsq(V, lam, rcond=None)
    return tuple(float(c / scale ** p) for c, p in zip(coef, (3, 2, 1, 0)))


def golden_section_search(f: Callable[[float], float], lam0: float, delta: float = DELTA,
                          rho: float = RHO, tol: float = TOL,
                          lo: float = LAM_MIN, hi: float = LAM_MAX,
                          max_iter: int = 100) -> TuneResult:
    """Minimise ``f`` on ``[lam0 - delta, lam0 + delta]`` clipped to ``[lo, hi]``.

    Each iteration probes ``p = u - rho (u - l)`` and ``q = l + rho (u - l)``
    and keeps ``[p, u]`` if ``f(p) > f(q)`` else ``[l, q]``.  Stops when the
    bracket midpoint moves by at most ``tol``; returns the final midpoint.
    Probe values are memoised, so a repeated abscissa is not re-evaluated.
    """
    l = max(lo, lam0 - delta)
    u = min(hi, lam0 + delta)
    if not l < u:
        raise ValueError("empty search bracket")
    trace: list[tuple[float, float]] = []
    memo: dict[float, float] = {}

    def probe(x):
        if x not in memo:
            v = float(f(x))
            if not math.isfinite(v):
                raise NumericalFault(f"non-finite risk {v} at lambda={x}")
            memo[x] = v
            trace.append((x, v))
        return memo[x]

    widths = [u - l]
    mid = 0.5 * (l + u)
    k = 0
    while k < max_iter:
        width = u - l
        p = u - rho * width
        q = l + rho * width
        if probe(p) > probe(q):
            l = p
        else:
            u = q
        k += 1
        widths.append(u - l)
        new_mid = 0.5 * (l + u)
        moved = abs(new_mid - mid)
        mid = new_mid
        if moved <= tol:
            break
    return TuneResult(mid, math.nan, k, trace, (l, u), widths)


def golden_section_tune(noisy, params: NlmParams, field: DistanceField, alpha: float = 100.0,
                        lam0: float | None = None, delta: float = DELTA, rho: float = RHO,
                        tol: float = TOL, cache_mb: float = DEFAULT_CACHE_MB,
                        evaluator: PnlmEvaluator | None = None) -> TuneResult:
    """Pick the PNLM threshold minimising SURE, without the clean image.

    ``lam0`` defaults to :func:`lambda_init` at ``params.sigma``.  Every probe
    reuses ``field``; only the sigmoid-shaped weights are re-evaluated.
    """
    res, _ = tune_and_denoise(noisy, params, field, alpha, lam0, delta, rho, tol,
                              cache_mb, evaluator)
    return res


def tune_and_denoise(noisy, params: NlmParams, field: DistanceField, alpha: float = 100.0,
                     lam0: float | None = None, delta: float = DELTA, rho: float = RHO,
                     tol: float = TOL, cache_mb: float = DEFAULT_CACHE_MB,
                     evaluator: PnlmEvaluator | None = None
                     ) -> tuple[TuneResult, DenoiseResult]:
    """Tune the threshold, then return it with the PNLM output at that threshold."""
    noisy = as_image(noisy)
    if lam0 is None:
        lam0 = lambda_init(params.sigma)
    if evaluator is None:
        evaluator = PnlmEvaluator(noisy, params, field, alpha=alpha,
                                  lam_ref=min(1.0, max(0.0, lam0)), cache_mb=cache_mb)
    sigma = params.sigma

    def risk(lam):
        r = evaluator(lam)
        return sure(r.denoised, noisy, r.divergence, sigma)

    result = golden_section_search(risk, lam0, delta=delta, rho=rho, tol=tol)
    final = evaluator(result.lambda_star)
    result.sure_at_star = sure(final.denoised, noisy, final.divergence, sigma)
    if not math.isfinite(result.sure_at_star):
        raise NumericalFault("non-finite risk at the selected threshold")
    return result, final
