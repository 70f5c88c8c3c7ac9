"""Experiment drivers behind the CLI: threshold sweeps, the edge study,
noise-level/threshold refits and the NLM-vs-PNLM benchmark."""
from __future__ import annotations

import math
import time
import zlib
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .denoise import PnlmEvaluator, PruneConfig, denoise
from .grid import as_image
from .metrics import NoiseSpec, add_gaussian, mse, psnr, ssim
from .patch import DEFAULT_CACHE_MB, NlmParams, compute_distance_field
from .tuning import fit_lambda_rule, sure, tune_and_denoise

__all__ = [
    "derive_seed",
    "sweep_lambda",
    "EdgeConfig",
    "EdgeReport",
    "edge_signal",
    "patch_weights_1d",
    "edge_experiment",
    "mse_argmin",
    "sigma_lambda_sweep",
    "BENCH_COLUMNS",
    "benchmark",
    "format_table",
]


def derive_seed(seed: int, *keys) -> int:
    """Deterministic 64-bit seed for one (image, sigma, ...) combination."""
    words = [int(seed) & 0xFFFFFFFF]
    for k in keys:
        if isinstance(k, str):
            words.append(zlib.crc32(k.encode()))
        else:
            words.append(int(round(float(k) * 1000)) & 0xFFFFFFFF)
    return int(np.random.SeedSequence(words).generate_state(1, np.uint64)[0])


def frange(spec: str) -> list[float]:
    """Parse ``"a:b:step"`` (inclusive) or a comma list into floats."""
    if ":" in spec:
        a, b, step = (float(x) for x in spec.split(":"))
        n = int(math.floor((b - a) / step + 1e-9)) + 1
        return [round(a + k * step, 10) for k in range(n)]
    return [float(x) for x in spec.split(",") if x.strip()]


# -- threshold sweep ----------------------------------------------------------

def sweep_lambda(noisy, clean, params: NlmParams, grid: Sequence[float], alpha: float = 100.0,
                 field=None, cache_mb: float = DEFAULT_CACHE_MB) -> list[tuple[float, float, float]]:
    """``(lambda, MSE vs clean, SURE)`` for every threshold in ``grid``."""
    noisy = as_image(noisy)
    if clean is None:
        raise ValueError("a clean reference is required for the MSE column")
    clean = as_image(clean)
    if field is None:
        field = compute_distance_field(noisy, params, cache_mb=cache_mb)
    lam_ref = float(np.median(grid)) if len(grid) else 0.5
    ev = PnlmEvaluator(noisy, params, field, alpha=alpha, lam_ref=lam_ref, cache_mb=cache_mb)
    rows = []
    for lam in grid:
        r = ev(lam)
        rows.append((float(lam), mse(r.denoised, clean),
                     sure(r.denoised, noisy, r.divergence, params.sigma)))
    return rows


def mse_argmin(noisy, clean, params: NlmParams, grid: Sequence[float], alpha: float = 100.0,
               field=None, cache_mb: float = DEFAULT_CACHE_MB) -> tuple[float, float]:
    """Exhaustive search of the PNLM threshold minimising MSE against ``clean``."""
    noisy, clean = as_image(noisy), as_image(clean)
    if field is None:
        field = compute_distance_field(noisy, params, cache_mb=cache_mb)
    ev = PnlmEvaluator(noisy, params, field, alpha=alpha, lam_ref=float(np.median(grid)),
                       cache_mb=cache_mb)
    best = (math.nan, math.inf)
    for lam in grid:
        m = mse(ev(lam, divergence=False).denoised, clean)
        if m < best[1]:
            best = (float(lam), m)
    return best


# -- edge experiment ------------------------------------------------------------

@dataclass(frozen=True)
class EdgeConfig:
    """1-D two-level step; samples ``< edge`` are ``low``, the rest ``high``."""

    length: int = 36
    edge: int = 21
    poi: int = 18
    low: float = 0.0
    high: float = 100.0
    S: int = 10
    K: int = 3
    sigma: float = 80.0
    h: float | None = None
    keep: float = 0.5
    seeds: int = 200
    seed: int = 0

    @property
    def smoothing(self) -> float:
        return 10.0 * self.sigma if self.h is None else self.h


@dataclass
class EdgeReport:
    config: EdgeConfig
    neighbors: np.ndarray
    same_side: np.ndarray
    clean_weights: np.ndarray
    noisy_weights: np.ndarray          # first seed
    clean_value: float
    clean_nlm: float
    nlm: np.ndarray = field(default_factory=lambda: np.empty(0))
    pruned: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def nlm_error(self) -> np.ndarray:
        return np.abs(self.nlm - self.clean_value)

    @property
    def pruned_error(self) -> np.ndarray:
        return np.abs(self.pruned - self.clean_value)

    @property
    def win_fraction(self) -> float:
        return float(np.mean(self.pruned_error < self.nlm_error))

    def weight_rows(self):
        for j, side, wc, wn in zip(self.neighbors, self.same_side,
                                   self.clean_weights, self.noisy_weights):
            yield int(j), int(side), float(wc), float(wn)

    def seed_rows(self):
        for k, (a, b) in enumerate(zip(self.nlm, self.pruned)):
            yield k, float(a), float(b), abs(a - self.clean_value), abs(b - self.clean_value)


def edge_signal(cfg: EdgeConfig) -> np.ndarray:
    x = np.full(cfg.length, cfg.low, dtype=np.float64)
    x[cfg.edge:] = cfg.high
    return x


def patch_weights_1d(signal, poi: int, S: int, K: int, h: float):
    """Neighbour indices ``poi-S..poi+S`` and their patch weights (h = 0 keeps exact matches only)."""
    y = np.asarray(signal, dtype=np.float64)
    p = S + K
    yp = np.pad(y, p, mode="symmetric")
    idx = np.arange(poi - S, poi + S + 1)
    ref = yp[poi - K + p: poi + K + 1 + p]
    d = np.array([np.sum((ref - yp[j - K + p: j + K + 1 + p]) ** 2) for j in idx])
    w = np.exp(-d / (h * h)) if h > 0 else (d == 0).astype(np.float64)
    return idx, w, yp[idx + p]


def _top_fraction_average(w, v, keep: float) -> float:
    n = max(1, int(math.ceil(keep * len(w))))
    order = np.argsort(-w, kind="stable")[:n]
    return float(np.sum(w[order] * v[order]) / np.sum(w[order]))


def edge_experiment(cfg: EdgeConfig = EdgeConfig()) -> EdgeReport:
    """NLM vs top-fraction pruned averaging at a pixel next to a step edge, over many seeds."""
    clean = edge_signal(cfg)
    h = cfg.smoothing
    idx, wc, vc = patch_weights_1d(clean, cfg.poi, cfg.S, cfg.K, h)
    src = np.pad(np.arange(cfg.length), cfg.S + cfg.K, mode="symmetric")[idx + cfg.S + cfg.K]
    same = (src < cfg.edge) == (cfg.poi < cfg.edge)
    report = EdgeReport(cfg, idx, same, wc, wc.copy(), float(clean[cfg.poi]),
                        float(np.sum(wc * vc) / np.sum(wc)))
    nlm_out, pruned_out = [], []
    for k in range(cfg.seeds):
        rng = np.random.Generator(np.random.PCG64(derive_seed(cfg.seed, "edge", k)))
        noisy = clean + cfg.sigma * rng.standard_normal(cfg.length)
        _, w, v = patch_weights_1d(noisy, cfg.poi, cfg.S, cfg.K, h)
        if k == 0:
            report.noisy_weights = w
        nlm_out.append(float(np.sum(w * v) / np.sum(w)))
        pruned_out.append(_top_fraction_average(w, v, cfg.keep))
    report.nlm = np.array(nlm_out)
    report.pruned = np.array(pruned_out)
    return report


# -- sigma -> lambda* sweep -----------------------------------------------------

def sigma_lambda_sweep(corpus: Iterable[tuple[str, np.ndarray]], sigmas: Sequence[float],
                       grid: Sequence[float], S: int = 10, K: int = 3, alpha: float = 100.0,
                       seed: int = 0, cache_mb: float = DEFAULT_CACHE_MB):
    """MSE-optimal threshold per (image, sigma), then a cubic fit over all pairs.

    Returns ``(rows, coeffs)`` with rows ``(image, sigma, lambda_star, mse)``.
    """
    rows = []
    for name, clean in corpus:
        clean = as_image(clean)
        for s in sigmas:
            noisy = add_gaussian(clean, NoiseSpec(s, derive_seed(seed, name, s)))
            params = NlmParams(S, K, sigma=s)
            lam, m = mse_argmin(noisy, clean, params, grid, alpha, cache_mb=cache_mb)
            rows.append((name, float(s), lam, m))
    if not rows:
        raise ValueError("empty corpus")
    coeffs = fit_lambda_rule([(r[1], r[2]) for r in rows])
    return rows, coeffs


# -- benchmark ------------------------------------------------------------------

BENCH_COLUMNS = ["image", "sigma", "seed", "method", "lambda", "psnr_db", "ssim_x100",
                 "runtime_ms", "winner"]


def benchmark(corpus: Iterable[tuple[str, np.ndarray]], sigmas: Sequence[float],
              S: int = 10, K: int = 3, alpha: float = 100.0, seed: int = 0,
              cache_mb: float = DEFAULT_CACHE_MB, h_factor: float = 10.0) -> list[list]:
    """NLM vs SURE-tuned PNLM per (image, sigma); one distance field serves both."""
    rows = []
    for name, clean in corpus:
        clean = as_image(clean)
        for s in sigmas:
            pair_seed = derive_seed(seed, name, s)
            noisy = add_gaussian(clean, NoiseSpec(s, pair_seed))
            params = NlmParams(S, K, sigma=s, h=h_factor * s if s > 0 else None)
            t0 = time.perf_counter()
            fld = compute_distance_field(noisy, params, cache_mb=cache_mb)
            t_field = time.perf_counter() - t0

            t0 = time.perf_counter()
            nlm = denoise(noisy, params, PruneConfig(), field=fld).denoised
            t_nlm = time.perf_counter() - t0

            t0 = time.perf_counter()
            tuned, final = tune_and_denoise(noisy, params, fld, alpha=alpha, cache_mb=cache_mb)
            t_pnlm = time.perf_counter() - t0

            res = [("NLM", math.nan, nlm, t_field + t_nlm),
                   ("PNLM", tuned.lambda_star, final.denoised, t_field + t_pnlm)]
            scored = [(m, lam, psnr(mse(x, clean)), 100.0 * ssim(x, clean), 1000.0 * t)
                      for m, lam, x, t in res]
            best_p = max(r[2] for r in scored)
            best_s = max(r[3] for r in scored)
            for m, lam, p, q, ms in scored:
                win = ("psnr" if p == best_p else "") + ("+ssim" if q == best_s else "")
                rows.append([name, float(s), pair_seed, m, lam, p, q, ms, win.lstrip("+")])
    return rows


def format_table(rows: list[list]) -> str:
    """Plain-text PSNR/SSIMx100 table, one line per (image, sigma); best marked ``*``."""
    by_key: dict[tuple, dict] = {}
    for r in rows:
        by_key.setdefault((r[0], r[1]), {})[r[3]] = r
    methods = sorted({r[3] for r in rows}, key=lambda m: (m != "NLM", m))
    lines = [f"{'image':<12}{'sigma':>6}  " + "".join(f"{m:>18}" for m in methods)]
    for (name, s), cells in by_key.items():
        txt = []
        for m in methods:
            r = cells.get(m)
            if r is None:
                txt.append(f"{'-':>18}")
                continue
            mark = "*" if "psnr" in r[8] else " "
            txt.append(f"{r[5]:>9.2f}/{r[6]:5.2f}{mark:>2}")
        lines.append(f"{name:<12}{s:>6g}  " + "".join(txt))
    return "\n".join(lines)
