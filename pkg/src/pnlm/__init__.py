"""Pruned non-local means with SURE-based threshold selection."""
import os as _os

# numba's TBB layer warns about version mismatches on some installs; prefer OpenMP
_os.environ.setdefault("NUMBA_THREADING_LAYER_PRIORITY", "omp workqueue tbb")

from .denoise import (DenoiseResult, PnlmEvaluator, PruneConfig, denoise, naive_nlm,  # noqa: E402
                      psi, psi_prime, sigmoid_threshold, step_threshold)
from .grid import ImageError, PaddedImage, extend, load_image, save_image  # noqa: E402
from .metrics import NoiseSpec, QualityReport, add_gaussian, mse, psnr, quality, ssim  # noqa: E402
from .patch import (DistanceField, MemoryBudgetError, NlmParams,  # noqa: E402
                    compute_distance_field, naive_distance, weight)
from .tuning import (CUBIC_COEFFS, NumericalFault, TuneResult, fit_lambda_rule,  # noqa: E402
                     golden_section_search, golden_section_tune, lambda_init, sure,
                     tune_and_denoise)

__version__ = "0.1.0"

__all__ = [
    "CUBIC_COEFFS", "DenoiseResult", "DistanceField", "ImageError", "MemoryBudgetError",
    "NlmParams", "NoiseSpec", "NumericalFault", "PaddedImage", "PnlmEvaluator", "PruneConfig",
    "QualityReport", "TuneResult", "add_gaussian", "compute_distance_field", "denoise",
    "extend", "fit_lambda_rule", "golden_section_search", "golden_section_tune",
    "lambda_init", "load_image", "mse", "naive_distance", "naive_nlm", "psi", "psi_prime",
    "psnr", "quality", "save_image", "sigmoid_threshold", "ssim", "step_threshold", "sure",
    "tune_and_denoise", "weight",
]
