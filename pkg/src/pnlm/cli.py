"""Command-line front end: ``pnlm <command> [options]``.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 numerical fault.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import corpus as corpus_mod
from .denoise import PruneConfig, denoise
from .experiments import (BENCH_COLUMNS, EdgeConfig, benchmark, edge_experiment, format_table,
                          frange, sigma_lambda_sweep, sweep_lambda)
from .grid import ImageError, load_image, save_image, write_csv
from .metrics import NoiseSpec, add_gaussian, quality
from .patch import DEFAULT_CACHE_MB, MemoryBudgetError, NlmParams, compute_distance_field
from .tuning import NumericalFault, lambda_init, tune_and_denoise

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3
QUALITY_COLUMNS = ["image", "sigma", "seed", "method", "lambda", "psnr_db", "ssim_x100",
                   "runtime_ms"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, sigma_default=None):
    p.add_argument("--sigma", type=float, default=sigma_default, required=sigma_default is None,
                   help="noise standard deviation (intensity units)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--S", type=int, default=10, help="search radius")
    p.add_argument("--K", type=int, default=3, help="patch radius")
    p.add_argument("--h", type=float, default=None, help="smoothing (default 10*sigma)")
    p.add_argument("--alpha", type=float, default=100.0, help="sigmoid slope")
    p.add_argument("--cache-mb", type=float, default=DEFAULT_CACHE_MB)
    p.add_argument("--threads", type=int, default=None)


def _image_args(p: argparse.ArgumentParser):
    p.add_argument("input", help="noisy image (or clean image with --add-noise)")
    p.add_argument("--add-noise", action="store_true",
                   help="treat INPUT as clean: add N(0, sigma^2) noise with --seed")
    p.add_argument("--clean", default=None, help="clean reference for quality metrics")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pnlm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("denoise", help="denoise one image")
    _image_args(p)
    _common(p)
    p.add_argument("--mode", choices=["nlm", "hard", "soft"], default="soft")
    p.add_argument("--lambda", dest="lam", default="auto", help="auto | cubic | <value>")
    p.add_argument("--out", default=None, help="denoised image (.pgm/.png)")
    p.add_argument("--csv", default=None, help="append a quality row (needs a clean reference)")

    p = sub.add_parser("tune", help="select the PNLM threshold by SURE")
    _image_args(p)
    _common(p)
    p.add_argument("--out", default=None, help="denoised image at the selected threshold")
    p.add_argument("--csv", default=None, help="probe trace (iter, lambda, sure)")

    p = sub.add_parser("sweep-lambda", help="MSE and SURE over a threshold grid")
    _image_args(p)
    _common(p)
    p.add_argument("--grid", default="0.05:0.6:0.05")
    p.add_argument("--csv", default=None)

    p = sub.add_parser("edge-exp", help="pruning near a 1-D step edge")
    p.add_argument("--sigma", type=float, default=80.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seeds", type=int, default=200)
    p.add_argument("--S", type=int, default=10)
    p.add_argument("--K", type=int, default=3)
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--length", type=int, default=36)
    p.add_argument("--edge", type=int, default=21)
    p.add_argument("--poi", type=int, default=18)
    p.add_argument("--low", type=float, default=0.0)
    p.add_argument("--high", type=float, default=100.0)
    p.add_argument("--keep", type=float, default=0.5, help="fraction of top weights kept")
    p.add_argument("--csv", default=None, help="per-seed outputs")
    p.add_argument("--weights-csv", default=None, help="per-neighbour clean/noisy weights")

    for name, helptext in (("sigma-sweep", "MSE-optimal threshold vs noise level, cubic refit"),
                           ("bench", "NLM vs PNLM PSNR/SSIM/runtime table")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("images", nargs="*", help="image files (default: corpus manifest)")
        p.add_argument("--corpus", default=None, help="corpus directory (env PNLM_CORPUS_DIR)")
        p.add_argument("--sigmas", default="10:100:10" if name == "sigma-sweep" else "20,50")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--S", type=int, default=10)
        p.add_argument("--K", type=int, default=3)
        p.add_argument("--alpha", type=float, default=100.0)
        p.add_argument("--cache-mb", type=float, default=DEFAULT_CACHE_MB)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--csv", default=None)
        if name == "sigma-sweep":
            p.add_argument("--grid", default="0.01:0.8:0.01")
            p.add_argument("--coeffs-out", default=None, help="JSON file for the fitted cubic")

    p = sub.add_parser("fetch-corpus", help="populate the test-image corpus")
    p.add_argument("--dest", default=None, help="corpus directory (env PNLM_CORPUS_DIR)")
    p.add_argument("--source", choices=["skimage", "urls"], default="skimage")
    p.add_argument("--urls", default=None, help="CSV with name,url[,sha256] (for --source urls)")
    p.add_argument("--size", type=int, default=256)
    return parser


# -- helpers ---------------------------------------------------------------------

def _set_threads(n):
    if n:
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def _params(args) -> NlmParams:
    try:
        return NlmParams(args.S, args.K, sigma=args.sigma, h=args.h)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _inputs(args):
    """Return (name, noisy, clean-or-None)."""
    img = load_image(args.input)
    name = os.path.splitext(os.path.basename(args.input))[0]
    if args.add_noise:
        clean = img if args.clean is None else load_image(args.clean)
        noisy = add_gaussian(img, NoiseSpec(args.sigma, args.seed))
    else:
        clean = load_image(args.clean) if args.clean else None
        noisy = img
    if clean is not None and clean.shape != noisy.shape:
        raise UsageError("clean reference shape differs from input")
    return name, noisy, clean


def _append_rows(path, header, rows):
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    text = write_csv(None, header, rows)
    if not new:
        text = text.split("\r\n", 1)[1]
    with open(path, "a", newline="") as fh:
        fh.write(text)


def _corpus(args):
    if args.images:
        return [(os.path.splitext(os.path.basename(p))[0], load_image(p)) for p in args.images]
    root = corpus_mod.corpus_dir(args.corpus)
    if not (root / corpus_mod.MANIFEST).exists():
        raise UsageError(f"no images given and no manifest in {root} (run fetch-corpus)")
    return corpus_mod.load_corpus(root)


# -- commands --------------------------------------------------------------------

def cmd_denoise(args) -> int:
    name, noisy, clean = _inputs(args)
    lam_spec = str(args.lam).lower()
    if args.mode == "hard" and lam_spec == "auto":
        raise UsageError("--lambda auto needs --mode soft (hard pruning has no divergence)")
    t0 = time.perf_counter()
    lam = math.nan
    if args.sigma == 0 and args.h is None:
        # no noise to remove
        out = noisy.copy()
        method = "identity"
    else:
        params = _params(args)
        if args.mode != "nlm" and lam_spec not in ("auto", "cubic"):
            try:
                lam = float(lam_spec)
            except ValueError as exc:
                raise UsageError(f"bad --lambda {args.lam!r}") from exc
            if not 0.0 <= lam <= 1.0:
                raise UsageError("--lambda must lie in [0, 1]")
        elif args.mode != "nlm" and lam_spec == "cubic":
            lam = lambda_init(params.sigma)
        field = compute_distance_field(noisy, params, cache_mb=args.cache_mb)
        if args.mode == "soft" and lam_spec == "auto":
            tuned, res = tune_and_denoise(noisy, params, field, alpha=args.alpha,
                                          cache_mb=args.cache_mb)
            lam = tuned.lambda_star
            out = res.denoised
        else:
            mode = {"nlm": "none"}.get(args.mode, args.mode)
            cfg = PruneConfig(mode, 0.0 if mode == "none" else lam, args.alpha)
            out = denoise(noisy, params, cfg, field).denoised
        method = {"nlm": "NLM", "hard": "NLM-hard", "soft": "PNLM"}[args.mode]
    if not np.all(np.isfinite(out)):
        raise NumericalFault("denoised image has non-finite values")
    runtime_ms = 1000.0 * (time.perf_counter() - t0)
    if args.out:
        save_image(out, args.out)
    msg = f"{name}: method={method} lambda={lam:.6g} runtime_ms={runtime_ms:.1f}"
    if clean is not None:
        q = quality(out, clean)
        msg += f" psnr_db={q.psnr:.4g} ssim_x100={q.ssim_x100:.4g}"
        if args.csv:
            _append_rows(args.csv, QUALITY_COLUMNS,
                         [[name, args.sigma, args.seed, method, lam, q.psnr, q.ssim_x100,
                           runtime_ms]])
    elif args.csv:
        raise UsageError("--csv needs a clean reference (--clean or --add-noise)")
    print(msg)
    return EXIT_OK


def cmd_tune(args) -> int:
    name, noisy, clean = _inputs(args)
    params = _params(args)
    field = compute_distance_field(noisy, params, cache_mb=args.cache_mb)
    tuned, res = tune_and_denoise(noisy, params, field, alpha=args.alpha, cache_mb=args.cache_mb)
    if args.csv:
        tuned.to_csv(args.csv)
    if args.out:
        save_image(res.denoised, args.out)
    msg = (f"{name}: lambda_star={tuned.lambda_star:.6g} sure={tuned.sure_at_star:.6g} "
           f"iterations={tuned.iterations} evaluations={tuned.n_evals + 1}")
    if clean is not None:
        q = quality(res.denoised, clean)
        msg += f" psnr_db={q.psnr:.4g} ssim_x100={q.ssim_x100:.4g}"
    print(msg)
    return EXIT_OK


def cmd_sweep_lambda(args) -> int:
    _, noisy, clean = _inputs(args)
    if clean is None:
        raise UsageError("sweep-lambda needs a clean reference (--clean or --add-noise)")
    rows = sweep_lambda(noisy, clean, _params(args), frange(args.grid), args.alpha,
                        cache_mb=args.cache_mb)
    text = write_csv(args.csv, ["lambda", "mse", "sure"], rows)
    if not args.csv:
        sys.stdout.write(text)
    lm = min(rows, key=lambda r: r[1])[0]
    ls = min(rows, key=lambda r: r[2])[0]
    print(f"argmin_mse={lm:.6g} argmin_sure={ls:.6g}", file=sys.stderr)
    return EXIT_OK


def cmd_edge(args) -> int:
    cfg = EdgeConfig(args.length, args.edge, args.poi, args.low, args.high, args.S, args.K,
                     args.sigma, args.h, args.keep, args.seeds, args.seed)
    if not (0 <= cfg.poi < cfg.length and 0 < cfg.keep <= 1 and cfg.seeds > 0):
        raise UsageError("inconsistent edge geometry")
    rep = edge_experiment(cfg)
    if args.csv:
        write_csv(args.csv, ["seed", "nlm", "pruned", "nlm_abs_err", "pruned_abs_err"],
                  rep.seed_rows())
    if args.weights_csv:
        write_csv(args.weights_csv, ["index", "same_side", "clean_weight", "noisy_weight"],
                  rep.weight_rows())
    print(f"clean_value={rep.clean_value:g} clean_weight_nlm={rep.clean_nlm:.6g}")
    print(f"median_abs_err nlm={np.median(rep.nlm_error):.6g} "
          f"pruned={np.median(rep.pruned_error):.6g}")
    print(f"pruned_closer_fraction={rep.win_fraction:.4f} over {cfg.seeds} seeds")
    return EXIT_OK


def cmd_sigma_sweep(args) -> int:
    rows, coeffs = sigma_lambda_sweep(_corpus(args), frange(args.sigmas), frange(args.grid),
                                      args.S, args.K, args.alpha, args.seed, args.cache_mb)
    text = write_csv(args.csv, ["image", "sigma", "lambda_star", "mse"], rows)
    if not args.csv:
        sys.stdout.write(text)
    names = ("c3", "c2", "c1", "c0")
    if args.coeffs_out:
        with open(args.coeffs_out, "w") as fh:
            json.dump(dict(zip(names, coeffs)), fh, indent=2)
    print("lambda* = " + " + ".join(f"{c:.4g}*s^{3 - k}" for k, c in enumerate(coeffs)),
          file=sys.stderr)
    return EXIT_OK


def cmd_bench(args) -> int:
    rows = benchmark(_corpus(args), frange(args.sigmas), args.S, args.K, args.alpha,
                     args.seed, args.cache_mb)
    if args.csv:
        write_csv(args.csv, BENCH_COLUMNS, rows)
    print(format_table(rows))
    return EXIT_OK


def cmd_fetch(args) -> int:
    if args.source == "skimage":
        entries = corpus_mod.fetch_skimage(args.dest, args.size)
    else:
        if not args.urls:
            raise UsageError("--source urls needs --urls FILE")
        entries = corpus_mod.fetch_urls(args.urls, args.dest)
    print(f"wrote {len(entries)} images to {corpus_mod.corpus_dir(args.dest)}")
    return EXIT_OK


COMMANDS = {
    "denoise": cmd_denoise,
    "tune": cmd_tune,
    "sweep-lambda": cmd_sweep_lambda,
    "edge-exp": cmd_edge,
    "sigma-sweep": cmd_sigma_sweep,
    "bench": cmd_bench,
    "fetch-corpus": cmd_fetch,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _set_threads(getattr(args, "threads", None))
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"pnlm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ImageError, OSError, MemoryBudgetError) as exc:
        print(f"pnlm: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericalFault, FloatingPointError, ZeroDivisionError) as exc:
        print(f"pnlm: numerical fault: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"pnlm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
