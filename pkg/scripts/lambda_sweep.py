"""MSE and SURE as functions of the threshold on one noisy image."""
from _common import images, out_dir, parser

from pnlm.experiments import derive_seed, frange, sweep_lambda
from pnlm.grid import write_csv
from pnlm.metrics import NoiseSpec, add_gaussian
from pnlm.patch import NlmParams

if __name__ == "__main__":
    ap = parser(__doc__)
    ap.add_argument("--image", default="camera")
    ap.add_argument("--sigma", type=float, default=20.0)
    ap.add_argument("--grid", default="0.01:0.6:0.01")
    args = ap.parse_args()
    (name, clean), = images(args.corpus, [args.image])
    noisy = add_gaussian(clean, NoiseSpec(args.sigma, derive_seed(args.seed, name, args.sigma)))
    rows = sweep_lambda(noisy, clean, NlmParams(10, 3, sigma=args.sigma), frange(args.grid))
    write_csv(out_dir(args.out_dir) / f"lambda_sweep_{name}_{args.sigma:g}.csv",
              ["lambda", "mse", "sure"], rows)
    lm = min(rows, key=lambda r: r[1])
    ls = min(rows, key=lambda r: r[2])
    print(f"argmin MSE  lambda={lm[0]:.3f}  mse={lm[1]:.3f}")
    print(f"argmin SURE lambda={ls[0]:.3f}  sure={ls[2]:.3f}")
