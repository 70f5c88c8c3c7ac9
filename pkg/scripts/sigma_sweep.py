"""MSE-optimal threshold against noise level, with a least-squares cubic refit."""
import json

import numpy as np
from _common import images, out_dir, parser

from pnlm.experiments import frange, sigma_lambda_sweep
from pnlm.grid import write_csv
from pnlm.tuning import CUBIC_COEFFS, eval_cubic

if __name__ == "__main__":
    ap = parser(__doc__)
    ap.add_argument("--sigmas", default="10:100:10")
    ap.add_argument("--grid", default="0.01:0.6:0.01")
    ap.add_argument("--images", default="camera,astronaut,coins,coffee,chelsea")
    ap.add_argument("--size", type=int, default=128, help="crop side (smaller is faster)")
    args = ap.parse_args()
    corpus = [(n, img[:args.size, :args.size])
              for n, img in images(args.corpus, args.images.split(","))]
    rows, coeffs = sigma_lambda_sweep(corpus, frange(args.sigmas), frange(args.grid),
                                      seed=args.seed)
    d = out_dir(args.out_dir)
    write_csv(d / "sigma_lambda.csv", ["image", "sigma", "lambda_star", "mse"], rows)
    (d / "cubic_refit.json").write_text(json.dumps(dict(zip(("c3", "c2", "c1", "c0"), coeffs)),
                                                   indent=2))
    s = np.arange(10, 101, 10)
    print("sigma  refit  default")
    for v, a, b in zip(s, eval_cubic(coeffs, s), eval_cubic(CUBIC_COEFFS, s)):
        print(f"{v:5d}  {a:.3f}  {b:.3f}")
