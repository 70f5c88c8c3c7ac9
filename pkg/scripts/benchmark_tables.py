"""PSNR / SSIMx100 / runtime of NLM and SURE-tuned PNLM over the corpus."""
from _common import images, out_dir, parser

from pnlm.experiments import BENCH_COLUMNS, benchmark, format_table, frange
from pnlm.grid import write_csv

if __name__ == "__main__":
    ap = parser(__doc__)
    ap.add_argument("--sigmas", default="20,30,50")
    ap.add_argument("--images", default="camera,astronaut,moon,coins,coffee")
    args = ap.parse_args()
    rows = benchmark(images(args.corpus, args.images.split(",")), frange(args.sigmas),
                     seed=args.seed)
    d = out_dir(args.out_dir)
    write_csv(d / "benchmark.csv", BENCH_COLUMNS, rows)
    table = format_table(rows)
    (d / "benchmark.txt").write_text(table + "\n")
    print(table)
