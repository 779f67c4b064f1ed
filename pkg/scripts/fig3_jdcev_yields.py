"""JDCEV defaultable bond yields of orders 0-4 for several default intensities, with Monte Carlo checks.

Writes ``jdcev_yields.csv`` (expansion) and ``jdcev_yields_mc.csv`` (Monte Carlo at a few
maturities) to ``--outdir``.
"""

import argparse
import csv
import math
from pathlib import Path

import numpy as np

from lsvtaylor.expansion import bond_yield, price_expansion, price_with_default_floor
from lsvtaylor.model import PayoffSpec, load_model
from lsvtaylor.validate import MCConfig, mc_price

ROOT = Path(__file__).resolve().parents[1]
MODELS = ["fig3_jdcev_c10.txt", "fig3_jdcev_c15.txt", "fig3_jdcev_c20.txt"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--mc-maturities", type=float, nargs="*", default=[0.5, 1.0, 2.0, 5.0])
    ap.add_argument("--paths", type=int, default=100_000)
    ap.add_argument("--steps-per-year", type=int, default=1000)
    ap.add_argument("--outdir", type=Path, default=Path("results"))
    ap.add_argument("--plot", action="store_true")
    args = ap.parse_args()

    curve, checks = [], []
    taus = np.round(np.arange(0.25, 10.001, 0.25), 10)
    for fname in MODELS:
        model = load_model(ROOT / "models" / fname)
        c, N = model.params["c"], model.order
        for T in taus:
            exp = price_expansion(model, PayoffSpec.bond(), 0.0, T)
            curve.append([c, T, *(bond_yield(exp, n) for n in range(N + 1))])
        for T in args.mc_maturities:
            cfg = MCConfig(paths=args.paths, steps_per_year=args.steps_per_year)
            r = mc_price(model, PayoffSpec.bond(), 0.0, T, model.xbar, model.ybar, cfg)
            approx = price_with_default_floor(price_expansion(model, PayoffSpec.bond(), 0.0, T))
            checks.append([c, T, r.price_mean, r.std_error, approx, -math.log(r.price_mean) / T,
                           -math.log(approx) / T])
            print(f"c={c} T={T}: mc={r.price_mean:.6f} +/- {r.std_error:.1e}  order {N}={approx:.6f} "
                  f"({(approx - r.price_mean) / r.std_error:+.1f} se)")

    args.outdir.mkdir(parents=True, exist_ok=True)
    with open(args.outdir / "jdcev_yields.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["c", "T", *[f"yield_order_{n}" for n in range(len(curve[0]) - 2)]])
        w.writerows(curve)
    with open(args.outdir / "jdcev_yields_mc.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["c", "T", "mc_price", "mc_stderr", "approx_price", "mc_yield", "approx_yield"])
        w.writerows(checks)
    if args.plot:
        import matplotlib.pyplot as plt

        fig, axes = plt.subplots(1, len(MODELS), figsize=(5 * len(MODELS), 4))
        for ax, fname in zip(axes, MODELS):
            c = load_model(ROOT / "models" / fname).params["c"]
            r = np.array([row for row in curve if row[0] == c])
            for n in range(2, r.shape[1]):
                ax.plot(r[:, 1], r[:, n], label=f"order {n - 2}")
            m = np.array([row for row in checks if row[0] == c])
            if len(m):
                ax.plot(m[:, 1], m[:, 5], "ko", label="Monte Carlo")
            ax.set_title(f"c = {c}")
            ax.set_xlabel("T")
            ax.legend()
        fig.savefig(args.outdir / "jdcev_yields.png", dpi=120, bbox_inches="tight")


if __name__ == "__main__":
    main()
