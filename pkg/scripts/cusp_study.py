"""Std envelope slopes of the cusp solid for several exponents, next to the unit square.

For exponent k the std should decay like t^(1/k); a flat edge gives t^1.
"""
from __future__ import annotations

import argparse
import time

from pixelsurf.estimator import default_weights
from pixelsurf.experiments import (
    DEFAULT_RUNS,
    DEFAULT_SEED,
    ShiftSampler,
    cusp_experiment,
    fit_envelope_slope,
    save_curve,
    t_schedule,
    variance_curve,
)
from pixelsurf.geometry import AxisBox


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=int, nargs="+", default=[2, 3, 4])
    ap.add_argument("--t-max", type=float, default=0.02)
    ap.add_argument("--t-min", type=float, default=0.001)
    ap.add_argument("--ratio", type=float, default=0.999)
    ap.add_argument("--runs", type=int, default=DEFAULT_RUNS)
    ap.add_argument("--seed", type=int, default=DEFAULT_SEED)
    ap.add_argument("--prefix", default="cusp")
    args = ap.parse_args()

    sched = t_schedule(args.t_max, args.ratio, args.t_min)
    start = time.perf_counter()
    square = variance_curve(AxisBox.from_sides((1, 1)), default_weights(2), sched,
                            ShiftSampler.montecarlo(2, args.runs, args.seed))
    save_curve(square, f"{args.prefix}_square.csv")
    print(f"square   slope={fit_envelope_slope(square).slope:.4f}  ({time.perf_counter() - start:.0f}s)")
    for k in args.k:
        start = time.perf_counter()
        res = cusp_experiment(k, sched, args.runs, args.seed)
        save_curve(res.curve, f"{args.prefix}_k{k}.csv")
        slope = f"{res.fit.slope:.4f}" if res.fit else "n/a"
        print(f"cusp k={k} slope={slope}  expected {1 / k:.4f}  ({time.perf_counter() - start:.0f}s)"
              + (f"  warning: {res.warning}" if res.warning else ""))


if __name__ == "__main__":
    main()
