"""Variance curve of a ball and the slope of its std upper envelope.

Defaults reproduce the desk-scale 3D setting: unit ball, t in [0.02, 0.1],
ratio 0.999, 400 Monte-Carlo shifts per t.
"""
from __future__ import annotations

import argparse
import logging
import time

from pixelsurf.estimator import default_weights
from pixelsurf.experiments import (
    DEFAULT_RUNS,
    DEFAULT_SEED,
    ShiftSampler,
    fit_envelope_slope,
    save_curve,
    t_schedule,
    variance_curve,
)
from pixelsurf.geometry import Ball


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d", type=int, default=3)
    ap.add_argument("--radius", type=float, default=1.0)
    ap.add_argument("--t-max", type=float, default=0.1)
    ap.add_argument("--t-min", type=float, default=0.02)
    ap.add_argument("--ratio", type=float, default=0.999)
    ap.add_argument("--runs", type=int, default=DEFAULT_RUNS)
    ap.add_argument("--seed", type=int, default=DEFAULT_SEED)
    ap.add_argument("--out", default="ball_curve.csv")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    sched = t_schedule(args.t_max, args.ratio, args.t_min)
    sampler = ShiftSampler.montecarlo(args.d, args.runs, args.seed)

    def progress(i, pt):
        if i % 100 == 0:
            logging.info("%5d/%d  t=%.5f  std=%.3e", i, len(sched), pt.t, pt.std)

    start = time.perf_counter()
    curve = variance_curve(Ball((0.0,) * args.d, args.radius), default_weights(args.d), sched, sampler,
                           progress=progress)
    save_curve(curve, args.out)
    for stat in ("std", "range"):
        for env in ("upper", "all"):
            fit = fit_envelope_slope(curve, stat, env)
            print(f"{stat:5s} {env:5s} slope={fit.slope:.4f} stderr={fit.stderr:.4f} points={fit.npoints}")
    print(f"{len(curve)} points in {time.perf_counter() - start:.0f}s -> {args.out}")


if __name__ == "__main__":
    main()
