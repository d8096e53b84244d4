"""Regenerate the shipped calibrated weight tables in src/pixelsurf/data/."""
from __future__ import annotations

import argparse
import logging
from pathlib import Path

import numpy as np

from pixelsurf.estimator import (
    DEFAULT_CALIBRATION_SAMPLES,
    DEFAULT_CALIBRATION_SEED,
    calibrate_halfspace_weights,
    halfspace_response,
    random_directions,
    save_weights,
)

DATA = Path(__file__).resolve().parents[1] / "src" / "pixelsurf" / "data"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=DEFAULT_CALIBRATION_SEED)
    ap.add_argument("--samples", type=int, default=DEFAULT_CALIBRATION_SAMPLES)
    ap.add_argument("--out-dir", type=Path, default=DATA)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    for d in (2, 3):
        w = calibrate_halfspace_weights(2, d, args.samples, args.seed)
        held = random_directions(20000, d, np.random.default_rng(args.seed + 1))
        res = halfspace_response(w, held) - 1.0
        out = args.out_dir / f"weights_d{d}_n2.csv"
        save_weights(w, out)
        print(f"d={d}: {np.count_nonzero(w.weights)} nonzero weights, "
              f"held-out rms {np.sqrt(np.mean(res**2)):.4f}, max |err| {np.abs(res).max():.4f} -> {out}")


if __name__ == "__main__":
    main()
