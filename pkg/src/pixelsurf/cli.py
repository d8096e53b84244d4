"""Command-line entry point: ``pixelsurf <command> [flags]``.

Exit codes: 0 success, 1 invalid input, 2 failed internal check.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import configcount, decomposition, estimator, experiments, geometry, lattice

log = logging.getLogger("pixelsurf")


class UsageError(Exception):
    """Invalid command-line input; the message names the offending flag."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _flag(name: str, fn, *args):
    try:
        return fn(*args)
    except (ValueError, OSError, KeyError) as exc:
        raise UsageError(f"{name}: {exc}") from exc


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


def _shape(args) -> geometry.Solid:
    if not args.shape:
        raise UsageError("--shape is required")
    return _flag("--shape", geometry.parse_shape, args.shape)


def _shift(args, d: int) -> tuple[float, ...]:
    if args.shift is None:
        return (0.0,) * d
    shift = _flag("--shift", _floats, args.shift)
    if len(shift) != d:
        raise UsageError(f"--shift: expected {d} components, got {len(shift)}")
    return shift


def _weights(args, d: int) -> estimator.WeightTable:
    source = args.weights
    if source in (None, "default"):
        return _flag("--weights", estimator.default_weights, d, args.n)
    return _flag("--weights", estimator.load_weights, source, args.n, d, args.allow_nonzero_endpoints)


def _t(args) -> float:
    if args.t is None:
        raise UsageError("--t is required")
    if not (args.t > 0 and math.isfinite(args.t)):
        raise UsageError(f"--t: lattice distance must be positive, got {args.t}")
    return args.t


def _digitize(args, solid) -> lattice.LatticeImage:
    shift = _shift(args, solid.dim)
    margin = max(args.n - 1, getattr(args, "margin", None) or 0)
    try:
        return lattice.digitize(solid, _t(args), shift, margin, memory_cap_bits=args.memory_cap)
    except lattice.LatticeError as exc:
        flag = "--memory-cap" if "memory cap" in str(exc) else "--shift" if "shift" in str(exc) else "--t"
        raise UsageError(f"{flag}: {exc}") from exc


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Commands


def cmd_digitize(args) -> int:
    img = _digitize(args, _shape(args))
    if not args.out:
        raise UsageError("--out is required")
    lattice.save_image(img, args.out)
    print(f"dims={img.dims} origin={img.origin} black={int(img.bits.sum())} -> {args.out}")
    return 0


def _histogram(args) -> configcount.ConfigHistogram:
    if args.image:
        img = _flag("--image", lattice.load_image, args.image)
    else:
        img = _digitize(args, _shape(args))
    return _flag("--n", configcount.count_configurations, img, args.n)


def _histogram_csv(hist: configcount.ConfigHistogram) -> str:
    lines = [f"# n={hist.n} d={hist.d}", "index,count"] + [f"{c},{v}" for c, v in hist.items()]
    return "\n".join(lines) + "\n"


def cmd_count(args) -> int:
    _write(_histogram_csv(_histogram(args)), args.out)
    return 0


def cmd_estimate(args) -> int:
    if args.hist:
        hist = _flag("--hist", configcount.load_histogram, args.hist, args.n)
        t = _t(args)
    else:
        hist = _histogram(args)
        if args.image:
            t = lattice.load_image(args.image).t if args.t is None else _t(args)
        else:
            t = _t(args)
    w = _weights(args, hist.d)
    res = _flag("--weights", estimator.estimate, hist, w, t)
    print(res.line())
    return 0


def _sampler(args, d: int) -> experiments.ShiftSampler:
    if args.shifts:
        return _flag("--shifts", experiments.ShiftSampler.parse, args.shifts, d, args.seed)
    return experiments.ShiftSampler.montecarlo(d, args.runs, args.seed)


def cmd_sweep(args) -> int:
    solid = _shape(args)
    w = _weights(args, solid.dim)
    pt = _flag("--t", experiments.sweep_shifts, solid, _t(args), w, _sampler(args, solid.dim))
    _write(experiments.curve_csv([pt]), args.out)
    return 0


def _schedule(args) -> list[float]:
    return _flag("--t-min/--t-max/--ratio", experiments.t_schedule, args.t_max, args.ratio, args.t_min)


def _report_fit(curve, window: float) -> None:
    try:
        fit = experiments.fit_envelope_slope(curve, "std", "upper", window)
        log.info("std upper-envelope slope %.4f (stderr %.4f, %d points)", fit.slope, fit.stderr, fit.npoints)
    except experiments.ExperimentError as exc:
        log.info("no slope fit: %s", exc)


def cmd_curve(args) -> int:
    solid = _shape(args)
    w = _weights(args, solid.dim)
    sched = _schedule(args)
    sampler = _sampler(args, solid.dim)
    log.info("%d lattice distances, %d shifts each", len(sched), sampler.size)
    curve = experiments.variance_curve(solid, w, sched, sampler)
    _write(experiments.curve_csv(curve), args.out)
    _report_fit(curve, args.window)
    return 0


def cmd_cusp(args) -> int:
    w = _weights(args, 2)
    sched = _schedule(args)
    res = _flag("--k", experiments.cusp_experiment, args.k, sched, args.runs, args.seed, w, args.window)
    _write(experiments.curve_csv(res.curve), args.out)
    if res.warning:
        log.warning("%s", res.warning)
    if res.fit is not None:
        print(f"k={res.k} slope={res.fit.slope!r} stderr={res.fit.stderr!r} points={res.fit.npoints}",
              file=sys.stderr if not args.out else sys.stdout)
    return 0


def cmd_nprime(args) -> int:
    solid = _shape(args)
    rs = _flag("--r", _floats, args.r)
    if args.v:
        vs = [_flag("--v", _floats, args.v)]
    else:
        rng = np.random.default_rng(args.seed)
        vs = [tuple(rng.random(solid.dim).tolist()) for _ in range(args.random_shifts)]
    lines = ["r,v,nprime"]
    for r in rs:
        for v in vs:
            if len(v) != solid.dim:
                raise UsageError(f"--v: expected {solid.dim} components")
            rep = _flag("--shape", decomposition.nprime_count, solid, r, v, args.n)
            lines.append(f"{r!r},{';'.join(repr(float(x)) for x in v)},{rep.nprime}")
    _write("\n".join(lines) + "\n", args.out)
    return 0


def cmd_verify_bounds(args) -> int:
    solid = _shape(args)
    v = _flag("--v", _floats, args.v) if args.v else (0.0, 0.0)
    rep = _flag("--shape", decomposition.verify_pixel_bounds_2d, solid, args.r, v)
    _write(rep.table(), args.out)
    for c in rep.canonical:
        print(f"# kappa={c.kappa} canonical N1={c.n1} N2={c.n2} N3={c.n3} I1={float(c.i1)!r} "
              f"I2={float(c.i2)!r} N'={c.nprime} {'pass' if all(c.checks) else 'FAIL'}", file=sys.stderr)
    for kappa, code, count in rep.degenerate:
        print(f"# kappa={kappa}: {count} vertex-contact cells with code {code}", file=sys.stderr)
    if not rep.ok:
        for msg in rep.violations():
            print(f"violation: {msg}", file=sys.stderr)
        return 2
    return 0


def cmd_calibrate(args) -> int:
    w = _flag("--samples", estimator.calibrate_halfspace_weights, args.n, args.d, args.samples, args.seed)
    if args.out:
        estimator.save_weights(w, args.out)
    else:
        sys.stdout.write("\n".join([f"# n={w.n} d={w.d}", "index,weight"] + [
            f"{j},{float(w.weights[j])!r}" for j in np.flatnonzero(w.weights).tolist()]) + "\n")
    return 0


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pixelsurf", description="Local surface-area estimators on digitised solids.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="file of key=value lines used as default flag values")
        sp.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
        sp.add_argument("--seed", type=int, default=experiments.DEFAULT_SEED,
                        help=f"random seed (default {experiments.DEFAULT_SEED})")
        sp.add_argument("--n", type=int, default=2, help="configuration window side (default 2)")
        sp.add_argument("--out", help="output file (default: stdout)")
        sp.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    def image_src(sp):
        sp.add_argument("--shape", help="ball:r=1[,d=3], box:a,b[,c], poly:FILE, cusp:k=2, preset:NAME")
        sp.add_argument("--t", type=float, help="lattice distance")
        sp.add_argument("--shift", help="shift vector in [0,1)^d, comma separated (default 0)")
        sp.add_argument("--memory-cap", type=int, default=lattice.DEFAULT_MEMORY_CAP_BITS,
                        help="maximum image size in bits")

    def weights(sp):
        sp.add_argument("--weights", default="default",
                        help="'default' (shipped calibrated table) or a CSV with header index,weight")
        sp.add_argument("--allow-nonzero-endpoints", action="store_true",
                        help="accept tables with nonzero all-white/all-black weights")

    def schedule(sp, t_max, t_min):
        sp.add_argument("--t-max", type=float, default=t_max)
        sp.add_argument("--t-min", type=float, default=t_min)
        sp.add_argument("--ratio", type=float, default=0.999)
        sp.add_argument("--runs", type=int, default=experiments.DEFAULT_RUNS,
                        help="Monte-Carlo shifts per lattice distance")
        sp.add_argument("--window", type=float, default=1.0, help="envelope window in octaves")

    sp = sub.add_parser("digitize", help="digitise a solid and dump the binary image")
    common(sp); image_src(sp)
    sp.add_argument("--margin", type=int, default=None, help="white layers around the window")
    sp.set_defaults(func=cmd_digitize)

    sp = sub.add_parser("count", help="configuration histogram (CSV index,count)")
    common(sp); image_src(sp)
    sp.add_argument("--image", help="binary image written by 'digitize'")
    sp.set_defaults(func=cmd_count)

    sp = sub.add_parser("estimate", help="weighted estimate of one image")
    common(sp); image_src(sp); weights(sp)
    sp.add_argument("--image", help="binary image written by 'digitize'")
    sp.add_argument("--hist", help="histogram CSV written by 'count'")
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("sweep", help="estimate statistics over shifts at one lattice distance")
    common(sp); image_src(sp); weights(sp)
    sp.add_argument("--shifts", help="grid:M or mc:RUNS (default mc:400)")
    sp.add_argument("--runs", type=int, default=experiments.DEFAULT_RUNS)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("curve", help="variance curve over the lattice-distance schedule")
    common(sp); image_src(sp); weights(sp); schedule(sp, 0.1, 0.02)
    sp.add_argument("--shifts", help="grid:M or mc:RUNS (overrides --runs)")
    sp.set_defaults(func=cmd_curve)

    sp = sub.add_parser("cusp", help="cusp counterexample curve and slope")
    common(sp); weights(sp); schedule(sp, 0.02, 0.001)
    sp.add_argument("--k", type=int, default=2, help="cusp exponent (>= 2)")
    sp.set_defaults(func=cmd_cusp)

    sp = sub.add_parser("nprime", help="multi-component cell counts (CSV r,v,nprime)")
    common(sp)
    sp.add_argument("--shape", help="2D polygon (box:, poly:, preset:square) or an axis box")
    sp.add_argument("--r", required=True, help="comma-separated scales")
    sp.add_argument("--v", help="shift vector (default: --random-shifts random shifts)")
    sp.add_argument("--random-shifts", type=int, default=16)
    sp.set_defaults(func=cmd_nprime)

    sp = sub.add_parser("verify-bounds", help="check the per-component pixel bounds of a polygon")
    common(sp)
    sp.add_argument("--shape", help="2D convex polygon")
    sp.add_argument("--r", type=float, required=True, help="scale")
    sp.add_argument("--v", help="shift vector (default 0,0)")
    sp.set_defaults(func=cmd_verify_bounds)

    sp = sub.add_parser("calibrate", help="least-squares half-space weight table")
    common(sp)
    sp.add_argument("--d", type=int, default=2)
    sp.add_argument("--samples", type=int, default=estimator.DEFAULT_CALIBRATION_SAMPLES)
    sp.set_defaults(func=cmd_calibrate, seed=estimator.DEFAULT_CALIBRATION_SEED)
    return p


def _config_tokens(argv: list[str]) -> list[str]:
    """Expand ``--config FILE`` into flags placed before the explicit ones."""
    if "--config" not in argv and not any(a.startswith("--config=") for a in argv):
        return argv
    out, path = [], None
    it = iter(range(len(argv)))
    for i in it:
        a = argv[i]
        if a == "--config":
            if i + 1 >= len(argv):
                raise UsageError("--config: missing file name")
            path = argv[i + 1]
            next(it, None)
        elif a.startswith("--config="):
            path = a.split("=", 1)[1]
        else:
            out.append(a)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"--config: {exc}") from exc
    extra = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"--config: expected key=value, got {line!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        val = val.strip('"').strip("'")
        if val.lower() in ("true", "yes") :
            extra.append(flag)
        elif val.lower() not in ("false", "no"):
            extra += [flag, val]
    return out[:1] + extra + out[1:]


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _config_tokens(argv)
    except UsageError as exc:
        print(f"pixelsurf: error: {exc}", file=sys.stderr)
        return 1
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    if args.threads is not None:
        import numba

        if args.threads < 1:
            print("pixelsurf: error: --threads: must be positive", file=sys.stderr)
            return 1
        numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"pixelsurf: error: {exc}", file=sys.stderr)
        return 1
    except AssertionError as exc:
        print(f"pixelsurf: check failed: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"pixelsurf: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
