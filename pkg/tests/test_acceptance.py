"""Acceptance criteria, each checked at its stated tolerance and runtime.

Every test records one ``criterion N: PASS|FAIL ...`` line, printed in the
terminal summary.  Criteria that cannot hold are still run as stated and
allowed to fail.
"""
import math
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from conftest import ACCEPTANCE_LINES
from pixelsurf import cli
from pixelsurf.configcount import count_configurations, count_configurations_naive
from pixelsurf.decomposition import nprime_count, random_convex_polygon, verify_pixel_bounds_2d
from pixelsurf.estimator import WeightTable, asymptotic_mean, default_weights
from pixelsurf.experiments import (
    DEFAULT_SEED,
    ExperimentError,
    ShiftSampler,
    cusp_experiment,
    fit_envelope_slope,
    load_curve,
    sweep_shifts,
    t_schedule,
    variance_curve,
)
from pixelsurf.geometry import AxisBox
from pixelsurf.lattice import LatticeImage

CUBE = AxisBox.from_sides((1, 1, 1))
SQUARE = AxisBox.from_sides((1, 1))
BALL_ARGS = ["curve", "--shape", "ball:r=1", "--t-max", "0.1", "--t-min", "0.02", "--runs", "400",
             "--seed", "7", "--weights", "default"]


def record(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def loglog_slope(x, y) -> float:
    return float(stats.linregress(np.log(x), np.log(y)).slope)


def test_criterion_01_range_linear_in_t():
    start = time.perf_counter()
    w = default_weights(3)
    ts = [0.1, 0.05, 0.025]
    pts = [sweep_shifts(CUBE, t, w, ShiftSampler.grid(3, 8)) for t in ts]
    ranges = [p.range for p in pts]
    elapsed = time.perf_counter() - start
    if min(ranges) > 0:
        slope = loglog_slope(ts, ranges)
        per_t = [r / t for r, t in zip(ranges, ts)]
        spread = max(per_t) / min(per_t)
        ok = 0.8 <= slope <= 1.2 and spread < 2 and elapsed <= 120
        detail = f"slope={slope:.4f} (sup-inf)/t spread={spread:.3f}"
    else:
        # at t = 1/10, 1/20, 1/40 the cube's sides are whole multiples of t and
        # every shift gives the same counts, so there is no slope to fit
        ok = False
        detail = "degenerate: sup-inf = 0 at a lattice-aligned t, no slope"
    record(1, ok, f"{detail} ranges={ranges} elapsed={elapsed:.1f}s")


@pytest.mark.slow
def test_criterion_02_variance_bound_and_cube_slope():
    w = default_weights(3)
    sched = t_schedule(0.1, 0.999, 0.02)
    curve = variance_curve(CUBE, w, sched, ShiftSampler.montecarlo(3, 400, DEFAULT_SEED), keep_values=True)
    bound_ok = all(p.error is None and p.variance_bound_holds() for p in curve)
    fit = fit_envelope_slope(curve, "std", "upper")
    ok = bound_ok and 0.8 <= fit.slope <= 1.2
    record(2, ok, f"variance bound exact at all {len(curve)} points: {bound_ok}; "
                  f"cube std envelope slope={fit.slope:.4f}")


def test_criterion_03_zero_variance_distances():
    start = time.perf_counter()
    w = default_weights(3)
    cases = [(AxisBox.from_sides((0.5, 1, 1)), t) for t in (1 / 4, 1 / 6, 1 / 8)]
    cases += [(CUBE, t) for t in (1 / 4, 1 / 5)]
    stds = [sweep_shifts(solid, t, w, ShiftSampler.montecarlo(3, 400, DEFAULT_SEED)).std for solid, t in cases]
    elapsed = time.perf_counter() - start
    ok = all(s <= 1e-12 for s in stds) and elapsed <= 60
    record(3, ok, f"std={stds} elapsed={elapsed:.1f}s")


@pytest.fixture(scope="module")
def ball_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("ball") / "ball.csv"
    start = time.perf_counter()
    code = cli.main(BALL_ARGS + ["--out", str(out)])
    return code, out, time.perf_counter() - start


@pytest.mark.slow
def test_criterion_04_ball_slope(ball_run):
    code, out, elapsed = ball_run
    curve = load_curve(out)
    fit = fit_envelope_slope(curve, "std", "upper")
    ok = code == 0 and 1.3 <= fit.slope <= 1.7 and elapsed <= 15 * 60
    record(4, ok, f"ball std envelope slope={fit.slope:.4f} over {len(curve)} points elapsed={elapsed:.0f}s")


@pytest.mark.slow
def test_criterion_05_cusp_scaling():
    start = time.perf_counter()
    sched = t_schedule(0.02, 0.999, 0.001)
    cusp = cusp_experiment(2, sched, runs=400, seed=DEFAULT_SEED)
    square = variance_curve(SQUARE, default_weights(2), sched, ShiftSampler.montecarlo(2, 400, DEFAULT_SEED))
    sq = fit_envelope_slope(square, "std", "upper")
    elapsed = time.perf_counter() - start
    slope = cusp.fit.slope if cusp.fit is not None else math.nan
    ok = 0.35 <= slope <= 0.65 and sq.slope - slope >= 0.25 and elapsed <= 300
    record(5, ok, f"cusp slope={slope:.4f} square slope={sq.slope:.4f} elapsed={elapsed:.0f}s")


def test_criterion_06_nprime_laws():
    start = time.perf_counter()
    rng = np.random.default_rng(DEFAULT_SEED)
    rs = [8, 16, 32, 64]
    sq_max = []
    cube_mean = []
    for r in rs:
        sq = [nprime_count(SQUARE, r, tuple(rng.random(2))).nprime for _ in range(16)]
        cu = [nprime_count(CUBE, r, tuple(rng.random(3))).nprime for _ in range(16)]
        sq_max.append(max(sq))
        cube_mean.append(float(np.mean(cu)))
    slope = loglog_slope(rs, cube_mean)
    elapsed = time.perf_counter() - start
    ok = len(set(sq_max)) == 1 and 0.8 <= slope <= 1.2 and elapsed <= 120
    record(6, ok, f"square max nprime per r={sq_max} cube mean nprime={cube_mean} "
                  f"slope={slope:.4f} elapsed={elapsed:.1f}s")


def test_criterion_07_pixel_bounds_exact():
    start = time.perf_counter()
    rng = np.random.default_rng(DEFAULT_SEED)
    violations, degenerate = [], 0
    for _ in range(100):
        verts = random_convex_polygon(rng)
        r = Fraction(int(rng.integers(10 * 1024, 40 * 1024 + 1)), 1024)
        v = (Fraction(int(rng.integers(0, 1024)), 1024), Fraction(int(rng.integers(0, 1024)), 1024))
        rep = verify_pixel_bounds_2d(verts, r, v)
        violations += rep.violations()
        degenerate += len(rep.degenerate)
    elapsed = time.perf_counter() - start
    ok = not violations and elapsed <= 120
    record(7, ok, f"violations={len(violations)} vertex-contact cells={degenerate} elapsed={elapsed:.1f}s")


def test_criterion_08_oracle_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(DEFAULT_SEED)
    mismatches = 0
    for d, n in ((2, 2), (2, 3), (3, 2)):
        for _ in range(100):
            dims = rng.integers(2 * n, {2: 40, 3: 14}[d], size=d)
            bits = np.zeros(dims, dtype=bool)
            inner = tuple(slice(n - 1, k - n + 1) for k in dims)
            bits[inner] = rng.random(bits[inner].shape) < rng.uniform(0.05, 0.95)
            img = LatticeImage(1.0, (0.0,) * d, (0,) * d, bits)
            mismatches += count_configurations(img, n) != count_configurations_naive(img, n)
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed <= 60
    record(8, ok, f"mismatches={mismatches} of 300 elapsed={elapsed:.1f}s")


def test_criterion_09_asymptotic_mean():
    start = time.perf_counter()
    cube_w = WeightTable.single(2, 3, 15)
    square_w = WeightTable.single(2, 2, 5)
    cube_ref = asymptotic_mean(CUBE, cube_w)
    square_ref = asymptotic_mean(SQUARE, square_w)
    cube = sweep_shifts(CUBE, 0.01, cube_w, ShiftSampler.grid(3, 8)).mean
    square = sweep_shifts(SQUARE, 0.002, square_w, ShiftSampler.grid(2, 8)).mean
    elapsed = time.perf_counter() - start
    ok = (cube_ref == 1.0 and square_ref == 1.0 and abs(cube - 1) <= 0.02 and abs(square - 1) <= 0.01
          and elapsed <= 180)
    record(9, ok, f"cube mean={cube!r} square mean={square!r} elapsed={elapsed:.1f}s")


@pytest.mark.slow
def test_criterion_10_determinism(ball_run, tmp_path):
    _, first, _ = ball_run
    second = tmp_path / "ball.csv"
    subprocess.run([sys.executable, "-m", "pixelsurf.cli", *BALL_ARGS, "--out", str(second)], check=True)
    ok = first.read_bytes() == second.read_bytes()
    record(10, ok, f"byte-identical={ok} ({len(first.read_bytes())} bytes)")
