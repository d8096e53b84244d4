import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from pixelsurf import experiments
from pixelsurf.estimator import WeightTable, default_weights
from pixelsurf.experiments import (
    CURVE_HEADER,
    CurvePoint,
    ExperimentError,
    ShiftSampler,
    curve_csv,
    cusp_experiment,
    fit_envelope_slope,
    load_curve,
    save_curve,
    sweep_shifts,
    t_schedule,
    upper_envelope,
    variance_curve,
)
from pixelsurf.geometry import AxisBox, Ball

W3 = default_weights(3)
W2 = default_weights(2)
CUBE = AxisBox.from_sides((1, 1, 1))
CUBOID = AxisBox.from_sides((0.5, 1, 1))


# --- samplers ---------------------------------------------------------------

def test_grid_sampler_cell_centres():
    s = ShiftSampler.grid(2, 4).shifts()
    assert s.shape == (16, 2)
    assert s[0].tolist() == [0.125, 0.125] and s[1].tolist() == [0.375, 0.125]
    assert sorted(set(s[:, 0].tolist())) == [0.125, 0.375, 0.625, 0.875]


def test_default_grid_sizes():
    assert ShiftSampler.grid(2).size == 32**2
    assert ShiftSampler.grid(3).size == 8**3


def test_montecarlo_reproducible_per_t_index():
    s = ShiftSampler.montecarlo(3, 50, seed=3)
    a, b = s.shifts(4), s.shifts(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, s.shifts(5))
    assert not np.array_equal(a, ShiftSampler.montecarlo(3, 50, seed=4).shifts(4))
    assert a.shape == (50, 3) and np.all((a >= 0) & (a < 1))


def test_sampler_parse():
    assert ShiftSampler.parse("grid:8", 3) == ShiftSampler.grid(3, 8)
    assert ShiftSampler.parse("mc:400", 2, 9) == ShiftSampler.montecarlo(2, 400, 9)
    for bad in ("grid:x", "random:5", "mc:0"):
        with pytest.raises(ExperimentError):
            ShiftSampler.parse(bad, 2)


# --- schedule ---------------------------------------------------------------

def test_schedule_starts_geometric():
    s = t_schedule()
    assert s[0] == 0.1
    assert s[1] == pytest.approx(0.0999, rel=1e-15)


def test_schedule_reciprocal_replacement():
    s = t_schedule()
    geo = [0.1 * 0.999**k for k in range(len(s) + 5) if 0.1 * 0.999**k >= 0.02]
    assert s.count(1 / 11) == 1
    replaced = max(t for t in geo if t < 1 / 11)
    assert replaced not in s
    assert len(s) == len(geo)


def test_schedule_coarse_ratio():
    assert t_schedule(0.1, 0.5, 0.02) == [0.1, 0.05, 0.025]


@given(st.floats(0.05, 0.5), st.floats(0.99, 0.999), st.floats(0.1, 0.6))
def test_schedule_properties(t_max, ratio, frac):
    t_min = t_max * frac
    # reciprocals must be further apart than one geometric step, else they compete for the same value
    assume(t_min > 2 * (1 - ratio))
    s = t_schedule(t_max, ratio, t_min)
    assert s == sorted(set(s), reverse=True)
    assert all(t_min <= t <= t_max for t in s)
    lowest = t_max * ratio ** math.floor(math.log(t_min / t_max) / math.log(ratio) + 1e-12)
    for l in range(math.ceil(1 / t_max), math.floor(1 / t_min) + 1):
        if t_min <= 1 / l <= t_max and lowest < 1 / l * (1 - 1e-12):
            assert s.count(1 / l) == 1


@pytest.mark.parametrize("args", [(0.1, 0.999, 0.1), (0.1, 1.0, 0.02), (1.5, 0.9, 0.02), (0.1, 0.9, 0)])
def test_schedule_errors(args):
    with pytest.raises(ExperimentError):
        t_schedule(*args)


# --- sweeps -----------------------------------------------------------------

@pytest.mark.parametrize("sampler", [ShiftSampler.grid(3, 3), ShiftSampler.montecarlo(3, 40, 1)])
def test_cube_quarter_is_shift_invariant(sampler):
    pt = sweep_shifts(CUBE, 0.25, W3, sampler)
    assert pt.std == 0.0 and pt.sup == pt.inf


@pytest.mark.parametrize("m", [2, 3, 4, 5])
def test_cuboid_half_integer_distances(m):
    pt = sweep_shifts(CUBOID, 1 / (2 * m), W3, ShiftSampler.montecarlo(3, 60, m))
    assert pt.std == 0.0


def test_ball_has_positive_range():
    pt = sweep_shifts(Ball.unit(3), 0.05, W3, ShiftSampler.grid(3, 8))
    assert pt.range > 0


def test_sweep_dimension_mismatch():
    with pytest.raises(ExperimentError):
        sweep_shifts(CUBE, 0.25, W2, ShiftSampler.grid(3, 2))
    with pytest.raises(ExperimentError):
        sweep_shifts(CUBE, 0.25, W3, ShiftSampler.grid(2, 2))


def test_cuboid_curve_dips_at_half_integer_distances():
    sched = t_schedule(0.1, 0.99, 0.05)
    curve = variance_curve(CUBOID, W3, sched, ShiftSampler.montecarlo(3, 40, 2))
    assert [p.t for p in curve] == sched
    dips = {p.t: p.std for p in curve if any(p.t == 1 / (2 * m) for m in range(5, 11))}
    assert len(dips) == 5 and all(v == 0 for v in dips.values())
    assert max(p.std for p in curve) > 0


@given(st.floats(0.3, 1.0), st.floats(0.08, 0.2))
def test_nested_grid_range_monotone(radius, t):
    ball = Ball((0.1, -0.2), radius)
    coarse = sweep_shifts(ball, t, W2, ShiftSampler.grid(2, 2))
    fine = sweep_shifts(ball, t, W2, ShiftSampler.grid(2, 6))
    assert fine.sup >= coarse.sup and fine.inf <= coarse.inf


# --- curve point statistics ---------------------------------------------------

finite = st.floats(-1e6, 1e6, allow_nan=False)


@given(st.lists(finite, min_size=1, max_size=60))
def test_curve_point_invariants(values):
    pt = CurvePoint.from_values(0.1, np.array(values), keep=True)
    assert pt.inf <= pt.mean <= pt.sup
    assert pt.variance_bound_holds()
    assert pt.std**2 <= pt.range**2 / 4 * (1 + 1e-12) + 1e-300


def test_constant_values_give_zero_std():
    pt = CurvePoint.from_values(0.2, np.full(7, 0.1))
    assert pt.std == 0.0 and pt.mean == 0.1 and pt.runs == 7


def test_population_std():
    pt = CurvePoint.from_values(0.2, np.array([1.0, 3.0]))
    assert pt.mean == 2.0 and pt.std == 1.0


def test_failed_point_is_kept(monkeypatch):
    real = experiments.sweep_values

    def flaky(solid, t, w, shifts):
        if t < 0.15:
            raise ValueError("simulated failure")
        return real(solid, t, w, shifts)

    monkeypatch.setattr(experiments, "sweep_values", flaky)
    curve = variance_curve(Ball.unit(2), W2, [0.2, 0.1], ShiftSampler.grid(2, 2))
    assert curve[0].error is None and curve[1].error == "simulated failure"
    assert curve_csv(curve).count("\n") == 2


# --- slope fitting ------------------------------------------------------------

T = np.geomspace(0.01, 0.1, 200)


def test_slope_linear():
    fit = fit_envelope_slope((T, 3 * T))
    assert abs(fit.slope - 1.0) < 1e-9


def test_slope_power():
    fit = fit_envelope_slope((T, 0.2 * T**1.5))
    assert abs(fit.slope - 1.5) < 1e-9


def test_slope_oscillating():
    t = np.geomspace(0.001, 0.1, 3000)
    fit = fit_envelope_slope((t, t * (1 + 0.5 * np.sin(1 / t))))
    assert 0.9 <= fit.slope <= 1.1


def test_envelope_only_full_windows():
    te, ye = upper_envelope(T, T, window=1.0)
    assert te.min() >= 0.01 * 2**0.5 * (1 - 1e-9) and te.max() <= 0.1 / 2**0.5 * (1 + 1e-9)
    step = T[1] / T[0]
    assert np.all(ye <= te * 2**0.5 * (1 + 1e-9)) and np.all(ye >= te * 2**0.5 / step * (1 - 1e-9))


def test_slope_errors():
    with pytest.raises(ExperimentError):
        fit_envelope_slope((np.array([0.05, 0.1]), np.array([1.0, 2.0])))
    with pytest.raises(ExperimentError):
        fit_envelope_slope((T, np.zeros_like(T)))
    with pytest.raises(ExperimentError):
        fit_envelope_slope((T, T), envelope="lower")


def test_slope_from_points_ignores_errors():
    pts = [CurvePoint(t, 10, 1.0, 2 * t, 1.0, 1.0) for t in T]
    pts.append(CurvePoint(0.05, 0, math.nan, math.nan, math.nan, math.nan, error="x"))
    assert fit_envelope_slope(pts, envelope="all").slope == pytest.approx(1.0)


# --- cusp and CSV ---------------------------------------------------------------

def test_cusp_warns_when_row_weights_cancel():
    w = np.zeros(16)
    w[3], w[12] = 1.0, -1.0
    res = cusp_experiment(2, [0.05, 0.04], runs=5, seed=1, w=WeightTable(2, 2, w))
    assert res.warning and "sum to zero" in res.warning
    assert res.fit is None


def test_cusp_requires_planar_weights():
    with pytest.raises(ExperimentError):
        cusp_experiment(2, [0.05], runs=2, w=W3)


def test_curve_csv_deterministic(tmp_path):
    sched = t_schedule(0.1, 0.9, 0.05)
    a = curve_csv(variance_curve(Ball.unit(2), W2, sched, ShiftSampler.montecarlo(2, 30, 5)))
    b = curve_csv(variance_curve(Ball.unit(2), W2, sched, ShiftSampler.montecarlo(2, 30, 5)))
    assert a == b and a.splitlines()[0] == CURVE_HEADER


def test_curve_independent_of_thread_count():
    import numba

    sched = [0.1, 0.07]
    sampler = ShiftSampler.montecarlo(3, 20, 5)
    before = numba.get_num_threads()
    try:
        numba.set_num_threads(1)
        a = curve_csv(variance_curve(Ball.unit(3), W3, sched, sampler))
    finally:
        numba.set_num_threads(before)
    assert a == curve_csv(variance_curve(Ball.unit(3), W3, sched, sampler))


def test_curve_csv_roundtrip(tmp_path):
    curve = variance_curve(Ball.unit(2), W2, [0.1, 0.05], ShiftSampler.montecarlo(2, 20, 5))
    path = tmp_path / "c.csv"
    save_curve(curve, path)
    again = load_curve(path)
    assert [(p.t, p.runs, p.mean, p.std, p.sup, p.inf) for p in again] == \
        [(p.t, p.runs, p.mean, p.std, p.sup, p.inf) for p in curve]
