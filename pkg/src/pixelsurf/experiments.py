"""Shift sweeps, variance curves over a lattice-distance schedule, envelope
slope fits and the cusp counterexample study."""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .configcount import shifted_histograms
from .estimator import WeightTable, estimate_rows
from .geometry import CuspUnion, Solid

log = logging.getLogger(__name__)

DEFAULT_SEED = 20140101
DEFAULT_RUNS = 400
DEFAULT_GRID = {2: 32, 3: 8}


class ExperimentError(ValueError):
    pass


@dataclass(frozen=True)
class ShiftSampler:
    """Shift vectors in [0,1)^d.

    ``grid``: the m^d cell centres ((i + 1/2)/m per axis).
    ``montecarlo``: ``runs`` uniform shifts from a Philox stream keyed by
    (seed, t_index), so every schedule point has its own reproducible stream.
    """

    mode: str
    d: int
    m: int = 8
    runs: int = DEFAULT_RUNS
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.mode not in ("grid", "montecarlo"):
            raise ExperimentError(f"unknown sampler mode {self.mode!r}")
        if self.d < 1:
            raise ExperimentError("sampler dimension must be positive")
        if self.mode == "grid" and self.m < 1:
            raise ExperimentError("grid size must be positive")
        if self.mode == "montecarlo" and self.runs < 1:
            raise ExperimentError("number of runs must be positive")

    @classmethod
    def grid(cls, d: int, m: int | None = None) -> "ShiftSampler":
        return cls("grid", d, m=DEFAULT_GRID.get(d, 8) if m is None else m)

    @classmethod
    def montecarlo(cls, d: int, runs: int = DEFAULT_RUNS, seed: int = DEFAULT_SEED) -> "ShiftSampler":
        return cls("montecarlo", d, runs=runs, seed=seed)

    @classmethod
    def parse(cls, text: str, d: int, seed: int = DEFAULT_SEED) -> "ShiftSampler":
        """``grid:8`` or ``mc:400``."""
        kind, _, arg = text.partition(":")
        try:
            if kind == "grid":
                return cls.grid(d, int(arg) if arg else None)
            if kind in ("mc", "montecarlo"):
                return cls.montecarlo(d, int(arg) if arg else DEFAULT_RUNS, seed)
        except ValueError as exc:
            raise ExperimentError(f"bad sampler {text!r}: {exc}") from exc
        raise ExperimentError(f"bad sampler {text!r}; expected grid:M or mc:RUNS")

    @property
    def size(self) -> int:
        return self.m**self.d if self.mode == "grid" else self.runs

    def shifts(self, t_index: int = 0) -> np.ndarray:
        if self.mode == "grid":
            axis = (np.arange(self.m) + 0.5) / self.m
            return np.array(list(itertools.product(axis, repeat=self.d)))[:, ::-1].copy()
        ss = np.random.SeedSequence([self.seed, t_index])
        rng = np.random.Generator(np.random.Philox(ss))
        return rng.random((self.runs, self.d))


@dataclass
class CurvePoint:
    t: float
    runs: int
    mean: float
    std: float
    sup: float
    inf: float
    values: np.ndarray | None = field(default=None, repr=False)
    error: str | None = None

    @property
    def range(self) -> float:
        return self.sup - self.inf

    @classmethod
    def from_values(cls, t: float, values: np.ndarray, keep: bool = False) -> "CurvePoint":
        values = np.asarray(values, dtype=np.float64)
        runs = values.size
        hi, lo = float(values.max()), float(values.min())
        if hi == lo:
            mean, std = hi, 0.0
        else:
            mean = math.fsum(values.tolist()) / runs
            # population statistics; clamp guards rounding at the range ends
            mean = min(max(mean, lo), hi)
            std = math.sqrt(math.fsum(((values - mean) ** 2).tolist()) / runs)
        return cls(float(t), runs, mean, std, hi, lo, values if keep else None)

    def variance_bound_holds(self) -> bool:
        """Empirical variance <= (sup - inf)^2 / 4, checked in exact arithmetic."""
        if self.values is None:
            return self.std**2 <= self.range**2 / 4
        vals = [Fraction(v) for v in self.values.tolist()]
        n = len(vals)
        mean = sum(vals) / n
        var = sum((v - mean) ** 2 for v in vals) / n
        return var <= (max(vals) - min(vals)) ** 2 / 4


# ---------------------------------------------------------------------------
# Schedule


def t_schedule(t_max: float = 0.1, ratio: float = 0.999, t_min: float = 0.02) -> list[float]:
    """Geometric schedule ``t_max * ratio^k`` (k = 0, 1, ...) down to ``t_min``.

    Then, for each integer l with ``t_min <= 1/l <= t_max`` in ascending
    order, the largest schedule value below ``1/l`` is replaced by exactly
    ``1/l``.  Values that already equal some ``1/l`` are snapped to it and
    never replaced, and each value is replaced at most once, so the rule is
    idempotent.  Descending, no duplicates.
    """
    if not (0 < t_min < t_max < 1):
        raise ExperimentError(f"need 0 < t_min < t_max < 1, got t_min={t_min}, t_max={t_max}")
    if not (0 < ratio < 1):
        raise ExperimentError(f"ratio must lie in (0, 1), got {ratio}")
    sched = []
    k = 0
    while t_max * ratio**k >= t_min:
        sched.append(t_max * ratio**k)
        k += 1
    if not sched:
        raise ExperimentError("empty schedule")
    ls = range(max(1, math.ceil(1 / t_max - 1e-9)), math.floor(1 / t_min + 1e-9) + 1)
    targets = [1.0 / l for l in ls if t_min <= 1.0 / l <= t_max]
    fixed = [False] * len(sched)
    for i, t in enumerate(sched):
        for r in targets:
            if math.isclose(t, r, rel_tol=1e-12):
                sched[i], fixed[i] = r, True
    for r in targets:
        if any(fixed[i] and sched[i] == r for i in range(len(sched))):
            continue
        below = [i for i, t in enumerate(sched) if t < r]
        if below and not fixed[below[0]]:
            sched[below[0]], fixed[below[0]] = r, True
    return sorted(set(sched), reverse=True)


# ---------------------------------------------------------------------------
# Sweeps


def sweep_values(solid: Solid, t: float, w: WeightTable, shifts: np.ndarray) -> np.ndarray:
    if solid.dim != w.d:
        raise ExperimentError(f"solid has dimension {solid.dim}, weights have d={w.d}")
    counts = shifted_histograms(solid, t, shifts, w.n)
    return estimate_rows(counts, w, t)


def sweep_shifts(solid: Solid, t: float, w: WeightTable, sampler: ShiftSampler,
                 t_index: int = 0, keep_values: bool = False) -> CurvePoint:
    """Statistics of the estimate over the sampler's shifts at one lattice distance."""
    if sampler.d != solid.dim:
        raise ExperimentError(f"sampler dimension {sampler.d} does not match solid dimension {solid.dim}")
    values = sweep_values(solid, t, w, sampler.shifts(t_index))
    return CurvePoint.from_values(t, values, keep_values)


def variance_curve(solid: Solid, w: WeightTable, schedule: Sequence[float], sampler: ShiftSampler,
                   keep_values: bool = False,
                   progress: Callable[[int, CurvePoint], None] | None = None) -> list[CurvePoint]:
    """One :class:`CurvePoint` per scheduled t, in descending t.

    A failing point is logged and kept with its error message; the curve
    continues.  ``t_index`` is the position in the descending schedule.
    """
    sched = sorted((float(t) for t in schedule), reverse=True)
    out = []
    for i, t in enumerate(sched):
        try:
            pt = sweep_shifts(solid, t, w, sampler, i, keep_values)
        except (ValueError, MemoryError) as exc:
            log.warning("t=%r failed: %s", t, exc)
            pt = CurvePoint(t, 0, math.nan, math.nan, math.nan, math.nan, error=str(exc))
        out.append(pt)
        if progress is not None:
            progress(i, pt)
    return out


# ---------------------------------------------------------------------------
# Envelope slopes


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    intercept: float
    npoints: int


def upper_envelope(t, y, window: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Running maximum of ``y`` over a centred window of ``window`` octaves in t.

    Only points whose whole window lies inside the sampled t-range are
    returned, so the ends are not biased by truncated windows.
    """
    t = np.asarray(t, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    order = np.argsort(t)
    t, y = t[order], y[order]
    lt = np.log2(t)
    half = window / 2
    inner = (lt - half >= lt[0] - 1e-9) & (lt + half <= lt[-1] + 1e-9)
    lo = np.searchsorted(lt, lt - half - 1e-9, side="left")
    hi = np.searchsorted(lt, lt + half + 1e-9, side="right")
    env = np.array([y[a:b].max() for a, b in zip(lo, hi)])
    return t[inner], env[inner]


def fit_envelope_slope(points, statistic: str = "std", envelope: str = "upper",
                       window: float = 1.0) -> SlopeFit:
    """Least-squares slope of log(statistic) against log(t).

    ``points`` is a list of CurvePoints or a pair ``(t, values)``.  With
    ``envelope="upper"`` the statistic is first reduced to its maximum in each
    window of ``window`` octaves, which removes the alignment dips.
    """
    if isinstance(points, tuple) and len(points) == 2:
        t, y = (np.asarray(a, dtype=np.float64) for a in points)
    else:
        pts = [p for p in points if p.error is None]
        t = np.array([p.t for p in pts])
        y = np.array([p.range if statistic == "range" else getattr(p, statistic) for p in pts])
    if envelope not in ("upper", "all"):
        raise ExperimentError(f"unknown envelope {envelope!r}")
    if t.size < 2 or math.log2(t.max() / t.min()) < 2 - 1e-9:
        raise ExperimentError("slope fit needs at least two octaves of t")
    if envelope == "upper":
        t, y = upper_envelope(t, y, window)
    ok = np.isfinite(y) & (y > 0)
    t, y = t[ok], y[ok]
    if t.size < 2 or np.unique(t).size < 2:
        raise ExperimentError("degenerate slope fit: fewer than two positive values")
    res = stats.linregress(np.log(t), np.log(y))
    stderr = float(res.stderr) if t.size > 2 else math.nan
    return SlopeFit(float(res.slope), stderr, float(res.intercept), int(t.size))


# ---------------------------------------------------------------------------
# Cusp counterexample

ROW_CODES_2D = (3, 12)  # bottom row black / top row black, n=2


@dataclass
class CuspResult:
    k: int
    curve: list[CurvePoint]
    fit: SlopeFit | None
    warning: str | None = None


def cusp_experiment(k: int, schedule: Sequence[float], runs: int = DEFAULT_RUNS,
                    seed: int = DEFAULT_SEED, w: WeightTable | None = None,
                    window: float = 1.0) -> CuspResult:
    """Variance curve of the cusp solid and the slope of its std upper envelope."""
    from .estimator import default_weights

    w = default_weights(2, 2) if w is None else w
    if (w.n, w.d) != (2, 2):
        raise ExperimentError("the cusp study uses n=2 weights in d=2")
    warning = None
    if w.weights[ROW_CODES_2D[0]] + w.weights[ROW_CODES_2D[1]] == 0:
        warning = "weights of the two one-row configurations sum to zero; the cusp effect vanishes"
        log.warning(warning)
    curve = variance_curve(CuspUnion(k), w, schedule, ShiftSampler.montecarlo(2, runs, seed))
    try:
        fit = fit_envelope_slope(curve, "std", "upper", window)
    except ExperimentError as exc:
        fit = None
        warning = f"{warning}; {exc}" if warning else str(exc)
    return CuspResult(k, curve, fit, warning)


# ---------------------------------------------------------------------------
# CSV: t,runs,mean,std,sup,inf with shortest round-trip floats

CURVE_HEADER = "t,runs,mean,std,sup,inf"


def curve_csv(points: Sequence[CurvePoint]) -> str:
    lines = [CURVE_HEADER]
    for p in points:
        if p.error is not None:
            continue
        lines.append(f"{p.t!r},{p.runs},{p.mean!r},{p.std!r},{p.sup!r},{p.inf!r}")
    return "\n".join(lines) + "\n"


def save_curve(points: Sequence[CurvePoint], path: str | Path) -> None:
    Path(path).write_text(curve_csv(points))


def load_curve(path: str | Path) -> list[CurvePoint]:
    rows = Path(path).read_text().splitlines()
    if not rows or rows[0].strip() != CURVE_HEADER:
        raise ExperimentError(f"{path}: expected header {CURVE_HEADER!r}")
    out = []
    for line in rows[1:]:
        if not line.strip():
            continue
        t, runs, mean, std, sup, inf = line.split(",")
        out.append(CurvePoint(float(t), int(runs), float(mean), float(std), float(sup), float(inf)))
    return out
