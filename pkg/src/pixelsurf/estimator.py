"""Weighted local surface-area estimators and their weight tables.

An estimator is ``t^(d-1) * sum_j w_j N_{t,j}``.  The all-white and the
all-black configuration must carry weight zero; every table built here
enforces that unless explicitly told otherwise.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .configcount import ConfigHistogram, _check_nd, encode_config, offsets, symmetry_code_maps
from .geometry import AxisBox, ConvexPolytope, GeometryError, polytope_faces

log = logging.getLogger(__name__)

DEFAULT_CALIBRATION_SEED = 1234
DEFAULT_CALIBRATION_SAMPLES = 4096


class WeightError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class WeightTable:
    n: int
    d: int
    weights: np.ndarray = field(repr=False)
    allow_nonzero_endpoints: bool = False

    def __post_init__(self):
        cells = _check_nd(self.n, self.d)
        w = np.array(self.weights, dtype=np.float64)
        if w.shape != (2**cells,):
            raise WeightError(f"weight table for n={self.n}, d={self.d} needs {2**cells} entries, got {w.shape}")
        if not np.all(np.isfinite(w)):
            raise WeightError("weights must be finite")
        if not self.allow_nonzero_endpoints and (w[0] != 0 or w[-1] != 0):
            raise WeightError(
                "weights of the all-white and all-black configurations must be 0 "
                f"(got {w[0]!r}, {w[-1]!r})"
            )
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @classmethod
    def zeros(cls, n: int, d: int) -> "WeightTable":
        return cls(n, d, np.zeros(2 ** (n**d)))

    @classmethod
    def single(cls, n: int, d: int, code: int, value: float = 1.0) -> "WeightTable":
        w = np.zeros(2 ** (n**d))
        w[code] = value
        return cls(n, d, w)

    def __eq__(self, other):
        if not isinstance(other, WeightTable):
            return NotImplemented
        return self.n == other.n and self.d == other.d and np.array_equal(self.weights, other.weights)


@dataclass(frozen=True)
class EstimateResult:
    value: float
    t: float
    histogram_id: str

    def line(self) -> str:
        return f"value={self.value!r} t={self.t!r} histogram={self.histogram_id}"


def _weighted_sum(w: np.ndarray, codes: np.ndarray, values: np.ndarray) -> float:
    # correctly rounded, so the result does not depend on summation order
    return math.fsum((w[codes] * values).tolist())


def estimate(hist: ConfigHistogram, w: WeightTable, t: float) -> EstimateResult:
    if (hist.n, hist.d) != (w.n, w.d):
        raise WeightError(f"histogram is n={hist.n}, d={hist.d} but weights are n={w.n}, d={w.d}")
    if not t > 0:
        raise WeightError(f"lattice distance must be positive, got {t}")
    total = _weighted_sum(w.weights, hist.codes, hist.values)
    return EstimateResult(t ** (hist.d - 1) * total, float(t), hist.digest())


def estimate_rows(counts: np.ndarray, w: WeightTable, t: float) -> np.ndarray:
    """Estimates for a stack of dense histograms (one per row); same values as :func:`estimate`."""
    counts = np.asarray(counts)
    scale = t ** (w.d - 1)
    out = np.empty(len(counts))
    for i, row in enumerate(counts):
        nz = np.flatnonzero(row)
        out[i] = scale * _weighted_sum(w.weights, nz, row[nz])
    return out


# ---------------------------------------------------------------------------
# Half-space configurations


def _unit(u, d: int | None = None, tol: float = 1e-9) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 1 or (d is not None and u.size != d):
        raise WeightError(f"direction must be a vector of length {d}")
    if abs(float(np.linalg.norm(u)) - 1.0) > tol:
        raise WeightError(f"direction must be a unit vector, |u| = {np.linalg.norm(u)}")
    return u


def halfspace_config(u, c: float, n: int = 2) -> int:
    """Code whose black offsets are exactly ``{x : <x, u> <= c}``."""
    u = _unit(u)
    d = u.size
    offs = offsets(n, d)
    return encode_config([x for x in offs if float(x @ u) <= c], n, d)


def minkowski_difference(code: int, n: int, d: int) -> np.ndarray:
    """All points ``b - w`` with ``b`` black and ``w`` white, i.e. B + (-W)."""
    cells = _check_nd(n, d)
    offs = offsets(n, d)
    black = offs[[p for p in range(cells) if code >> p & 1]]
    white = offs[[p for p in range(cells) if not code >> p & 1]]
    return (black[:, None, :] - white[None, :, :]).reshape(-1, d)


def face_density(code: int, u, n: int = 2) -> float:
    """(-h(B + (-W), u))^+ : occurrences of ``code`` per unit area of a flat face with normal u."""
    u = np.asarray(u, dtype=np.float64)
    pts = minkowski_difference(code, n, u.size)
    if pts.size == 0:
        return 0.0
    return max(0.0, -float(np.max(pts @ u)))


def face_densities(n: int, d: int, dirs: np.ndarray) -> np.ndarray:
    """``face_density`` for every code (rows) and direction (columns)."""
    cells = _check_nd(n, d)
    dirs = np.atleast_2d(np.asarray(dirs, dtype=np.float64))
    proj = offsets(n, d) @ dirs.T  # (cells, m)
    codes = np.arange(2**cells)
    mask = ((codes[:, None] >> np.arange(cells)[None, :]) & 1).astype(bool)
    out = np.zeros((codes.size, dirs.shape[0]))
    for j in range(1, 2**cells - 1):
        gap = proj[~mask[j]].min(axis=0) - proj[mask[j]].max(axis=0)
        out[j] = np.maximum(gap, 0.0)
    return out


def asymptotic_mean(polytope, w: WeightTable) -> float:
    """Limit of the mean estimate as t -> 0: sum over faces of area times the
    face densities weighted by ``w``."""
    if not isinstance(polytope, (ConvexPolytope, AxisBox)):
        raise GeometryError(f"asymptotic mean needs a polytope, not {type(polytope).__name__}")
    if polytope.dim != w.d:
        raise WeightError(f"polytope has dimension {polytope.dim}, weights have d={w.d}")
    faces = polytope_faces(polytope)
    nz = np.flatnonzero(w.weights)
    total = 0.0
    for f in faces:
        dens = np.array([face_density(int(j), f.normal, w.n) for j in nz])
        total += f.area * float(np.dot(w.weights[nz], dens))
    return total


# ---------------------------------------------------------------------------
# Calibration


def symmetry_orbits(n: int, d: int) -> np.ndarray:
    """Orbit label of each code under the lattice symmetry group (smallest member)."""
    maps = symmetry_code_maps(n, d)
    return maps.min(axis=0)


def random_directions(count: int, d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal((count, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def calibrate_halfspace_weights(
    n: int = 2,
    d: int = 2,
    samples: int = DEFAULT_CALIBRATION_SAMPLES,
    seed: int = DEFAULT_CALIBRATION_SEED,
) -> WeightTable:
    """Symmetric weights whose flat-face response is closest to 1 in least squares.

    Weights are constant on orbits of the lattice symmetry group, so the
    fitted response is itself symmetric.  Rank-deficient systems are solved
    with the minimum-norm solution and reported through logging.
    """
    cells = _check_nd(n, d)
    last = 2**cells - 1
    orbit = symmetry_orbits(n, d)
    labels = np.unique(orbit[1:last])
    if samples < labels.size:
        raise WeightError(f"need at least {labels.size} direction samples, got {samples}")
    rng = np.random.default_rng(seed)
    dirs = random_directions(samples, d, rng)
    dens = face_densities(n, d, dirs)
    design = np.stack([dens[orbit == lab].sum(axis=0) for lab in labels], axis=1)
    coef, _, rank, _ = np.linalg.lstsq(design, np.ones(samples), rcond=None)
    if rank < labels.size:
        log.info("calibration system has rank %d < %d free weights; using minimum-norm weights",
                 rank, labels.size)
    w = np.zeros(2**cells)
    for lab, c in zip(labels, coef):
        w[orbit == lab] = c
    w[0] = w[last] = 0.0
    return WeightTable(n, d, w)


def halfspace_response(w: WeightTable, dirs) -> np.ndarray:
    """Estimator output per unit boundary area for flat faces with the given normals."""
    return w.weights @ face_densities(w.n, w.d, dirs)


# ---------------------------------------------------------------------------
# CSV: optional "# n=.. d=.." line, header index,weight, unlisted indices are 0


def save_weights(w: WeightTable, path: str | Path) -> None:
    lines = [f"# n={w.n} d={w.d}", "index,weight"]
    lines += [f"{j},{float(w.weights[j])!r}" for j in np.flatnonzero(w.weights).tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def parse_weights(text: str, n: int | None = None, d: int | None = None,
                  allow_nonzero_endpoints: bool = False, source: str = "weights") -> WeightTable:
    rows: dict[int, float] = {}
    header_seen = False
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                key, _, val = tok.partition("=")
                if key == "n" and n is None:
                    n = int(val)
                elif key == "d" and d is None:
                    d = int(val)
            continue
        if not header_seen:
            if line.replace(" ", "") != "index,weight":
                raise WeightError(f"{source}: expected header 'index,weight', got {line!r}")
            header_seen = True
            continue
        try:
            a, b = line.split(",")
            rows[int(a)] = float(b)
        except ValueError as exc:
            raise WeightError(f"{source}: malformed row {line!r}") from exc
    if n is None or d is None:
        raise WeightError(f"{source}: window side n and dimension d are unknown")
    cells = _check_nd(n, d)
    w = np.zeros(2**cells)
    for j, val in rows.items():
        if not 0 <= j < 2**cells:
            raise WeightError(f"{source}: index {j} out of range for n={n}, d={d}")
        w[j] = val
    return WeightTable(n, d, w, allow_nonzero_endpoints=allow_nonzero_endpoints)


def load_weights(path: str | Path, n: int | None = None, d: int | None = None,
                 allow_nonzero_endpoints: bool = False) -> WeightTable:
    return parse_weights(Path(path).read_text(), n, d, allow_nonzero_endpoints, str(path))


def default_weights(d: int, n: int = 2) -> WeightTable:
    """Shipped calibrated table for (d, n) in {(2, 2), (3, 2)}."""
    name = f"weights_d{d}_n{n}.csv"
    try:
        text = resources.files("pixelsurf").joinpath("data", name).read_text()
    except FileNotFoundError as exc:
        raise WeightError(f"no default weight table for d={d}, n={n}") from exc
    return parse_weights(text, n, d, source=name)
