"""Solids with exact membership and analytic reference quantities.

Every solid is a closed set. Scalar membership (`contains`) is evaluated in
exact rational arithmetic on the binary values of the inputs; the vectorised
variants used by the digitiser work in floating point with plain ``<=``
comparisons and no tolerance.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.special import gamma


class GeometryError(ValueError):
    pass


def _q(x) -> Fraction:
    return Fraction(float(x)) if isinstance(x, (float, np.floating)) else Fraction(x)


def _as_point(x, d: int) -> tuple[Fraction, ...]:
    pt = tuple(x)
    if len(pt) != d:
        raise GeometryError(f"point has dimension {len(pt)}, solid has dimension {d}")
    for c in pt:
        if isinstance(c, (float, np.floating)) and not math.isfinite(c):
            raise GeometryError("point coordinates must be finite")
    return tuple(_q(c) for c in pt)


class Solid:
    """Common interface; concrete solids are frozen dataclasses below."""

    dim: int

    def contains(self, x) -> bool:
        raise NotImplementedError

    def contains_points(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def x_extent(self, rest: np.ndarray):
        """Chord of the solid along axis 0.

        ``rest`` holds coordinates of axes ``1..d-1`` with shape ``(..., d-1)``.
        Returns ``(lo, hi)`` arrays of the same leading shape such that the
        line meets the solid exactly in ``[lo, hi]`` (empty when ``lo > hi``),
        or ``None`` when the chord is not always a single interval.
        """
        return None

    def translated(self, vec) -> "Solid":
        return Translated(self, tuple(float(c) for c in vec))

    def scaled(self, r: float) -> "Solid":
        raise NotImplementedError

    def interior_contains(self, x) -> bool:
        raise NotImplementedError

    def interior_points(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Translated(Solid):
    """``base + vec`` for solids without a closed-form translate."""

    base: Solid
    vec: tuple[float, ...]

    def __post_init__(self):
        if len(self.vec) != self.base.dim:
            raise GeometryError("translation vector has the wrong dimension")

    @property
    def dim(self) -> int:
        return self.base.dim

    def _back(self, x):
        return tuple(a - _q(b) for a, b in zip(_as_point(x, self.dim), self.vec))

    def contains(self, x) -> bool:
        return self.base.contains(self._back(x))

    def interior_contains(self, x) -> bool:
        return self.base.interior_contains(self._back(x))

    def contains_points(self, pts):
        return self.base.contains_points(np.asarray(pts, dtype=float) - np.asarray(self.vec))

    def interior_points(self, pts):
        return self.base.interior_points(np.asarray(pts, dtype=float) - np.asarray(self.vec))

    def bounds(self):
        lo, hi = self.base.bounds()
        v = np.asarray(self.vec)
        return np.asarray(lo) + v, np.asarray(hi) + v

    def x_extent(self, rest):
        rest = np.asarray(rest, dtype=float)
        out = self.base.x_extent(rest - np.asarray(self.vec[1:]))
        if out is None:
            return None
        lo, hi = out
        return lo + self.vec[0], hi + self.vec[0]

    def translated(self, vec):
        return Translated(self.base, tuple(a + float(b) for a, b in zip(self.vec, vec)))


# ---------------------------------------------------------------------------
# Ball


@dataclass(frozen=True)
class Ball(Solid):
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise GeometryError(f"ball radius must be positive, got {self.radius}")
        if len(self.center) < 1:
            raise GeometryError("ball needs a center")

    @classmethod
    def unit(cls, d: int = 3) -> "Ball":
        return cls((0.0,) * d, 1.0)

    @property
    def dim(self) -> int:
        return len(self.center)

    def _sqdist(self, x) -> Fraction:
        p = _as_point(x, self.dim)
        return sum((pi - _q(ci)) ** 2 for pi, ci in zip(p, self.center))

    def contains(self, x) -> bool:
        return self._sqdist(x) <= _q(self.radius) ** 2

    def interior_contains(self, x) -> bool:
        return self._sqdist(x) < _q(self.radius) ** 2

    def contains_points(self, pts):
        diff = np.asarray(pts, dtype=float) - np.asarray(self.center)
        return np.einsum("...k,...k->...", diff, diff) <= self.radius * self.radius

    def interior_points(self, pts):
        diff = np.asarray(pts, dtype=float) - np.asarray(self.center)
        return np.einsum("...k,...k->...", diff, diff) < self.radius * self.radius

    def bounds(self):
        c = np.asarray(self.center)
        return c - self.radius, c + self.radius

    def x_extent(self, rest):
        rest = np.asarray(rest, dtype=float)
        diff = rest - np.asarray(self.center[1:])
        q = self.radius * self.radius - np.einsum("...k,...k->...", diff, diff)
        inside = q >= 0
        h = np.sqrt(np.where(inside, q, 0.0))
        lo = np.where(inside, self.center[0] - h, np.inf)
        hi = np.where(inside, self.center[0] + h, -np.inf)
        return lo, hi

    def translated(self, vec):
        return Ball(tuple(c + float(v) for c, v in zip(self.center, vec)), self.radius)

    def scaled(self, r):
        return Ball(tuple(c * r for c in self.center), self.radius * r)


# ---------------------------------------------------------------------------
# Axis-parallel box


@dataclass(frozen=True)
class AxisBox(Solid):
    lo: tuple[float, ...]
    sides: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(c) for c in self.lo))
        object.__setattr__(self, "sides", tuple(float(c) for c in self.sides))
        if len(self.lo) != len(self.sides) or not self.sides:
            raise GeometryError("box corner and side lengths must have equal, nonzero length")
        if any(not (s > 0 and math.isfinite(s)) for s in self.sides):
            raise GeometryError(f"box side lengths must be positive, got {self.sides}")

    @classmethod
    def from_sides(cls, sides: Sequence[float]) -> "AxisBox":
        return cls((0.0,) * len(sides), tuple(sides))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def hi(self) -> tuple[float, ...]:
        return tuple(a + s for a, s in zip(self.lo, self.sides))

    def contains(self, x) -> bool:
        p = _as_point(x, self.dim)
        return all(_q(a) <= c <= _q(a) + _q(s) for c, a, s in zip(p, self.lo, self.sides))

    def interior_contains(self, x) -> bool:
        p = _as_point(x, self.dim)
        return all(_q(a) < c < _q(a) + _q(s) for c, a, s in zip(p, self.lo, self.sides))

    def contains_points(self, pts):
        pts = np.asarray(pts, dtype=float)
        return np.all((pts >= np.asarray(self.lo)) & (pts <= np.asarray(self.hi)), axis=-1)

    def interior_points(self, pts):
        pts = np.asarray(pts, dtype=float)
        return np.all((pts > np.asarray(self.lo)) & (pts < np.asarray(self.hi)), axis=-1)

    def bounds(self):
        return np.asarray(self.lo), np.asarray(self.hi)

    def x_extent(self, rest):
        rest = np.asarray(rest, dtype=float)
        inside = np.all((rest >= np.asarray(self.lo[1:])) & (rest <= np.asarray(self.hi[1:])), axis=-1)
        lo = np.where(inside, self.lo[0], np.inf)
        hi = np.where(inside, self.hi[0], -np.inf)
        return lo, hi

    def translated(self, vec):
        return AxisBox(tuple(a + float(v) for a, v in zip(self.lo, vec)), self.sides)

    def scaled(self, r):
        return AxisBox(tuple(a * r for a in self.lo), tuple(s * r for s in self.sides))

    def to_polytope(self) -> "ConvexPolytope":
        d = self.dim
        normals, offsets = [], []
        for k in range(d):
            e = [0.0] * d
            e[k] = 1.0
            normals.append(tuple(e))
            offsets.append(self.hi[k])
            e = [0.0] * d
            e[k] = -1.0
            normals.append(tuple(e))
            offsets.append(-self.lo[k])
        return ConvexPolytope(tuple(normals), tuple(offsets))


# ---------------------------------------------------------------------------
# Convex polytope as an intersection of half-spaces <normal, x> <= offset


@dataclass(frozen=True)
class ConvexPolytope(Solid):
    """Intersection of half-spaces ``<normal, x> <= offset`` with unit normals.

    ``exact`` optionally holds the same constraints with rational,
    unnormalised normals (as built from rational vertices or half-spaces);
    membership then uses them, so boundary points of rational polytopes are
    classified exactly.
    """

    normals: tuple[tuple[float, ...], ...]
    offsets: tuple[float, ...]
    exact: tuple | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        normals = tuple(tuple(float(c) for c in nu) for nu in self.normals)
        offsets = tuple(float(c) for c in self.offsets)
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "offsets", offsets)
        if len(normals) != len(offsets) or not normals:
            raise GeometryError("need one offset per half-space normal")
        d = len(normals[0])
        if any(len(nu) != d for nu in normals):
            raise GeometryError("half-space normals have inconsistent dimension")
        for nu in normals:
            if abs(math.hypot(*nu) - 1.0) > 1e-12:
                raise GeometryError(f"half-space normal {nu} is not a unit vector")
        _check_bounded_with_interior(np.asarray(normals), np.asarray(offsets))

    @classmethod
    def from_halfspaces(cls, normals, offsets) -> "ConvexPolytope":
        """Build from arbitrary (nonzero) normals, rescaling each constraint."""
        normals = np.asarray(normals, dtype=float)
        offsets = np.asarray(offsets, dtype=float)
        norms = np.linalg.norm(normals, axis=1)
        if np.any(norms == 0):
            raise GeometryError("zero half-space normal")
        unit = normals / norms[:, None]
        exact = tuple((tuple(_q(a) for a in nu), _q(c)) for nu, c in zip(normals, offsets))
        return cls(tuple(map(tuple, unit)), tuple(offsets / norms), exact)

    @classmethod
    def from_vertices(cls, vertices, tol: float = 1e-9) -> "ConvexPolytope":
        """Facet description of the convex hull of ``vertices``.

        Candidate hyperplanes through every ``d``-subset of the points are
        kept when all points lie on one side; duplicates are merged.
        """
        pts = np.asarray(vertices, dtype=float)
        if pts.ndim != 2 or pts.shape[0] <= pts.shape[1]:
            raise GeometryError("need at least d+1 vertices in d dimensions")
        d = pts.shape[1]
        scale = max(1.0, float(np.abs(pts).max()))
        planes: list[tuple[np.ndarray, float]] = []
        for idx in itertools.combinations(range(len(pts)), d):
            sub = pts[list(idx)]
            if d == 1:
                nu = np.array([1.0])
            else:
                # normal = null vector of the (d-1) edge vectors
                edges = sub[1:] - sub[0]
                _, sv, vt = np.linalg.svd(edges)
                if sv.size < d - 1 or sv[-1] < tol * scale:
                    continue
                nu = vt[-1]
            c = float(nu @ sub[0])
            side = pts @ nu - c
            if np.all(side <= tol * scale):
                pass
            elif np.all(side >= -tol * scale):
                nu, c = -nu, -c
            else:
                continue
            nu = nu / np.linalg.norm(nu)
            c = float(nu @ sub[0])
            if any(np.allclose(nu, m, atol=1e-9) and abs(c - cc) < 1e-9 * scale for m, cc, _ in planes):
                continue
            planes.append((nu, c, idx))
        if len(planes) < d + 1:
            raise GeometryError("vertices do not span a full-dimensional polytope")
        exact = _exact_planes([tuple(_q(a) for a in row) for row in pts.tolist()],
                              [(p[0], p[2]) for p in planes])
        return cls(tuple(tuple(p[0]) for p in planes), tuple(p[1] for p in planes), exact)

    @property
    def dim(self) -> int:
        return len(self.normals[0])

    @property
    def normal_array(self) -> np.ndarray:
        return np.asarray(self.normals)

    @property
    def offset_array(self) -> np.ndarray:
        return np.asarray(self.offsets)

    def _rational(self):
        if self.exact is not None:
            return self.exact
        return tuple((tuple(_q(a) for a in nu), _q(c)) for nu, c in zip(self.normals, self.offsets))

    def _float_constraints(self) -> tuple[np.ndarray, np.ndarray]:
        if self.exact is None:
            return self.normal_array, self.offset_array
        return (np.array([[float(a) for a in nu] for nu, _ in self.exact]),
                np.array([float(c) for _, c in self.exact]))

    def contains(self, x) -> bool:
        p = _as_point(x, self.dim)
        return all(sum(a * b for a, b in zip(nu, p)) <= c for nu, c in self._rational())

    def interior_contains(self, x) -> bool:
        p = _as_point(x, self.dim)
        return all(sum(a * b for a, b in zip(nu, p)) < c for nu, c in self._rational())

    def contains_points(self, pts):
        pts = np.asarray(pts, dtype=float)
        nrm, off = self._float_constraints()
        return np.all(pts @ nrm.T <= off, axis=-1)

    def interior_points(self, pts):
        pts = np.asarray(pts, dtype=float)
        nrm, off = self._float_constraints()
        return np.all(pts @ nrm.T < off, axis=-1)

    def vertices(self, tol: float = 1e-9) -> np.ndarray:
        return _polytope_vertices(self.normal_array, self.offset_array, tol)

    def bounds(self):
        v = self.vertices()
        return v.min(axis=0), v.max(axis=0)

    def x_extent(self, rest):
        rest = np.asarray(rest, dtype=float)
        shape = rest.shape[:-1]
        lo = np.full(shape, -np.inf)
        hi = np.full(shape, np.inf)
        empty = np.zeros(shape, dtype=bool)
        nrm, off = self._float_constraints()
        for nu, c in zip(nrm, off):
            s = c - rest @ nu[1:]
            if nu[0] > 0:
                hi = np.minimum(hi, s / nu[0])
            elif nu[0] < 0:
                lo = np.maximum(lo, s / nu[0])
            else:
                empty |= s < 0
        lo = np.where(empty, np.inf, lo)
        hi = np.where(empty, -np.inf, hi)
        return lo, hi

    def translated(self, vec):
        vec = np.asarray(vec, dtype=float)
        exact = None
        if self.exact is not None:
            q = [_q(a) for a in vec.tolist()]
            exact = tuple((nu, c + sum(a * b for a, b in zip(nu, q))) for nu, c in self.exact)
        return ConvexPolytope(self.normals, tuple(c + float(np.dot(nu, vec)) for nu, c in zip(self.normals, self.offsets)),
                              exact)

    def scaled(self, r):
        exact = None if self.exact is None else tuple((nu, c * _q(r)) for nu, c in self.exact)
        return ConvexPolytope(self.normals, tuple(c * r for c in self.offsets), exact)


def _nullvector(rows: list[list[Fraction]], d: int) -> list[Fraction]:
    """Exact nonzero vector orthogonal to ``d - 1`` independent rational rows."""
    m = [list(r) for r in rows]
    pivots = []
    row = 0
    for col in range(d):
        piv = next((i for i in range(row, len(m)) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[row], m[piv] = m[piv], m[row]
        inv = 1 / m[row][col]
        m[row] = [a * inv for a in m[row]]
        for i in range(len(m)):
            if i != row and m[i][col] != 0:
                f = m[i][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[row])]
        pivots.append(col)
        row += 1
    free = next(c for c in range(d) if c not in pivots)
    vec = [Fraction(0)] * d
    vec[free] = Fraction(1)
    for i, col in enumerate(pivots):
        vec[col] = -m[i][free]
    return vec


def _exact_planes(pts: list[tuple[Fraction, ...]], planes) -> tuple | None:
    """Rational versions of facet planes found in floating point, oriented outward."""
    d = len(pts[0])
    out = []
    for unit, idx in planes:
        sub = [pts[i] for i in idx]
        if d == 1:
            nu = [Fraction(1)]
        else:
            nu = _nullvector([[a - b for a, b in zip(p, sub[0])] for p in sub[1:]], d)
        c = sum(a * b for a, b in zip(nu, sub[0]))
        if sum(float(a) * b for a, b in zip(nu, unit)) < 0:
            nu, c = [-a for a in nu], -c
        if any(sum(a * b for a, b in zip(nu, p)) > c for p in pts):
            return None  # float facet search and exact geometry disagree; keep floats
        out.append((tuple(nu), c))
    return tuple(out)


def _check_bounded_with_interior(normals: np.ndarray, offsets: np.ndarray) -> None:
    m, d = normals.shape
    # Chebyshev ball: maximise rho subject to <nu, x> + rho <= c
    a_ub = np.hstack([normals, np.ones((m, 1))])
    res = linprog(
        np.r_[np.zeros(d), -1.0], A_ub=a_ub, b_ub=offsets,
        bounds=[(None, None)] * d + [(0, None)], method="highs",
    )
    if res.status == 2:
        raise GeometryError("half-spaces have empty intersection")
    if res.status == 0 and res.x[-1] <= 1e-12:
        raise GeometryError("polytope has no interior points")
    for k in range(d):
        for sgn in (1.0, -1.0):
            cost = np.zeros(d)
            cost[k] = -sgn
            res = linprog(cost, A_ub=normals, b_ub=offsets, bounds=[(None, None)] * d, method="highs")
            if res.status == 3:
                raise GeometryError("polytope is unbounded")


def _polytope_vertices(normals: np.ndarray, offsets: np.ndarray, tol: float) -> np.ndarray:
    m, d = normals.shape
    scale = max(1.0, float(np.abs(offsets).max()))
    found: list[np.ndarray] = []
    for idx in itertools.combinations(range(m), d):
        a = normals[list(idx)]
        if abs(np.linalg.det(a)) < 1e-12:
            continue
        x = np.linalg.solve(a, offsets[list(idx)])
        if np.all(normals @ x <= offsets + tol * scale):
            if not any(np.allclose(x, y, atol=tol * scale) for y in found):
                found.append(x)
    return np.array(found)


# ---------------------------------------------------------------------------
# The two-piece set with a zero-angle contact: {|x|^k <= y <= 1} u [-1,1]x[-1,0]


@dataclass(frozen=True)
class CuspUnion(Solid):
    k: int = 2

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 2:
            raise GeometryError(f"cusp exponent must be an integer >= 2, got {self.k}")
        object.__setattr__(self, "k", int(self.k))

    @property
    def dim(self) -> int:
        return 2

    def contains(self, x) -> bool:
        px, py = _as_point(x, 2)
        upper = abs(px) ** self.k <= py <= 1
        lower = -1 <= px <= 1 and -1 <= py <= 0
        return upper or lower

    def interior_contains(self, x) -> bool:
        px, py = _as_point(x, 2)
        upper = abs(px) ** self.k < py < 1
        lower = -1 < px < 1 and -1 < py < 0
        return upper or lower or (py == 0 and -1 < px < 1 and px != 0)

    def contains_points(self, pts):
        pts = np.asarray(pts, dtype=float)
        x, y = pts[..., 0], pts[..., 1]
        upper = (np.abs(x) ** self.k <= y) & (y <= 1)
        lower = (-1 <= x) & (x <= 1) & (-1 <= y) & (y <= 0)
        return upper | lower

    def bounds(self):
        return np.array([-1.0, -1.0]), np.array([1.0, 1.0])

    def x_extent(self, rest):
        y = np.asarray(rest, dtype=float)[..., 0]
        lower = (y >= -1) & (y <= 0)
        upper = (y > 0) & (y <= 1)
        h = np.where(upper, np.abs(y) ** (1.0 / self.k), 0.0)
        lo = np.where(lower, -1.0, np.where(upper, -h, np.inf))
        hi = np.where(lower, 1.0, np.where(upper, h, -np.inf))
        return lo, hi


# ---------------------------------------------------------------------------
# Unions of convex bodies minus convex bodies


@dataclass(frozen=True)
class CsgBody(Solid):
    """Closure of (union of ``positive``) minus (union of ``negative``).

    Membership uses ``x in some positive part and x not in the interior of
    any negative part``; this agrees with the closure whenever no two part
    boundaries touch tangentially.
    """

    positive: tuple[Solid, ...]
    negative: tuple[Solid, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "positive", tuple(self.positive))
        object.__setattr__(self, "negative", tuple(self.negative))
        if not self.positive:
            raise GeometryError("CSG body needs at least one positive part")
        dims = {p.dim for p in self.positive + self.negative}
        if len(dims) != 1:
            raise GeometryError("CSG parts have inconsistent dimensions")
        for p in self.positive + self.negative:
            if not isinstance(p, (Ball, AxisBox, ConvexPolytope)):
                raise GeometryError("CSG parts must be convex solids")

    @property
    def dim(self) -> int:
        return self.positive[0].dim

    def contains(self, x) -> bool:
        return any(p.contains(x) for p in self.positive) and not any(
            q.interior_contains(x) for q in self.negative
        )

    def contains_points(self, pts):
        pts = np.asarray(pts, dtype=float)
        inside = np.zeros(pts.shape[:-1], dtype=bool)
        for p in self.positive:
            inside |= p.contains_points(pts)
        for q in self.negative:
            inside &= ~q.interior_points(pts)
        return inside

    def bounds(self):
        los, his = zip(*(p.bounds() for p in self.positive))
        return np.min(los, axis=0), np.max(his, axis=0)

    def translated(self, vec):
        return CsgBody(tuple(p.translated(vec) for p in self.positive),
                       tuple(q.translated(vec) for q in self.negative))

    def scaled(self, r):
        return CsgBody(tuple(p.scaled(r) for p in self.positive),
                       tuple(q.scaled(r) for q in self.negative))


# ---------------------------------------------------------------------------
# Faces and reference values


@dataclass(frozen=True)
class Face:
    normal: tuple[float, ...]
    offset: float
    area: float
    vertices: tuple[tuple[float, ...], ...]


PARALLELEPIPED_VERTICES = (
    (0, 0, 0), (1, -1, 0), (-1, 2, 0), (0, 1, 0),
    (0, 0, 1), (1, -1, 1), (-1, 2, 1), (0, 1, 1),
)


def parallelepiped() -> ConvexPolytope:
    """Skewed parallelepiped used as a test body in the simulation study."""
    return ConvexPolytope.from_vertices(PARALLELEPIPED_VERTICES)


def contains(solid: Solid, x) -> bool:
    return solid.contains(x)


def _facet_measure(pts: np.ndarray, normal: np.ndarray) -> float:
    d = pts.shape[1]
    if d == 2:
        if len(pts) != 2:
            raise GeometryError("degenerate polygon edge")
        return float(np.linalg.norm(pts[1] - pts[0]))
    # orthonormal basis of the facet hyperplane
    _, _, vt = np.linalg.svd(normal[None, :])
    basis = vt[1:]
    local = (pts - pts.mean(axis=0)) @ basis.T
    if d == 3:
        order = np.argsort(np.arctan2(local[:, 1], local[:, 0]))
        ring = local[order]
        nxt = np.roll(ring, -1, axis=0)
        return float(0.5 * abs(np.sum(ring[:, 0] * nxt[:, 1] - ring[:, 1] * nxt[:, 0])))
    from scipy.spatial import ConvexHull

    return float(ConvexHull(local).volume)


def polytope_faces(solid: ConvexPolytope | AxisBox, tol: float = 1e-9) -> list[Face]:
    """All facets with exterior unit normals and exact (d-1)-measures."""
    if isinstance(solid, AxisBox):
        faces = []
        d = solid.dim
        for k in range(d):
            others = [solid.sides[j] for j in range(d) if j != k]
            area = float(np.prod(others)) if others else 1.0
            for sign, c in ((-1.0, solid.lo[k]), (1.0, solid.hi[k])):
                nu = [0.0] * d
                nu[k] = sign
                corners = []
                for bits in itertools.product((0, 1), repeat=d - 1):
                    it = iter(bits)
                    corners.append(tuple(
                        c if j == k else (solid.lo[j] + next(it) * solid.sides[j]) for j in range(d)
                    ))
                faces.append(Face(tuple(nu), sign * c, area, tuple(corners)))
        return faces
    if not isinstance(solid, ConvexPolytope):
        raise GeometryError(f"faces are only defined for polytopes, not {type(solid).__name__}")
    verts = solid.vertices(tol)
    scale = max(1.0, float(np.abs(verts).max()))
    faces = []
    for nu, c in zip(solid.normal_array, solid.offsets):
        on = verts[np.abs(verts @ nu - c) <= tol * scale]
        if len(on) < solid.dim:
            continue  # redundant constraint
        area = _facet_measure(on, nu)
        if area <= tol:
            continue
        faces.append(Face(tuple(nu), float(c), area, tuple(map(tuple, on))))
    return faces


def ball_surface_area(d: int, radius: float) -> float:
    return 2.0 * math.pi ** (d / 2) / gamma(d / 2) * radius ** (d - 1)


def surface_area(solid: Solid) -> float:
    if isinstance(solid, Ball):
        return float(ball_surface_area(solid.dim, solid.radius))
    if isinstance(solid, (AxisBox, ConvexPolytope)):
        return float(sum(f.area for f in polytope_faces(solid)))
    raise GeometryError(f"no analytic reference surface area for {type(solid).__name__}")


# ---------------------------------------------------------------------------
# Polytope files and the shape mini-language


def load_polytope(path: str | Path) -> ConvexPolytope:
    data = json.loads(Path(path).read_text())
    if "halfspaces" in data:
        hs = data["halfspaces"]
        return ConvexPolytope.from_halfspaces([h["normal"] for h in hs], [h["offset"] for h in hs])
    if "vertices" in data:
        return ConvexPolytope.from_vertices(data["vertices"])
    raise GeometryError(f"{path}: expected a 'halfspaces' or 'vertices' key")


def save_polytope(poly: ConvexPolytope, path: str | Path) -> None:
    hs = [{"normal": list(nu), "offset": c} for nu, c in zip(poly.normals, poly.offsets)]
    Path(path).write_text(json.dumps({"halfspaces": hs}, indent=1))


def _kv(args: str) -> dict[str, str]:
    out = {}
    for part in filter(None, args.split(",")):
        if "=" not in part:
            raise GeometryError(f"expected key=value, got {part!r}")
        key, val = part.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def parse_shape(text: str) -> Solid:
    """Parse ``ball:r=1[,d=3]``, ``box:0.5,1,1``, ``poly:FILE``, ``cusp:k=2``,
    ``preset:parallelepiped`` (also ``preset:cube``, ``preset:square``)."""
    kind, _, args = text.partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "ball":
            kv = _kv(args)
            d = int(kv.pop("d", 3))
            r = float(kv.pop("r", 1.0))
            center = tuple(float(c) for c in kv.pop("c").split(";")) if "c" in kv else (0.0,) * d
            if kv:
                raise GeometryError(f"unknown ball parameters {sorted(kv)}")
            return Ball(center, r)
        if kind == "box":
            sides = [float(s) for s in args.split(",") if s.strip()]
            return AxisBox.from_sides(sides)
        if kind == "poly":
            return load_polytope(args)
        if kind == "cusp":
            kv = _kv(args)
            return CuspUnion(int(kv.get("k", 2)))
        if kind == "preset":
            name = args.strip().lower()
            if name == "parallelepiped":
                return parallelepiped()
            if name == "cube":
                return AxisBox.from_sides((1.0, 1.0, 1.0))
            if name == "square":
                return AxisBox.from_sides((1.0, 1.0))
            if name == "cuboid":
                return AxisBox.from_sides((0.5, 1.0, 1.0))
            raise GeometryError(f"unknown preset {name!r}")
    except (TypeError, ValueError, KeyError, OSError) as exc:
        if isinstance(exc, GeometryError):
            raise
        raise GeometryError(f"bad shape string {text!r}: {exc}") from exc
    raise GeometryError(f"unknown shape kind {kind!r} in {text!r}")
