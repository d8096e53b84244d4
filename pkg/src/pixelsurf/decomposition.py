"""Boundary components, cell counts N' and the per-component pixel bounds.

Everything here works in lattice units: the body is ``r*K + v`` and the
lattice is Z^d.  A cell is the closed cube ``l + [0, n-1]^d`` with integer
``l``.  Polygon predicates run in exact rational arithmetic on the polygon's
vertex list, so every count is an exact integer.
"""
from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .configcount import offsets
from .geometry import AxisBox, ConvexPolytope

Point = tuple[Fraction, Fraction]


class DecompositionError(ValueError):
    pass


class BoundsViolation(AssertionError):
    """A per-component pixel bound failed; carries the offending rows."""

    def __init__(self, report: "BoundsReport"):
        self.report = report
        super().__init__("; ".join(report.violations()))


def _fr(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


# ---------------------------------------------------------------------------
# Normal regions


@dataclass(frozen=True)
class NormalRegion:
    """Directions u with <x_p(1), u> <= ... <= <x_p(m), u> over the window offsets.

    ``perm`` lists code bits in that order; ``arc`` gives the bounding angles
    in [0, 2 pi) for d = 2.
    """

    perm: tuple[int, ...]
    n: int
    arc: tuple[float, float]

    def contains(self, u) -> bool:
        offs = offsets(self.n, 2)
        u = (_fr(u[0]), _fr(u[1]))
        vals = [int(offs[p][0]) * u[0] + int(offs[p][1]) * u[1] for p in self.perm]
        return all(a <= b for a, b in zip(vals, vals[1:]))


def normal_regions_2d(n: int = 2) -> list[NormalRegion]:
    """The closed arcs of S^1 on which the order of <x, u> over the window is fixed."""
    offs = offsets(n, 2)
    angles = set()
    for a, b in itertools.combinations(range(len(offs)), 2):
        dx, dy = (offs[a] - offs[b]).tolist()
        base = math.atan2(dy, dx)
        for s in (0.5 * math.pi, -0.5 * math.pi):
            angles.add(round((base + s) % (2 * math.pi), 12) % round(2 * math.pi, 12))
    angles = sorted(angles)
    out = []
    for k, lo in enumerate(angles):
        hi = angles[(k + 1) % len(angles)]
        mid = 0.5 * (lo + (hi if hi > lo else hi + 2 * math.pi))
        u = np.array([math.cos(mid), math.sin(mid)])
        perm = tuple(int(p) for p in np.argsort(offs @ u, kind="stable"))
        out.append(NormalRegion(perm, n, (lo, hi)))
    return out


def assign_region(normal, regions: Sequence[NormalRegion]) -> NormalRegion:
    """Region containing ``normal``; lexicographically smallest permutation on ties."""
    hits = [g for g in regions if g.contains(normal)]
    if not hits:
        raise DecompositionError(f"normal {normal} lies in no region")
    return min(hits, key=lambda g: g.perm)


# ---------------------------------------------------------------------------
# Polygons and their boundary components


@dataclass(frozen=True)
class BoundaryComponent:
    """One polygon edge, oriented counter-clockwise (the body lies to its left)."""

    index: int
    start: Point
    end: Point
    region: NormalRegion

    @property
    def normal(self) -> Point:
        """Outward normal, not normalised."""
        dx, dy = self.end[0] - self.start[0], self.end[1] - self.start[1]
        return (dy, -dx)

    def projection(self, i: int) -> Fraction:
        """Length of the projection onto the coordinate hyperplane orthogonal to axis ``i`` (1-based)."""
        if i == 1:
            return abs(self.end[1] - self.start[1])
        if i == 2:
            return abs(self.end[0] - self.start[0])
        raise DecompositionError("projection axis must be 1 or 2 in the plane")


def _cross(o: Point, a: Point, b: Point) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def polygon_vertices(polygon) -> list[Point]:
    """Exact counter-clockwise vertex list of a convex polygon.

    Accepts a 2D ConvexPolytope or AxisBox, or a sequence of vertices.
    Collinear interior vertices are removed; a non-convex vertex list is
    rejected.
    """
    if isinstance(polygon, AxisBox):
        if polygon.dim != 2:
            raise DecompositionError("polygon routines need d = 2")
        (x0, y0), (x1, y1) = polygon.lo, polygon.hi
        pts = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    elif isinstance(polygon, ConvexPolytope):
        if polygon.dim != 2:
            raise DecompositionError("polygon routines need d = 2")
        pts = [tuple(p) for p in polygon.vertices().tolist()]
    else:
        pts = [tuple(p) for p in polygon]
        if any(len(p) != 2 for p in pts):
            raise DecompositionError("polygon vertices must be 2D points")
        verts = [(_fr(x), _fr(y)) for x, y in pts]
        return _clean_convex(verts, sort=False)
    verts = [(_fr(x), _fr(y)) for x, y in pts]
    return _clean_convex(verts, sort=True)


def _clean_convex(verts: list[Point], sort: bool) -> list[Point]:
    uniq = list(dict.fromkeys(verts))
    if len(uniq) < 3:
        raise DecompositionError("polygon needs at least three distinct vertices")
    if sort:
        cx = sum(float(p[0]) for p in uniq) / len(uniq)
        cy = sum(float(p[1]) for p in uniq) / len(uniq)
        uniq.sort(key=lambda p: math.atan2(float(p[1]) - cy, float(p[0]) - cx))
    area2 = sum(a[0] * b[1] - a[1] * b[0] for a, b in zip(uniq, uniq[1:] + uniq[:1]))
    if area2 == 0:
        raise DecompositionError("polygon has empty interior")
    if area2 < 0:
        uniq.reverse()
    # drop collinear vertices so every component is a maximal edge
    changed = True
    while changed and len(uniq) > 3:
        changed = False
        m = len(uniq)
        for k in range(m):
            if _cross(uniq[k - 1], uniq[k], uniq[(k + 1) % m]) == 0:
                del uniq[k]
                changed = True
                break
    m = len(uniq)
    turns = [_cross(uniq[k - 1], uniq[k], uniq[(k + 1) % m]) for k in range(m)]
    if any(c < 0 for c in turns):
        raise DecompositionError("polygon is not convex")
    # a convex polygon winds exactly once
    total = 0.0
    for k in range(m):
        a, b, c = uniq[k - 1], uniq[k], uniq[(k + 1) % m]
        e1 = (float(b[0] - a[0]), float(b[1] - a[1]))
        e2 = (float(c[0] - b[0]), float(c[1] - b[1]))
        total += math.atan2(e1[0] * e2[1] - e1[1] * e2[0], e1[0] * e2[0] + e1[1] * e2[1])
    if abs(total - 2 * math.pi) > 1e-6:
        raise DecompositionError("polygon is not convex")
    return uniq


def scale_polygon(verts: Sequence[Point], r, v) -> list[Point]:
    r = _fr(r)
    if r <= 0:
        raise DecompositionError(f"scale must be positive, got {r}")
    vx, vy = _fr(v[0]), _fr(v[1])
    return [(r * x + vx, r * y + vy) for x, y in verts]


def decompose_polygon_boundary(polygon, n: int = 2, r=1, v=(0, 0)) -> list[BoundaryComponent]:
    """Boundary components of ``r * polygon + v``: its edges, each tagged with a normal region."""
    verts = scale_polygon(polygon_vertices(polygon), r, v)
    regions = normal_regions_2d(n)
    comps = []
    m = len(verts)
    for k in range(m):
        a, b = verts[k], verts[(k + 1) % m]
        if a == b:
            continue
        normal = (b[1] - a[1], a[0] - b[0])
        comps.append(BoundaryComponent(len(comps), a, b, assign_region(normal, regions)))
    return comps


def in_polygon(verts: Sequence[Point], q: Point) -> bool:
    """Closed membership in a counter-clockwise convex polygon."""
    m = len(verts)
    return all(_cross(verts[k], verts[(k + 1) % m], q) >= 0 for k in range(m))


def clip_segment(a: Point, b: Point, lo: Sequence[int], hi: Sequence[int]):
    """Part of segment ab inside the closed box [lo, hi], as (p, q) or None."""
    t0, t1 = Fraction(0), Fraction(1)
    for k in range(2):
        dk = b[k] - a[k]
        if dk == 0:
            if a[k] < lo[k] or a[k] > hi[k]:
                return None
            continue
        s0 = (lo[k] - a[k]) / dk
        s1 = (hi[k] - a[k]) / dk
        if s0 > s1:
            s0, s1 = s1, s0
        t0 = max(t0, s0)
        t1 = min(t1, s1)
        if t0 > t1:
            return None

    def at(s):
        return (a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1]))

    return at(t0), at(t1)


def segment_cells(a: Point, b: Point, n: int = 2) -> set[tuple[int, int]]:
    """Anchors of all cells ``l + [0, n-1]^2`` meeting the closed segment ab."""
    span = n - 1
    xlo, xhi = min(a[0], b[0]), max(a[0], b[0])
    out = set()
    for l1 in range(math.ceil(xlo) - span, math.floor(xhi) + 1):
        piece = clip_segment(a, b, (l1, -10**30), (l1 + span, 10**30))
        if piece is None:
            continue
        ylo, yhi = min(piece[0][1], piece[1][1]), max(piece[0][1], piece[1][1])
        for l2 in range(math.ceil(ylo) - span, math.floor(yhi) + 1):
            out.add((l1, l2))
    return out


# ---------------------------------------------------------------------------
# N'


@dataclass
class CellReport:
    """Cells met by at least two boundary components of ``r*K + v``.

    ``pair_counts[(a, b)]`` counts cells met by both a and b, and ``nprime``
    is their sum (a cell met by m components contributes m(m-1)/2);
    ``per_component[k]`` is the number of such cells met by component k, and
    ``incidences`` sums those (a cell met by m components contributes m);
    ``multi_cells`` counts the cells themselves.
    """

    r: float
    v: tuple[float, ...]
    nprime: int
    per_component: tuple[int, ...]
    pair_counts: dict = field(repr=False)
    multi_cells: int

    @property
    def incidences(self) -> int:
        return sum(self.per_component)


def _polygon_cell_map(comps: Sequence[BoundaryComponent], n: int) -> dict:
    cells: dict[tuple[int, int], list[int]] = defaultdict(list)
    for c in comps:
        for cell in segment_cells(c.start, c.end, n):
            cells[cell].append(c.index)
    return cells


def _report_from_cell_map(r, v, ncomp: int, cells: dict) -> CellReport:
    per = [0] * ncomp
    pairs: dict[tuple[int, int], int] = defaultdict(int)
    multi = 0
    for members in cells.values():
        if len(members) < 2:
            continue
        multi += 1
        for k in members:
            per[k] += 1
        for a, b in itertools.combinations(sorted(members), 2):
            pairs[(a, b)] += 1
    return CellReport(float(r), tuple(float(x) for x in v), sum(pairs.values()), tuple(per), dict(pairs),
                      multi)


def _box_nprime(box: AxisBox, r, v, n: int) -> CellReport:
    d = box.dim
    r = _fr(r)
    lo = [r * _fr(a) + _fr(s) for a, s in zip(box.lo, v)]
    hi = [r * _fr(a) + _fr(s) for a, s in zip(box.hi, v)]
    span = n - 1
    hits = []  # per axis: (lower facet hit, upper facet hit) over the anchor range
    for k in range(d):
        ls = np.arange(math.ceil(lo[k]) - span, math.floor(hi[k]) + 1)
        lo_hit = (ls >= math.ceil(lo[k]) - span) & (ls <= math.floor(lo[k]))
        hi_hit = (ls >= math.ceil(hi[k]) - span) & (ls <= math.floor(hi[k]))
        hits.append((lo_hit.astype(np.int64), hi_hit.astype(np.int64)))
    # facet order: (axis 0, lower), (axis 0, upper), (axis 1, lower), ...
    shape = tuple(len(h[0]) for h in hits)
    count = np.zeros(shape, dtype=np.int64)
    facet = []
    for k, (a, b) in enumerate(hits):
        view = [1] * d
        view[k] = -1
        for arr in (a, b):
            f = arr.reshape(view)
            facet.append(f)
            count = count + f
    multi = count >= 2
    per = tuple(int(np.sum(np.broadcast_to(f, shape) & multi)) for f in facet)
    pairs = {}
    for a, b in itertools.combinations(range(len(facet)), 2):
        c = int(np.sum(np.broadcast_to(facet[a] * facet[b], shape)))
        if c:
            pairs[(a, b)] = c
    return CellReport(float(r), tuple(float(x) for x in v), sum(pairs.values()), per, pairs,
                      int(np.sum(multi)))


def nprime_count(solid, r, v, n: int = 2) -> CellReport:
    """Exact N' of ``r*solid + v`` for a 2D convex polygon or an axis box in any dimension."""
    if not _fr(r) > 0:
        raise DecompositionError(f"scale must be positive, got {r}")
    if isinstance(solid, AxisBox):
        if len(v) != solid.dim:
            raise DecompositionError("shift dimension does not match the box")
        return _box_nprime(solid, r, v, n)
    if (isinstance(solid, ConvexPolytope) and solid.dim == 2) or _is_vertex_list(solid):
        comps = decompose_polygon_boundary(solid, n, r, v)
        return _report_from_cell_map(r, v, len(comps), _polygon_cell_map(comps, n))
    raise DecompositionError(
        f"N' is implemented for 2D convex polygons and axis boxes, not {type(solid).__name__}"
    )


def _is_vertex_list(obj) -> bool:
    try:
        return len(obj) >= 3 and all(len(p) == 2 for p in obj)
    except TypeError:
        return False


# ---------------------------------------------------------------------------
# Pixel bounds for d = 2, n = 2


@dataclass(frozen=True)
class BoundRow:
    kappa: int
    eps: int
    gamma: int
    i: int
    n_minus: int
    nprime: int
    proj: Fraction
    lower_ok: bool  # N- - N' <= I
    upper_ok: bool  # I <= N- + N'


@dataclass(frozen=True)
class CanonicalRow:
    """Counts in the frame where the component's normal satisfies 0 <= u1 <= u2."""

    kappa: int
    n1: int  # only the lower-left pixel black
    n2: int  # lower row black
    n3: int  # all but the upper-right pixel black
    i1: Fraction
    i2: Fraction
    nprime: int
    checks: tuple[bool, ...]  # the eight one-sided inequalities, lower/upper per pair


@dataclass
class BoundsReport:
    r: float
    v: tuple[float, ...]
    components: list[BoundaryComponent]
    rows: list[BoundRow]
    canonical: list[CanonicalRow]
    non_halfspace: list[tuple[int, int, int]]  # (kappa, canonical code, count)
    # same, for cells also met by another component (a polygon vertex on a
    # lattice point); these do not contradict the bounds and are not failures
    degenerate: list[tuple[int, int, int]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (all(r.lower_ok and r.upper_ok for r in self.rows)
                and all(all(c.checks) for c in self.canonical) and not self.non_halfspace)

    def violations(self) -> list[str]:
        out = []
        for row in self.rows:
            if not row.lower_ok:
                out.append(f"kappa={row.kappa} eps={row.eps} gamma={row.gamma} i={row.i}: "
                           f"N-={row.n_minus} N'={row.nprime} I={row.proj} violates N- - N' <= I")
            if not row.upper_ok:
                out.append(f"kappa={row.kappa} eps={row.eps} gamma={row.gamma} i={row.i}: "
                           f"N-={row.n_minus} N'={row.nprime} I={row.proj} violates I <= N- + N'")
        for c in self.canonical:
            for name, ok in zip(CANONICAL_CHECKS, c.checks):
                if not ok:
                    out.append(f"kappa={c.kappa}: {name} fails (N1={c.n1} N2={c.n2} N3={c.n3} "
                               f"I1={c.i1} I2={c.i2} N'={c.nprime})")
        for kappa, code, count in self.non_halfspace:
            out.append(f"kappa={kappa}: {count} cells with non-half-space code {code}")
        return out

    def assert_ok(self) -> None:
        if not self.ok:
            raise BoundsViolation(self)

    def table(self) -> str:
        lines = ["kappa,eps,gamma,i,n_minus,nprime,projection,status"]
        for row in self.rows:
            status = "pass" if row.lower_ok and row.upper_ok else "FAIL"
            lines.append(f"{row.kappa},{row.eps},{row.gamma},{row.i},{row.n_minus},{row.nprime},"
                         f"{float(row.proj)!r},{status}")
        return "\n".join(lines) + "\n"


CANONICAL_CHECKS = (
    "N3 - N' <= I1", "I1 <= N3 + N'",
    "N1 - N' <= I1", "I1 <= N1 + N'",
    "N3 + N2 - N' <= I2", "I2 <= N3 + N2 + N'",
    "N1 + N2 - N' <= I2", "I2 <= N1 + N2 + N'",
)
HALFSPACE_CANONICAL = frozenset({0, 1, 3, 7, 15})
_OFFS2 = ((0, 0), (1, 0), (0, 1), (1, 1))  # bit order for n = 2, d = 2


def _canonical_frame(normal: Point) -> tuple[bool, bool, bool]:
    """Reflections (x, y) then axis swap taking ``normal`` into 0 <= u1 <= u2."""
    fx, fy = normal[0] < 0, normal[1] < 0
    swap = abs(normal[0]) > abs(normal[1])
    return fx, fy, swap


def _canonical_code(black: Sequence[bool], frame) -> int:
    fx, fy, swap = frame
    code = 0
    for bit, (ox, oy) in enumerate(_OFFS2):
        if not black[bit]:
            continue
        x, y = (1 - ox if fx else ox), (1 - oy if fy else oy)
        if swap:
            x, y = y, x
        code |= 1 << (x + 2 * y)
    return code


def _only_component(kappa: BoundaryComponent, members, comps, cell) -> bool:
    """True when the boundary meets the cell only inside component ``kappa``."""
    lo = cell
    hi = (cell[0] + 1, cell[1] + 1)
    ends = (kappa.start, kappa.end)
    for k in members:
        if k == kappa.index:
            continue
        piece = clip_segment(comps[k].start, comps[k].end, lo, hi)
        if piece is None:
            continue
        if piece[0] != piece[1] or piece[0] not in ends:
            return False
    return True


def verify_pixel_bounds_2d(polygon, r, v, strict: bool = False) -> BoundsReport:
    """Check the per-component pixel bounds on ``r * polygon + v`` (d = 2, n = 2).

    For each component, each eps in {0, 1}, gamma = 0 and i in {1, 2}, the
    number of cells meeting the boundary only inside the component, in which
    exactly one of the two designated pixels is black, is compared with the
    component's axis projection, up to the component's multi-component cell
    count.  The same component is also mapped into the canonical normal frame
    where the one-, two- and three-black half-space counts are compared with
    the projections, and every other configuration must be absent.
    """
    n = 2
    verts = scale_polygon(polygon_vertices(polygon), r, v)
    comps = decompose_polygon_boundary(polygon, n, r, v)
    cells = _polygon_cell_map(comps, n)
    nrep = _report_from_cell_map(r, v, len(comps), cells)
    nminus: dict[tuple[int, int, int], int] = defaultdict(int)
    canon: dict[int, dict[int, int]] = {c.index: defaultdict(int) for c in comps}
    canon_multi: dict[int, dict[int, int]] = {c.index: defaultdict(int) for c in comps}
    frames = {c.index: _canonical_frame(c.normal) for c in comps}
    for cell, members in cells.items():
        black = [in_polygon(verts, (Fraction(cell[0] + ox), Fraction(cell[1] + oy))) for ox, oy in _OFFS2]
        for k in set(members):
            if not _only_component(comps[k], members, comps, cell):
                continue
            for eps in (0, 1):
                # i = 1: the pixel pair along axis 1 in row eps; i = 2: along axis 2 in column eps
                if black[_OFFS2.index((0, eps))] != black[_OFFS2.index((1, eps))]:
                    nminus[(k, eps, 1)] += 1
                if black[_OFFS2.index((eps, 0))] != black[_OFFS2.index((eps, 1))]:
                    nminus[(k, eps, 2)] += 1
            code = _canonical_code(black, frames[k])
            canon[k][code] += 1
            if len(set(members)) > 1:
                canon_multi[k][code] += 1
    rows = []
    for c in comps:
        npk = nrep.per_component[c.index]
        for eps in (0, 1):
            for i in (1, 2):
                nm = nminus[(c.index, eps, i)]
                proj = c.projection(i)
                rows.append(BoundRow(c.index, eps, 0, i, nm, npk, proj, nm - npk <= proj, proj <= nm + npk))
    canonical, bad, degenerate = [], [], []
    for c in comps:
        npk = nrep.per_component[c.index]
        tally = canon[c.index]
        n1, n2, n3 = tally.get(1, 0), tally.get(3, 0), tally.get(7, 0)
        swap = frames[c.index][2]
        i1 = c.projection(2 if swap else 1)
        i2 = c.projection(1 if swap else 2)
        checks = (
            n3 - npk <= i1, i1 <= n3 + npk,
            n1 - npk <= i1, i1 <= n1 + npk,
            n3 + n2 - npk <= i2, i2 <= n3 + n2 + npk,
            n1 + n2 - npk <= i2, i2 <= n1 + n2 + npk,
        )
        canonical.append(CanonicalRow(c.index, n1, n2, n3, i1, i2, npk, checks))
        for code, count in sorted(tally.items()):
            if code in HALFSPACE_CANONICAL:
                continue
            multi = canon_multi[c.index].get(code, 0)
            if count > multi:
                bad.append((c.index, code, count - multi))
            if multi:
                degenerate.append((c.index, code, multi))
    report = BoundsReport(float(r), tuple(float(x) for x in v), comps, rows, canonical, bad, degenerate)
    if strict:
        report.assert_ok()
    return report


def random_convex_polygon(rng: np.random.Generator, points: int = 12, denom: int = 1024) -> list[Point]:
    """Convex hull of random points in the unit square, with dyadic rational vertices."""
    from scipy.spatial import ConvexHull

    while True:
        pts = np.round(rng.random((points, 2)) * denom).astype(np.int64)
        pts = np.unique(pts, axis=0)
        if len(pts) < 3:
            continue
        try:
            hull = ConvexHull(pts)
        except Exception:  # all points collinear
            continue
        verts = [(Fraction(int(x), denom), Fraction(int(y), denom)) for x, y in pts[hull.vertices]]
        try:
            return _clean_convex(verts, sort=True)
        except DecompositionError:
            continue
