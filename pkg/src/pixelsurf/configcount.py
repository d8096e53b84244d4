"""Pixel configuration codes and their counts N_{t,j} in a lattice image."""
from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from . import _kernels
from .lattice import LatticeImage

MAX_CELLS = 63  # n^d bits must fit a signed 64-bit code
DENSE_CELLS = 20  # 2^(n^d) bins are stored densely up to this many cells


class ConfigError(ValueError):
    pass


def _check_nd(n: int, d: int) -> int:
    if n < 1 or d < 1:
        raise ConfigError(f"window side and dimension must be positive, got n={n}, d={d}")
    cells = n**d
    if cells > MAX_CELLS:
        raise ConfigError(f"n^d = {cells} exceeds {MAX_CELLS}; codes would not fit 64 bits")
    return cells


def offsets(n: int, d: int) -> np.ndarray:
    """Window offsets in bit order: row ``p`` is the offset with code bit ``p``."""
    _check_nd(n, d)
    grid = np.indices((n,) * d, dtype=np.int64).reshape(d, -1, order="F").T
    return grid


def encode_config(black, n: int, d: int) -> int:
    """Bitmask of a set of black window offsets."""
    _check_nd(n, d)
    code = 0
    for x in black:
        x = tuple(int(c) for c in x)
        if len(x) != d or any(c < 0 or c >= n for c in x):
            raise ConfigError(f"offset {x} is outside the window {{0..{n - 1}}}^{d}")
        code |= 1 << sum(c * n**k for k, c in enumerate(x))
    return code


def decode_config(code: int, n: int, d: int) -> set[tuple[int, ...]]:
    cells = _check_nd(n, d)
    if not 0 <= code < 2**cells:
        raise ConfigError(f"code {code} out of range for n={n}, d={d}")
    offs = offsets(n, d)
    return {tuple(int(c) for c in offs[p]) for p in range(cells) if code >> p & 1}


def symmetry_code_maps(n: int, d: int) -> np.ndarray:
    """Action of the lattice symmetries (axis permutations and reflections) on codes.

    Row ``g`` maps every code ``j`` to the code of the transformed
    configuration.  Shape ``(2^d d!, 2^(n^d))``.
    """
    cells = _check_nd(n, d)
    if cells > DENSE_CELLS:
        raise ConfigError("symmetry maps are only tabulated for dense code ranges")
    offs = offsets(n, d)
    weights = n ** np.arange(d)
    codes = np.arange(2**cells, dtype=np.int64)
    maps = []
    for perm in itertools.permutations(range(d)):
        for flips in itertools.product((False, True), repeat=d):
            img = offs[:, perm].copy()
            img[:, list(flips)] = n - 1 - img[:, list(flips)]
            target = img @ weights  # bit p -> bit target[p]
            mapped = np.zeros_like(codes)
            for p in range(cells):
                mapped |= ((codes >> p) & 1) << target[p]
            maps.append(mapped)
    return np.array(maps)


@dataclass(eq=False)
class ConfigHistogram:
    """Counts N_{t,j} as sorted ``(codes, values)`` pairs of the nonzero entries.

    The all-white code is never stored (its count is 0 by convention);
    ``counts`` expands to the full dense array for small code ranges.
    """

    n: int
    d: int
    codes: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        _check_nd(self.n, self.d)
        self.codes = np.asarray(self.codes, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.int64)
        keep = (self.values != 0) & (self.codes != 0)
        order = np.argsort(self.codes[keep], kind="stable")
        self.codes = self.codes[keep][order]
        self.values = self.values[keep][order]
        if np.any(self.values < 0):
            raise ConfigError("configuration counts must be nonnegative")

    @classmethod
    def from_dense(cls, n: int, d: int, counts) -> "ConfigHistogram":
        counts = np.asarray(counts, dtype=np.int64)
        if counts.shape != (2 ** (n**d),):
            raise ConfigError(f"dense histogram needs {2 ** (n**d)} entries, got {counts.shape}")
        nz = np.flatnonzero(counts)
        return cls(n, d, nz, counts[nz])

    @property
    def ncodes(self) -> int:
        return 2 ** (self.n**self.d)

    @property
    def counts(self) -> np.ndarray:
        if self.n**self.d > DENSE_CELLS:
            raise ConfigError("histogram too large for a dense array; use codes/values")
        out = np.zeros(self.ncodes, dtype=np.int64)
        out[self.codes] = self.values
        return out

    def __getitem__(self, code: int) -> int:
        i = np.searchsorted(self.codes, code)
        if i < self.codes.size and self.codes[i] == code:
            return int(self.values[i])
        return 0

    def items(self):
        return zip(self.codes.tolist(), self.values.tolist())

    @property
    def total(self) -> int:
        """Number of window positions with at least one black pixel."""
        return int(self.values.sum())

    def digest(self) -> str:
        h = hashlib.sha1(f"{self.n},{self.d}".encode())
        h.update(self.codes.tobytes())
        h.update(self.values.tobytes())
        return h.hexdigest()[:12]

    def __eq__(self, other):
        if not isinstance(other, ConfigHistogram):
            return NotImplemented
        return (
            self.n == other.n and self.d == other.d
            and np.array_equal(self.codes, other.codes) and np.array_equal(self.values, other.values)
        )


def _check_image(image: LatticeImage, n: int) -> None:
    _check_nd(n, image.d)
    if any(s < n for s in image.dims) or not image.border_is_white(n - 1):
        raise ConfigError(
            f"image margin is smaller than n-1 = {n - 1}: a black window would be clipped"
        )


def _layout(dims: tuple[int, ...], n: int):
    """Flat row anchors and column offsets for an axis-0-fastest raveled image."""
    d = len(dims)
    strides = np.cumprod((1,) + dims[:-1]).astype(np.int64)
    trans = [np.arange(dims[k] - n + 1, dtype=np.int64) * strides[k] for k in range(1, d)]
    if trans:
        anchors = sum(np.meshgrid(*trans, indexing="ij")).ravel()
    else:
        anchors = np.zeros(1, dtype=np.int64)
    col = offsets(n, d - 1) @ strides[1:] if d > 1 else np.zeros(1, dtype=np.int64)
    return np.ascontiguousarray(anchors, dtype=np.int64), np.ascontiguousarray(col, dtype=np.int64)


def count_configurations(image: LatticeImage, n: int = 2) -> ConfigHistogram:
    """Counts of all n x ... x n configurations by a sliding shift-and-mask scan."""
    _check_image(image, n)
    d = image.d
    flat = np.ravel(image.bits, order="F")
    anchors, col = _layout(image.dims, n)
    length = image.dims[0]
    if n**d <= DENSE_CELLS:
        nchunks = max(1, min(numba.get_num_threads(), anchors.size))
        hist = _kernels.dense_histogram(flat, anchors, length, col, n, 2 ** (n**d), nchunks)
        hist[0] = 0
        return ConfigHistogram.from_dense(n, d, hist)
    codes = _kernels.window_codes(flat, anchors, length, col, n)
    uniq, cnt = np.unique(codes[codes != 0], return_counts=True)
    return ConfigHistogram(n, d, uniq, cnt)


def count_configurations_naive(image: LatticeImage, n: int = 2) -> ConfigHistogram:
    """Reference counter: re-reads every window independently."""
    _check_image(image, n)
    d = image.d
    bits = image.bits
    offs = [tuple(o) for o in offsets(n, d)]
    tally: dict[int, int] = {}
    for anchor in itertools.product(*(range(s - n + 1) for s in image.dims)):
        code = 0
        for p, o in enumerate(offs):
            if bits[tuple(a + x for a, x in zip(anchor, o))]:
                code |= 1 << p
        if code:
            tally[code] = tally.get(code, 0) + 1
    codes = np.array(sorted(tally), dtype=np.int64)
    return ConfigHistogram(n, d, codes, np.array([tally[c] for c in codes.tolist()], dtype=np.int64))


# ---------------------------------------------------------------------------
# CSV: optional "# n=.. d=.." line, header index,count, nonzero rows only


def save_histogram(hist: ConfigHistogram, path: str | Path) -> None:
    lines = [f"# n={hist.n} d={hist.d}", "index,count"]
    lines += [f"{c},{v}" for c, v in hist.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def load_histogram(path: str | Path, n: int | None = None, d: int | None = None) -> ConfigHistogram:
    codes, values = [], []
    header_seen = False
    for raw in Path(path).read_text().splitlines():
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
            if line.replace(" ", "") != "index,count":
                raise ConfigError(f"{path}: expected header 'index,count', got {line!r}")
            header_seen = True
            continue
        a, b = line.split(",")
        codes.append(int(a))
        values.append(int(b))
    if n is None or d is None:
        raise ConfigError(f"{path}: window side n and dimension d are unknown")
    cells = _check_nd(n, d)
    if any(c < 0 or c >= 2**cells for c in codes):
        raise ConfigError(f"{path}: code out of range for n={n}, d={d}")
    return ConfigHistogram(n, d, np.array(codes, dtype=np.int64), np.array(values, dtype=np.int64))


# ---------------------------------------------------------------------------
# Many shifts at once


def _column_runs(solid, t: float, shifts: np.ndarray, trans_idx: list[np.ndarray]):
    """Black axis-0 index range of every transverse column, per shift."""
    S, d = shifts.shape
    grids = np.meshgrid(*trans_idx, indexing="ij")
    # axis 1 fastest, matching the flat layout used by the kernels
    cols = np.stack([g.ravel(order="F") for g in grids], axis=-1).astype(np.float64)
    coords = t * (cols[None, :, :] - shifts[:, None, 1:])
    lo, hi = solid.x_extent(coords)
    empty = ~(lo <= hi)
    u0 = shifts[:, :1]
    with np.errstate(invalid="ignore"):
        a = np.ceil(np.where(empty, 0.0, lo) / t + u0)
        b = np.floor(np.where(empty, 0.0, hi) / t + u0)
    a = np.where(empty, 1, a).astype(np.int64)
    b = np.where(empty, 0, b).astype(np.int64)
    return a, b


def supports_runs(solid) -> bool:
    """True when every axis-0 chord of the solid is a single interval."""
    if solid.dim < 2:
        return False
    return solid.x_extent(np.zeros((1, solid.dim - 1))) is not None


def shifted_histograms(solid, t: float, shifts, n: int = 2, block_points: int = 1 << 22) -> np.ndarray:
    """Dense histograms (one row per shift) of ``digitize(solid, t, shift)``.

    Solids with single-interval axis-0 chords are handled column by column
    without building the image; anything else goes through the dense
    digitiser and :func:`count_configurations`.  Both routes give identical
    counts.
    """
    from .lattice import digitize, _validate

    shifts = np.atleast_2d(np.asarray(shifts, dtype=np.float64))
    d = solid.dim
    cells = _check_nd(n, d)
    if cells > 16:
        raise ConfigError(f"batched histograms need n^d <= 16, got {cells}")
    for s in shifts:
        _validate(t, s, d)
    ncodes = 2**cells
    if not supports_runs(solid):
        out = np.zeros((len(shifts), ncodes), dtype=np.int64)
        for i, s in enumerate(shifts):
            out[i] = count_configurations(digitize(solid, t, s, margin=n - 1), n).counts
        return out
    from .lattice import lattice_window

    first, last = lattice_window(solid, t, n - 1)
    trans_idx = [np.arange(first[k], last[k] + 1, dtype=np.int64) for k in range(1, d)]
    tdims = tuple(len(ix) for ix in trans_idx)
    strides = np.cumprod((1,) + tdims[:-1]).astype(np.int64)
    starts = [np.arange(tdims[k] - n + 1, dtype=np.int64) * strides[k] for k in range(d - 1)]
    positions = np.ascontiguousarray(sum(np.meshgrid(*starts, indexing="ij")).ravel())
    coloffs = np.ascontiguousarray(offsets(n, d - 1) @ strides)
    ncols = int(np.prod(tdims))
    out = np.empty((len(shifts), ncodes), dtype=np.int64)
    step = max(1, block_points // max(ncols, 1))
    for lo in range(0, len(shifts), step):
        blk = shifts[lo:lo + step]
        a, b = _column_runs(solid, t, blk, trans_idx)
        out[lo:lo + len(blk)] = _kernels.interval_histograms(a, b, positions, coloffs, n, ncodes)
    return out
