"""Gauss digitisation onto the shifted lattice tZ^d.

Convention: lattice index ``v`` is black iff ``t * (v - shift)`` lies in the
solid, i.e. ``t*v`` lies in ``K + t*shift``.  Shifting the solid by ``t*U``
is the same as shifting the lattice by ``-t*U``.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import Solid

DEFAULT_MEMORY_CAP_BITS = 2**31
IMAGE_MAGIC = b"PXSIMG01"


class LatticeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LatticeImage:
    """Black lattice points of ``(K + tU) ∩ tZ^d`` inside a bounding window.

    ``bits[z]`` refers to lattice index ``origin + z``.
    """

    t: float
    shift: tuple[float, ...]
    origin: tuple[int, ...]
    bits: np.ndarray = field(repr=False)

    @property
    def d(self) -> int:
        return self.bits.ndim

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(self.bits.shape)

    def black_indices(self) -> np.ndarray:
        """Integer lattice indices of all black points, shape (count, d)."""
        return np.argwhere(self.bits) + np.asarray(self.origin, dtype=np.int64)

    def black_set(self) -> set[tuple[int, ...]]:
        return {tuple(map(int, row)) for row in self.black_indices()}

    def border_is_white(self, width: int) -> bool:
        if width <= 0:
            return True
        b = self.bits
        for ax in range(b.ndim):
            if min(width, b.shape[ax]) and (
                np.take(b, range(min(width, b.shape[ax])), axis=ax).any()
                or np.take(b, range(max(0, b.shape[ax] - width), b.shape[ax]), axis=ax).any()
            ):
                return False
        return True

    def __eq__(self, other):
        if not isinstance(other, LatticeImage):
            return NotImplemented
        return (
            self.t == other.t and self.shift == other.shift and self.origin == other.origin
            and self.bits.shape == other.bits.shape and bool(np.array_equal(self.bits, other.bits))
        )


def lattice_window(solid: Solid, t: float, margin: int) -> tuple[np.ndarray, np.ndarray]:
    """Index range ``[first, last]`` (inclusive) holding every black point of
    the solid for any shift in [0,1)^d, widened by ``margin`` on each side."""
    lo, hi = solid.bounds()
    first = np.floor(np.asarray(lo) / t).astype(np.int64) - margin
    last = np.ceil(np.asarray(hi) / t).astype(np.int64) + 1 + margin
    return first, last


def _validate(t: float, shift, d: int) -> tuple[float, ...]:
    if not (t > 0 and math.isfinite(t)):
        raise LatticeError(f"lattice distance must be positive, got {t}")
    shift = tuple(float(s) for s in shift)
    if len(shift) != d:
        raise LatticeError(f"shift has dimension {len(shift)}, solid has dimension {d}")
    if any(not (0.0 <= s < 1.0) for s in shift):
        raise LatticeError(f"shift components must lie in [0, 1), got {shift}")
    return shift


def digitize(
    solid: Solid,
    t: float,
    shift=None,
    margin: int = 1,
    memory_cap_bits: int = DEFAULT_MEMORY_CAP_BITS,
    slab_points: int = 1 << 20,
) -> LatticeImage:
    """Binary image of ``solid`` at lattice distance ``t`` and sub-lattice ``shift``.

    The window covers the solid's bounding box plus ``margin`` white layers,
    so configurations up to side ``margin + 1`` are never clipped.  Membership
    is evaluated slab by slab along the last axis; the result does not depend
    on the slab size.
    """
    d = solid.dim
    shift = _validate(t, (0.0,) * d if shift is None else shift, d)
    if margin < 0:
        raise LatticeError("margin must be nonnegative")
    first, last = lattice_window(solid, t, margin)
    dims = tuple(int(x) for x in last - first + 1)
    total = math.prod(dims)
    if total > memory_cap_bits:
        raise LatticeError(
            f"window of {total} lattice points exceeds the memory cap of {memory_cap_bits} bits"
        )
    axes = [
        t * (np.arange(first[k], last[k] + 1, dtype=np.float64) - shift[k]) for k in range(d)
    ]
    bits = np.zeros(dims, dtype=bool)
    inner = math.prod(dims[:-1])
    step = max(1, slab_points // max(inner, 1))
    for start in range(0, dims[-1], step):
        stop = min(dims[-1], start + step)
        grids = np.meshgrid(*axes[:-1], axes[-1][start:stop], indexing="ij")
        pts = np.stack(grids, axis=-1)
        bits[..., start:stop] = solid.contains_points(pts)
    return LatticeImage(float(t), shift, tuple(int(x) for x in first), bits)


def from_black_indices(indices, t: float = 1.0, shift=None, margin: int = 1) -> LatticeImage:
    """Image holding exactly the given black lattice indices (for tests and tools)."""
    idx = np.asarray(indices, dtype=np.int64)
    if idx.ndim != 2:
        raise LatticeError("indices must have shape (count, d)")
    d = idx.shape[1]
    shift = _validate(t, (0.0,) * d if shift is None else shift, d)
    if len(idx) == 0:
        bits = np.zeros((2 * margin + 1,) * d, dtype=bool)
        return LatticeImage(float(t), shift, (-margin,) * d, bits)
    first = idx.min(axis=0) - margin
    last = idx.max(axis=0) + margin
    bits = np.zeros(tuple(last - first + 1), dtype=bool)
    bits[tuple((idx - first).T)] = True
    return LatticeImage(float(t), shift, tuple(int(x) for x in first), bits)


# ---------------------------------------------------------------------------
# Binary dump: magic, d, origin, dims, t, shift (little endian), then the
# bits packed LSB-first in axis-0-fastest order.


def save_image(img: LatticeImage, path: str | Path) -> None:
    d = img.d
    header = IMAGE_MAGIC + struct.pack(
        f"<Q{d}q{d}qd{d}d", d, *img.origin, *img.dims, img.t, *img.shift
    )
    packed = np.packbits(img.bits.ravel(order="F"), bitorder="little")
    Path(path).write_bytes(header + packed.tobytes())


def load_image(path: str | Path) -> LatticeImage:
    raw = Path(path).read_bytes()
    if raw[:8] != IMAGE_MAGIC:
        raise LatticeError(f"{path}: not a lattice image dump")
    (d,) = struct.unpack_from("<Q", raw, 8)
    fmt = f"<{d}q{d}qd{d}d"
    vals = struct.unpack_from(fmt, raw, 16)
    origin = tuple(vals[:d])
    dims = tuple(vals[d:2 * d])
    t = vals[2 * d]
    shift = tuple(vals[2 * d + 1:])
    body = np.frombuffer(raw, dtype=np.uint8, offset=16 + struct.calcsize(fmt))
    count = math.prod(dims)
    flat = np.unpackbits(body, count=count, bitorder="little").astype(bool)
    bits = flat.reshape(dims, order="F")
    return LatticeImage(float(t), shift, origin, bits)
