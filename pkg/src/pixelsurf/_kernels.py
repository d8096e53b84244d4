"""Compiled counting kernels.

Bit ``p`` of a configuration code is the window offset ``x`` with
``p = sum_k x_k n^k`` (axis 0 least significant), so the ``n`` offsets of
one axis-0 column are adjacent bits.  Sliding the window one step along
axis 0 is then ``(code >> 1) & keep`` plus the bits of the entering column.
"""
from __future__ import annotations

import numba
import numpy as np
from numba import njit, prange

# the bundled TBB is too old; OpenMP gives the same deterministic results
numba.config.THREADING_LAYER = "omp"


@njit(cache=True, nogil=True)
def _row_codes(flat, start, length, coloffs, n, keep, out, out_start, hist, use_hist):
    code = np.int64(0)
    m = coloffs.size
    top = n - 1
    for v0 in range(length):
        code = (code >> 1) & keep
        base = start + v0
        for c in range(m):
            if flat[base + coloffs[c]]:
                code |= np.int64(1) << (top + n * c)
        if v0 >= top:
            if use_hist:
                hist[code] += 1
            else:
                out[out_start + v0 - top] = code


@njit(parallel=True, cache=True)
def dense_histogram(flat, anchors, length, coloffs, n, ncodes, nchunks):
    """Histogram of window codes over all rows starting at ``anchors``.

    ``flat`` is the image raveled in axis-0-fastest order; each anchor is the
    flat index of a row start, ``coloffs`` the flat offsets of the n^(d-1)
    transverse window columns.  Rows are split into chunks with private
    histograms that are summed afterwards, so the result does not depend on
    ``nchunks`` or the thread count.
    """
    nrows = anchors.size
    part = np.zeros((nchunks, ncodes), dtype=np.int64)
    keep = np.int64(0)
    for c in range(coloffs.size):
        for x0 in range(n - 1):
            keep |= np.int64(1) << (x0 + n * c)
    dummy = np.zeros(1, dtype=np.int64)
    for ch in prange(nchunks):
        lo = ch * nrows // nchunks
        hi = (ch + 1) * nrows // nchunks
        for r in range(lo, hi):
            _row_codes(flat, anchors[r], length, coloffs, n, keep, dummy, 0, part[ch], True)
    hist = np.zeros(ncodes, dtype=np.int64)
    for ch in range(nchunks):
        hist += part[ch]
    return hist


@njit(parallel=True, cache=True)
def window_codes(flat, anchors, length, coloffs, n):
    """Code of every window position (used when 2^(n^d) bins do not fit)."""
    per_row = length - n + 1
    out = np.empty(anchors.size * per_row, dtype=np.int64)
    keep = np.int64(0)
    for c in range(coloffs.size):
        for x0 in range(n - 1):
            keep |= np.int64(1) << (x0 + n * c)
    dummy = np.zeros(1, dtype=np.int64)
    for r in prange(anchors.size):
        _row_codes(flat, anchors[r], length, coloffs, n, keep, out, r * per_row, dummy, False)
    return out


@njit(cache=True, nogil=True)
def _position_events(a_row, b_row, p, coloffs, n, ev_pos, ev_bit):
    k = 0
    for c in range(coloffs.size):
        a = a_row[p + coloffs[c]]
        b = b_row[p + coloffs[c]]
        if a <= b:
            for x0 in range(n):
                bit = np.int64(1) << (x0 + n * c)
                ev_pos[k] = a - x0
                ev_bit[k] = bit
                k += 1
                ev_pos[k] = b - x0 + 1
                ev_bit[k] = bit
                k += 1
    # insertion sort on position; at most 2 n^d events
    for i in range(1, k):
        kp = ev_pos[i]
        kb = ev_bit[i]
        j = i - 1
        while j >= 0 and ev_pos[j] > kp:
            ev_pos[j + 1] = ev_pos[j]
            ev_bit[j + 1] = ev_bit[j]
            j -= 1
        ev_pos[j + 1] = kp
        ev_bit[j + 1] = kb
    return k


@njit(parallel=True, cache=True)
def interval_histograms(lo_idx, hi_idx, positions, coloffs, n, ncodes):
    """Configuration histograms of images given as one black run per column.

    ``lo_idx[s, q]..hi_idx[s, q]`` is the black axis-0 index range of
    transverse column ``q`` for shift ``s`` (empty when lo > hi).  For each
    transverse window position the code is piecewise constant in the axis-0
    anchor with breakpoints at the run ends, so every segment is added to the
    histogram with its length.
    """
    nshift = lo_idx.shape[0]
    out = np.zeros((nshift, ncodes), dtype=np.int64)
    nev = 2 * n * coloffs.size
    for s in prange(nshift):
        ev_pos = np.empty(nev, dtype=np.int64)
        ev_bit = np.empty(nev, dtype=np.int64)
        a_row = lo_idx[s]
        b_row = hi_idx[s]
        hist = out[s]
        for pi in range(positions.size):
            k = _position_events(a_row, b_row, positions[pi], coloffs, n, ev_pos, ev_bit)
            code = np.int64(0)
            i = 0
            while i < k:
                pos = ev_pos[i]
                while i < k and ev_pos[i] == pos:
                    code ^= ev_bit[i]
                    i += 1
                if i < k and code != 0:
                    hist[code] += ev_pos[i] - pos
    return out
