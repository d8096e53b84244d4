import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pixelsurf.configcount import (
    ConfigError,
    ConfigHistogram,
    count_configurations,
    count_configurations_naive,
    decode_config,
    encode_config,
    load_histogram,
    offsets,
    save_histogram,
    shifted_histograms,
    symmetry_code_maps,
)
from pixelsurf.geometry import AxisBox, Ball, CsgBody, CuspUnion, parallelepiped
from pixelsurf.lattice import LatticeImage, digitize, from_black_indices


def brute_force(black: set, n: int, d: int) -> dict:
    """Every window position near the black set, read pixel by pixel."""
    pts = np.array(sorted(black))
    lo, hi = pts.min(axis=0) - (n - 1), pts.max(axis=0)
    out = {}
    for anchor in itertools.product(*(range(a, b + 1) for a, b in zip(lo, hi))):
        code = 0
        for p, x in enumerate(offsets(n, d)):
            if tuple(int(a + c) for a, c in zip(anchor, x)) in black:
                code |= 1 << p
        if code:
            out[code] = out.get(code, 0) + 1
    return out


def random_image(rng, d, size=12, n=2, density=0.5):
    bits = np.zeros((size,) * d, dtype=bool)
    inner = tuple(slice(n - 1, size - n + 1) for _ in range(d))
    bits[inner] = rng.random(bits[inner].shape) < density
    return LatticeImage(1.0, (0.0,) * d, (0,) * d, bits)


def test_encode_examples():
    assert encode_config(set(), 2, 2) == 0
    assert encode_config({(0, 0)}, 2, 2) == 1
    assert encode_config({(0, 0), (0, 1), (1, 0), (1, 1)}, 2, 2) == 15
    assert encode_config({(1, 0)}, 2, 2) == 2 and encode_config({(0, 1)}, 2, 2) == 4


def test_encode_out_of_range():
    with pytest.raises(ConfigError):
        encode_config({(2, 0)}, 2, 2)
    with pytest.raises(ConfigError):
        encode_config({(0, 0, 0)}, 2, 2)


@given(st.integers(0, 2**9 - 1))
def test_decode_inverts_encode(code):
    assert encode_config(decode_config(code, 3, 2), 3, 2) == code


def test_three_by_three_block():
    img = digitize(AxisBox.from_sides((1, 1)), 0.5, (0, 0))
    hist = count_configurations(img, 2)
    assert hist[15] == 4
    for code in (1, 2, 4, 8):
        assert hist[code] == 1
    for code in (3, 5, 10, 12):
        assert hist[code] == 2
    assert hist.total == 16
    assert dict(hist.items()) == brute_force(img.black_set(), 2, 2)
    assert hist == count_configurations_naive(img, 2)


def test_empty_image():
    img = LatticeImage(1.0, (0.0, 0.0), (0, 0), np.zeros((5, 5), dtype=bool))
    for counter in (count_configurations, count_configurations_naive):
        hist = counter(img, 2)
        assert hist.total == 0 and not np.any(hist.counts)


def test_single_pixel():
    hist = count_configurations(from_black_indices([(3, 4)]), 2)
    assert dict(hist.items()) == {1: 1, 2: 1, 4: 1, 8: 1}


def test_insufficient_margin():
    bits = np.ones((4, 4), dtype=bool)
    with pytest.raises(ConfigError, match="margin"):
        count_configurations(LatticeImage(1.0, (0.0, 0.0), (0, 0), bits), 2)


@pytest.mark.parametrize("d,n", [(2, 2), (2, 3), (3, 2), (3, 3), (1, 4)])
def test_fast_matches_naive_on_random_images(d, n):
    rng = np.random.default_rng(100 * d + n)
    size = {1: 40, 2: 12, 3: 9}[d]
    for _ in range(15):
        img = random_image(rng, d, size, n, rng.uniform(0.1, 0.9))
        assert count_configurations(img, n) == count_configurations_naive(img, n)


@given(st.lists(st.tuples(st.integers(0, 6), st.integers(0, 6)), min_size=1, max_size=30),
       st.tuples(st.integers(-9, 9), st.integers(-9, 9)))
def test_translation_invariance(black, z):
    a = count_configurations(from_black_indices(black), 2)
    b = count_configurations(from_black_indices([(x + z[0], y + z[1]) for x, y in black]), 2)
    assert a == b


@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5), st.integers(0, 5)), min_size=1, max_size=25))
def test_conservation(black):
    hist = count_configurations(from_black_indices(black), 2)
    touched = {tuple(p[k] - o[k] for k in range(3)) for p in set(black) for o in offsets(2, 3)}
    assert hist.total == len(touched)


@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)), min_size=1, max_size=25),
       st.integers(0, 7))
def test_symmetry_equivariance(black, g):
    n, d = 2, 2
    perms = list(itertools.permutations(range(d)))
    flips = list(itertools.product((False, True), repeat=d))
    perm, flip = perms[g // len(flips)], flips[g % len(flips)]

    def act(p):
        q = [p[k] for k in perm]
        return tuple(-c if f else c for c, f in zip(q, flip))

    a = count_configurations(from_black_indices(black), n)
    b = count_configurations(from_black_indices([act(p) for p in black]), n)
    table = symmetry_code_maps(n, d)[g]
    mapped = np.zeros(2 ** (n**d), dtype=np.int64)
    mapped[table] = a.counts
    assert np.array_equal(mapped, b.counts)


def test_symmetry_maps_are_permutations():
    maps = symmetry_code_maps(2, 3)
    assert maps.shape == (48, 256)
    for row in maps:
        assert sorted(row.tolist()) == list(range(256))
        assert row[0] == 0 and row[255] == 255


def test_histogram_csv_roundtrip(tmp_path):
    hist = count_configurations(digitize(Ball.unit(2), 0.2, (0.3, 0.1)), 2)
    path = tmp_path / "h.csv"
    save_histogram(hist, path)
    assert path.read_text().splitlines()[1] == "index,count"
    assert load_histogram(path) == hist


def test_histogram_csv_without_metadata(tmp_path):
    path = tmp_path / "h.csv"
    path.write_text("index,count\n1,4\n15,2\n")
    hist = load_histogram(path, n=2, d=2)
    assert hist[1] == 4 and hist[15] == 2
    with pytest.raises(ConfigError):
        load_histogram(path)


def test_sparse_histogram_for_large_windows():
    img = digitize(Ball.unit(3), 0.2, (0.1, 0.2, 0.3), margin=2)
    hist = count_configurations(img, 3)
    assert hist == count_configurations_naive(img, 3)
    with pytest.raises(ConfigError):
        _ = hist.counts


@pytest.mark.parametrize("solid,n", [
    (Ball.unit(3), 2), (Ball.unit(2), 3), (AxisBox.from_sides((0.5, 1, 1)), 2),
    (parallelepiped(), 2), (CuspUnion(2), 2), (CuspUnion(3), 3),
    (CsgBody((AxisBox((-1, -1), (2, 2)),), (Ball((0, 0), 0.5),)), 2),
    (Ball.unit(2).translated((0.3, 0.1)), 2),
])
def test_batched_shift_histograms_match_dense(solid, n):
    rng = np.random.default_rng(7)
    shifts = rng.random((6, solid.dim))
    batch = shifted_histograms(solid, 0.09, shifts, n)
    for row, s in zip(batch, shifts):
        dense = count_configurations(digitize(solid, 0.09, s, margin=n - 1), n)
        assert np.array_equal(row, dense.counts)


def test_histogram_counts_nonnegative():
    with pytest.raises(ConfigError):
        ConfigHistogram(2, 2, np.array([1]), np.array([-1]))
