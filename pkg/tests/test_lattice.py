import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pixelsurf.geometry import AxisBox, Ball, ConvexPolytope, CuspUnion, GeometryError
from pixelsurf.lattice import (
    LatticeError,
    digitize,
    from_black_indices,
    lattice_window,
    load_image,
    save_image,
)

shift2 = st.tuples(st.floats(0, 0.999), st.floats(0, 0.999))
# dyadic values keep every coordinate product exact, so boundary ties cannot flip
dyadic = st.integers(0, 255).map(lambda k: k / 256)
dyadic_shift2 = st.tuples(dyadic, dyadic)


def test_unit_square_half_step_block():
    img = digitize(AxisBox.from_sides((1, 1)), 0.5, (0, 0))
    assert img.black_set() == {(i, j) for i in range(3) for j in range(3)}


def test_unit_disc_at_unit_spacing():
    img = digitize(Ball.unit(2), 1.0, (0, 0))
    assert img.black_set() == {(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)}


def test_zero_radius_rejected():
    with pytest.raises(GeometryError):
        digitize(Ball((0, 0), 0.0), 0.5)


@pytest.mark.parametrize("t,shift", [(0, (0, 0)), (-1, (0, 0)), (0.5, (1.0, 0)), (0.5, (-0.1, 0)),
                                     (0.5, (0.1,))])
def test_invalid_parameters(t, shift):
    with pytest.raises(LatticeError):
        digitize(AxisBox.from_sides((1, 1)), t, shift)


def test_memory_cap():
    with pytest.raises(LatticeError, match="memory cap"):
        digitize(Ball.unit(3), 0.01, memory_cap_bits=10_000)


def test_window_has_white_margin():
    for n in (2, 3):
        img = digitize(Ball.unit(2), 0.1, (0.3, 0.6), margin=n - 1)
        assert img.border_is_white(n - 1)


def test_deterministic_and_slab_independent():
    solid = Ball.unit(3)
    a = digitize(solid, 0.07, (0.1, 0.2, 0.3))
    b = digitize(solid, 0.07, (0.1, 0.2, 0.3), slab_points=97)
    assert a == b


def test_membership_invariant_of_bits():
    solid = CuspUnion(2)
    img = digitize(solid, 0.13, (0.25, 0.5))
    rng = np.random.default_rng(0)
    for z in rng.integers(0, img.dims, size=(200, 2)):
        v = np.asarray(img.origin) + z
        x = 0.13 * (v - np.asarray(img.shift))
        assert img.bits[tuple(z)] == solid.contains(x)


@given(dyadic_shift2, st.tuples(st.integers(-5, 5), st.integers(-5, 5)))
def test_integer_shift_consistency(shift, z):
    t = 0.125
    solid = AxisBox((-0.375, -0.25), (1.0, 0.6875))
    moved = solid.translated(tuple(t * np.asarray(z)))
    a = digitize(solid, t, shift).black_set()
    b = digitize(moved, t, shift).black_set()
    assert b == {(p[0] + z[0], p[1] + z[1]) for p in a}


@given(dyadic_shift2, st.sampled_from([2, 4, 8]))
def test_scaling_consistency(shift, r):
    t = 0.125
    solid = AxisBox((0.25, -0.5), (0.75, 0.375))
    a = digitize(solid, t, shift).black_set()
    b = digitize(solid.scaled(r), r * t, shift).black_set()
    assert a == b


@given(shift2)
def test_monotonicity(shift):
    small = AxisBox((0.1, 0.1), (0.5, 0.6))
    big = AxisBox((0.0, 0.0), (0.8, 0.9))
    a = digitize(small, 0.05, shift).black_set()
    b = digitize(big, 0.05, shift).black_set()
    assert a <= b


def test_polytope_monotone_in_ball():
    tri = ConvexPolytope.from_vertices([(0, 0), (0.5, 0), (0, 0.5)])
    disc = Ball((0, 0), 1.0)
    assert digitize(tri, 0.05, (0.3, 0.3)).black_set() <= digitize(disc, 0.05, (0.3, 0.3)).black_set()


def test_window_covers_every_shift():
    solid = Ball.unit(2)
    first, last = lattice_window(solid, 0.1, 0)
    for shift in [(0, 0), (0.999, 0.999), (0.5, 0.0)]:
        pts = digitize(solid, 0.1, shift, margin=0).black_indices()
        assert np.all(pts >= first) and np.all(pts <= last)


def test_binary_roundtrip(tmp_path):
    img = digitize(Ball.unit(3), 0.09, (0.5, 0.25, 0.125), margin=2)
    path = tmp_path / "img.bin"
    save_image(img, path)
    again = load_image(path)
    assert again == img
    assert path.read_bytes()[:8] == b"PXSIMG01"


def test_load_rejects_garbage(tmp_path):
    path = tmp_path / "x.bin"
    path.write_bytes(b"not an image")
    with pytest.raises(LatticeError):
        load_image(path)


def test_from_black_indices():
    img = from_black_indices([(0, 0), (2, 1)])
    assert img.black_set() == {(0, 0), (2, 1)}
    assert img.border_is_white(1)
