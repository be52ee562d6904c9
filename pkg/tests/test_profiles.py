import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fracp import DomainError, GridSpec, PlanarGrid, RadialProfile, dilate, gaussian_bump, schwarz_symmetrize, symmetrize_radial
from fracp.profiles import interpolant_for, radial_grid

GRID = GridSpec(M=64, Rmax=12.0)
finite = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False)


# grid and construction ---------------------------------------------------------


def test_radial_grid_shape():
    r = radial_grid()
    assert r.size == 257 and r[0] == 0.0 and r[-1] == 40.0
    h = np.diff(r)
    assert np.all(h > 0)
    # geometric block near the origin, uniform afterwards
    np.testing.assert_allclose(h[1:15] / h[:14], 1.15, rtol=1e-12)
    np.testing.assert_allclose(h[15:], h[-1], rtol=1e-10)


@pytest.mark.parametrize(
    "nodes, values, match",
    [
        ([0.0], [1.0], "two nodes"),
        ([0.0, 1.0], [1.0], "shape"),
        ([0.5, 1.0], [1.0, 0.0], "first node"),
        ([0.0, 1.0, 1.0], [1.0, 0.0, 0.0], "increasing"),
        ([0.0, 1.0], [np.nan, 0.0], "finite"),
    ],
)
def test_profile_validation(nodes, values, match):
    with pytest.raises(DomainError, match=match):
        RadialProfile(nodes, values)


def test_profile_is_immutable():
    u = gaussian_bump(grid=GRID)
    with pytest.raises(ValueError):
        u.values[0] = 2.0


# interpolation ------------------------------------------------------------------


def test_constant_is_reproduced_exactly_everywhere():
    r = GRID.nodes()
    u = RadialProfile(r, np.full(r.size, 3.0))
    x = np.linspace(0.0, 30.0, 1001)
    assert np.all(u(x) == 3.0)


def test_interpolation_error_is_fourth_order():
    errs = []
    for M in (64, 128, 256):
        u = gaussian_bump(1.0, grid=GridSpec(M=M, Rmax=12.0, n_graded=0))
        x = np.linspace(0.0, 6.0, 4001)
        errs.append(np.max(np.abs(u(x) - np.exp(-x * x))))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 3.5)


def test_nodes_are_interpolated_and_beyond_rmax_is_zero():
    u = gaussian_bump(grid=GRID)
    np.testing.assert_allclose(u(u.nodes), u.values, rtol=1e-15, atol=1e-30)
    # the last node of a bump is (numerically) zero, and so is everything beyond
    zero_tail = u.with_values(np.where(np.arange(u.values.size) == u.values.size - 1, 0.0, u.values))
    assert np.all(zero_tail(np.array([12.0, 12.5, 100.0])) == 0.0)


def test_clamped_derivative_at_the_ends():
    u = gaussian_bump(grid=GRID)
    ip = u.interpolant
    d = ip.derivative(u.values, np.array([0.0, 12.0]))
    assert abs(d[0]) < 1e-13 and abs(d[1]) < 1e-13


@settings(max_examples=40, deadline=None)
@given(u=arrays(np.float64, 65, elements=finite), c=arrays(np.float64, 50, elements=finite),
       x=arrays(np.float64, 50, elements=st.floats(0.0, 12.0)))
def test_spline_transpose_is_the_adjoint(u, c, x):
    ip = interpolant_for(GRID.nodes())
    pts = ip.points(x)
    lhs = float(c @ ip.apply(u, pts))
    rhs = float(u @ ip.apply_transpose(c, pts))
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9 * (1 + np.abs(u).sum() * np.abs(c).sum()))


@pytest.mark.parametrize("x", [0.0, 0.37, 1.0, 2.5])
def test_increment_keeps_relative_accuracy(x):
    u = gaussian_bump(1.0, grid=GRID)
    # moderate steps agree with plain subtraction
    for dy in (0.3, -0.2, 0.05):
        if x + dy >= 0:
            assert u.increment(x, dy) == pytest.approx(float(u(x + dy) - u(x)), rel=1e-12, abs=1e-15)
    # tiny steps follow the local expansion, far below the subtraction noise
    dy = 1e-9
    d1 = float(u.derivative(x))
    d2 = float(u.interpolant.moments(u.values)[0]) if x == 0.0 else None
    got = float(u.increment(x, dy))
    if x == 0.0:
        assert got == pytest.approx(0.5 * d2 * dy * dy, rel=1e-6)
    else:
        assert got == pytest.approx(d1 * dy, rel=1e-6)


def test_increment_across_a_knot():
    u = gaussian_bump(1.0, grid=GRID)
    k = u.nodes[20]
    x, dy = k - 1e-7, 2e-7
    assert float(u.increment(x, dy)) == pytest.approx(float(u.derivative(k)) * dy, rel=1e-5)


# dilation ------------------------------------------------------------------------


def test_dilation_basics():
    u = gaussian_bump(grid=GRID)
    assert np.array_equal(dilate(u, 1.0).nodes, u.nodes)
    v = dilate(u, 2.0)
    np.testing.assert_array_equal(v.nodes, 2.0 * u.nodes)
    np.testing.assert_array_equal(v.values, u.values)
    assert v.Rmax == 24.0
    x = np.linspace(0.0, 20.0, 77)
    np.testing.assert_allclose(v(x), u(x / 2.0), rtol=0, atol=1e-15)


@pytest.mark.parametrize("sigma", [0.0, -1.0, math.inf, math.nan])
def test_dilation_rejects_bad_factor(sigma):
    with pytest.raises(DomainError):
        dilate(gaussian_bump(grid=GRID), sigma)


@given(a=st.floats(0.1, 10.0), b=st.floats(0.1, 10.0))
def test_dilation_composes(a, b):
    u = gaussian_bump(grid=GRID)
    # same factor product, same floating product: bitwise identical nodes
    np.testing.assert_array_equal(dilate(dilate(u, a), b).nodes, dilate(u, a * b).nodes)
    np.testing.assert_allclose(dilate(dilate(u, a), b).nodes, dilate(u, a * b).nodes, rtol=1e-15)


# rearrangements ------------------------------------------------------------------


def test_symmetrize_leaves_decreasing_profiles_alone():
    u = gaussian_bump(grid=GRID)
    v = symmetrize_radial(u, 2)
    np.testing.assert_array_equal(v.values, u.values)
    np.testing.assert_array_equal(v.nodes, u.nodes)


@pytest.mark.parametrize("q", [1.0, 2.0, 4.0])
def test_symmetrize_moves_a_shell_bump_to_the_origin(q):
    r = GRID.nodes()
    u = RadialProfile(r, np.exp(-(((r - 4.0) / 1.0) ** 2)))
    v = symmetrize_radial(u, 2)
    assert np.argmax(v.values) == 0
    assert np.all(np.diff(v.values) <= 0)
    assert v.lp_mass(q, 2) == pytest.approx(u.lp_mass(q, 2), rel=1e-12)


def test_symmetrize_acts_on_absolute_values():
    r = GRID.nodes()
    u = RadialProfile(r, np.sin(r))
    v = symmetrize_radial(u, 2)
    assert np.all(v.values >= 0)
    assert v.lp_mass(2.0, 2) == pytest.approx(u.lp_mass(2.0, 2), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(vals=arrays(np.float64, 65, elements=finite), N=st.sampled_from([2, 3]))
def test_symmetrize_is_monotone_and_equimeasurable(vals, N):
    u = RadialProfile(GRID.nodes(), vals)
    v = symmetrize_radial(u, N)
    assert np.all(np.diff(v.values) <= 0)
    for q in (1.0, 2.0, 4.0):
        m = u.lp_mass(q, N)
        assert v.lp_mass(q, N) == pytest.approx(m, rel=1e-10, abs=1e-300)


def test_schwarz_of_a_disk_is_the_disk():
    L, n, rho = 2.0, 201, 1.2
    f = PlanarGrid.from_function(lambda x, y: (np.hypot(x, y) < rho).astype(float), L, n)
    v = schwarz_symmetrize(f)
    assert abs(v.edges[1] - rho) <= f.spacing
    assert v.values[0] == 1.0


def test_schwarz_of_a_square_has_the_same_area():
    n, L = 101, 2.0
    f = PlanarGrid.from_function(lambda x, y: ((np.abs(x) <= 1.0) & (np.abs(y) <= 1.0)).astype(float), L, n)
    v = schwarz_symmetrize(f)
    cells = np.count_nonzero(f.values)
    assert math.pi * v.edges[1] ** 2 == pytest.approx(cells * f.cell_area, rel=1e-12)
    # the continuum square has area 4; the cell count differs by one ring of cells
    assert abs(v.edges[1] - math.sqrt(4.0 / math.pi)) <= f.spacing


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_schwarz_distribution_function(seed):
    rng = np.random.default_rng(seed)
    n = 24
    vals = rng.integers(0, 5, size=(n, n)).astype(float)
    f = PlanarGrid(1.0, n, vals)
    v = schwarz_symmetrize(f)
    assert np.all(np.diff(v.values) <= 0)
    # measure of {v > t} equals the cell-counted measure of {f > t} at every level
    w = v.weights(2)
    for t in range(0, 5):
        assert float(w[v.values > t].sum()) == pytest.approx(np.count_nonzero(vals > t) * f.cell_area, rel=1e-12)
    for q in (1.0, 2.0, 4.0):
        assert v.lp_mass(q, 2) == pytest.approx(float(np.sum(vals**q)) * f.cell_area, rel=1e-10)


def test_schwarz_of_zero_grid_is_zero():
    v = schwarz_symmetrize(PlanarGrid(1.0, 8, np.zeros((8, 8))))
    assert np.all(v.values == 0.0)


@pytest.mark.parametrize("L, n, values, match", [
    (1.0, 1, np.zeros((1, 1)), "n >= 2"),
    (0.0, 4, np.zeros((4, 4)), "half-width"),
    (1.0, 4, np.zeros((3, 4)), "shape"),
    (1.0, 2, np.array([[0.0, np.inf], [0.0, 0.0]]), "finite"),
])
def test_planar_grid_validation(L, n, values, match):
    with pytest.raises(DomainError, match=match):
        PlanarGrid(L, n, values)


def test_planar_cell_area():
    f = PlanarGrid(3.0, 7, np.zeros((7, 7)))
    assert f.cell_area == pytest.approx(1.0)
