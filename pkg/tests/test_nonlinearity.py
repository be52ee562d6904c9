import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from fracp import DomainError, GridSpec, eval_all, initial_guess, make_model, validate
from fracp.energy import potential_value
from fracp.nonlinearity import initializer_value

REF = validate(2, 0.5, 2.0)


@pytest.fixture(scope="module", params=["two_power", "bounded_tail"])
def model(request):
    return make_model(1.0, 3.0, REF, family=request.param)


def test_reference_closed_forms():
    nl = make_model(1.0, 3.0, REF)
    g, G, g1, g2, G1, G2 = eval_all(nl, 1.0)
    assert (g, g1, g2) == (0.0, 1.0, 1.0)
    assert G == pytest.approx(-1.0 / 6.0, abs=1e-15)
    assert G1 == pytest.approx(1.0 / 3.0, abs=1e-15)
    assert G2 == 0.5
    assert float(nl.G(2.0)) == pytest.approx(2.0 / 3.0, abs=1e-15)
    t = np.array([-2.0, -0.5, 0.5, 2.0])
    np.testing.assert_array_equal(nl.g1(t), np.sign(t) * t * t)
    np.testing.assert_array_equal(nl.g2(t), t)


def test_all_vanish_at_zero(model):
    assert all(float(v) == 0.0 for v in eval_all(model, 0.0))


@pytest.mark.parametrize(
    "m, q, match", [(1.0, 4.0, "pstar"), (1.0, 5.0, "pstar"), (1.0, 2.0, "q > p"), (1.0, 1.5, "q > p"), (0.0, 3.0, "m")]
)
def test_bad_models(m, q, match):
    with pytest.raises(DomainError, match=match):
        make_model(m, q, REF)


def test_bad_family_and_cap():
    with pytest.raises(DomainError, match="family"):
        make_model(1.0, 3.0, REF, family="cubic")
    with pytest.raises(DomainError, match="tail cap"):
        make_model(1.0, 3.0, REF, family="bounded_tail", T=1.0)


@pytest.mark.parametrize("t", [-3.7, -0.8, 0.3, 1.9, 4.5, 7.0])
def test_primitives_against_quadrature(model, t):
    for f, F in ((model.g1, model.G1), (model.g2, model.G2), (model.g, model.G)):
        want = quad(lambda x: float(f(x)), 0.0, t, epsabs=0.0, epsrel=1e-13, points=[model.T] if abs(t) > model.T else None)[0]
        assert float(F(t)) == pytest.approx(want, rel=1e-9, abs=1e-14)


def test_split_identity_and_bounds(model, rng):
    t = rng.uniform(-10.0, 10.0, 10_000)
    g, G, g1, g2, G1, G2 = eval_all(model, t)
    assert np.all(np.abs(g1 - g2 - g) <= 1e-12 * (1 + np.abs(g)))
    assert np.all(np.abs(G1 - G2 - G) <= 1e-12 * (1 + np.abs(G)))
    pos = t >= 0
    assert np.all(g1[pos] >= 0)
    assert np.all(g2[pos] >= model.m * t[pos] ** (model.p - 1) * (1 - 1e-15))
    # odd g, even G, and no sign cheating at -t
    np.testing.assert_array_equal(model.g(-t), -g)
    np.testing.assert_array_equal(model.G(-t), G)
    np.testing.assert_array_equal(model.g1(-t), -g1)


@given(t=st.floats(-0.1, 0.1).filter(lambda x: x != 0.0))
def test_small_t_limit(t):
    nl = make_model(1.0, 3.0, REF)
    lhs = abs(float(nl.g(t)) / (abs(t) ** (nl.p - 2) * t) + nl.m)
    assert lhs <= 2 * abs(t) ** (nl.q - nl.p)


def test_subcritical_growth_at_infinity(model):
    t = 10.0 ** np.arange(1, 8)
    ratio = np.abs(model.g(t)) / t ** (REF.pstar - 1)
    assert np.all(np.diff(ratio) < 0)
    assert ratio[-1] < 1e-6


def test_witness():
    nl = make_model(1.0, 3.0, REF)
    assert nl.zeta_star == pytest.approx(1.5)
    assert float(nl.G(nl.zeta_star)) == pytest.approx(0.0, abs=1e-14)
    assert nl.zeta == 2.0 and float(nl.G(nl.zeta)) > 0


@pytest.mark.parametrize("R", [4.0, 8.0])
def test_initializer_shape(R):
    nl = make_model(1.0, 3.0, REF)
    z = nl.zeta
    np.testing.assert_allclose(initializer_value(nl, R, [0.0, R, R + 0.5, R + 1.0, R + 3.0]), [z, z, z / 2, 0.0, 0.0])
    w = initial_guess(nl, REF, R)
    assert w.Rmax >= R + 1
    np.testing.assert_array_equal(w.values, initializer_value(nl, R, w.nodes))
    # between nodes the spline rounds the two kinks off
    assert float(w(R)) == pytest.approx(z, rel=0.05)
    assert abs(float(w(R + 1.0))) < 0.05 * z


def test_initializer_grows_the_grid():
    nl = make_model(1.0, 3.0, REF)
    w = initial_guess(nl, REF, 50.0, GridSpec(M=64, Rmax=12.0))
    assert w.Rmax >= 51.0 and w.values.size == 65
    with pytest.raises(DomainError):
        initial_guess(nl, REF, 0.0)


def test_initializer_has_positive_potential():
    nl = make_model(1.0, 3.0, REF)
    assert potential_value(initial_guess(nl, REF, 8.0), nl, REF) > 0


def test_initializer_potential_grows_like_the_area():
    nl = make_model(1.0, 3.0, REF)
    grid = GridSpec(M=1024, Rmax=40.0)
    b = {R: potential_value(initial_guess(nl, REF, R, grid), nl, REF) for R in (8.0, 16.0, 32.0)}
    for R in (8.0, 16.0):
        assert b[2 * R] / b[R] == pytest.approx(4.0, rel=0.15)
    # the bulk term wins: G(zeta) pi R^2 up to an O(R) ring
    assert b[32.0] / (float(nl.G(nl.zeta)) * math.pi * 32.0**2) == pytest.approx(1.0, rel=0.1)
