"""Closed-form sanity checks, one small group per module, run by ``fracp selftest``.

Each check is cheap (a small kernel at most) and returns nothing; failures
raise :class:`AssertionError` or propagate the library error.
"""

from __future__ import annotations

import math
import tempfile
import traceback
from pathlib import Path

import numpy as np

from .energy import gagliardo_energy, gagliardo_first_variation, potential_energy, potential_first_variation
from .errors import DomainError, ParseError, SchemaError
from .identities import VectorFieldSpec, cutoff_limit_study, divergence_bracket, pohozaev_residual
from .io import load_profile, store_profile
from .kernel import AngularKernel
from .nonlinearity import eval_all, initial_guess, initializer_value, make_model
from .operator import flp_apply, integrand_symmetrized, normalization_constant
from .params import validate
from .profiles import GridSpec, PlanarGrid, RadialProfile, dilate, gaussian_bump, schwarz_symmetrize, symmetrize_radial
from .solver import project_constraint, projected_gradient, sigma_bar_of

REF = validate(2, 0.5, 2.0)
SMALL = GridSpec(M=48, Rmax=12.0)


def _close(a, b, tol=1e-12):
    assert abs(a - b) <= tol * max(1.0, abs(b)), f"{a!r} != {b!r}"


def _raises(exc, fn, *args):
    try:
        fn(*args)
    except exc:
        return
    raise AssertionError(f"{fn.__name__}{args} did not raise {exc.__name__}")


# params_grid ---------------------------------------------------------------


def check_params():
    P = validate(2, 0.5, 2)
    _close(P.pstar, 4.0)
    assert P.pointwise_ok
    assert not validate(2, 0.9, 1.5).pointwise_ok
    _raises(DomainError, validate, 2, 0.5, 5)


def check_dilation():
    u = gaussian_bump(grid=SMALL)
    assert dilate(u, 1.0) is u or np.array_equal(dilate(u, 1.0).nodes, u.nodes)
    nl = make_model(1.0, 3.0, REF)
    b = potential_energy(u, nl, REF).b_value
    _close(potential_energy(dilate(u, 2.0), nl, REF).b_value, 4.0 * b, 1e-12)


def check_symmetrization():
    u = gaussian_bump(grid=SMALL)
    v = symmetrize_radial(u, 2)
    assert np.array_equal(v.values, u.values)
    w = u.with_values(-u.values)
    assert np.all(symmetrize_radial(w, 2).values >= 0)
    n, L = 64, 4.0
    sq = PlanarGrid.from_function(lambda x, y: ((np.abs(x) < 1) & (np.abs(y) < 1)).astype(float), L, n)
    s = schwarz_symmetrize(sq)
    area = np.count_nonzero(sq.values) * sq.cell_area
    _close(math.pi * s.edges[1] ** 2, area, 1e-12)


# flp_operator --------------------------------------------------------------


def check_operator():
    _close(normalization_constant(REF), 0.125, 1e-12)
    assert normalization_constant(validate(2, 1 - 1e-9, 2.0)) < 1e-6
    grid = SMALL.nodes()
    c = RadialProfile(grid, np.full(grid.size, 3.0))
    assert flp_apply(c, 0.5, REF)[0] == 0.0
    u = gaussian_bump(grid=GridSpec(M=96, Rmax=12.0))
    v1 = flp_apply(u, 0.7, REF)[0]
    v2 = flp_apply(u.with_values(2 * u.values), 0.7, REF)[0]
    _close(v2, 2.0 * v1, 1e-10)
    lin = lambda y: float(np.dot([0.5, -0.25], y))  # noqa: E731  (dyadic data: no rounding)
    assert integrand_symmetrized(lin, [0.5, 0.25], [0.25, 0.5], REF) == 0.0
    quad = lambda y: float(np.dot(y, y))  # noqa: E731
    z = np.array([0.3, 0.4])
    _close(integrand_symmetrized(quad, [0.0, 0.0], z, REF), -2 * 0.25 * 0.5 ** (-3.0), 1e-12)


# energy --------------------------------------------------------------------


def check_energy():
    nl = make_model(1.0, 3.0, REF)
    u = gaussian_bump(grid=SMALL)
    ker = AngularKernel.build(REF, u.base_nodes)
    z = u.with_values(np.zeros_like(u.values))
    assert gagliardo_energy(z, REF, ker) == 0.0
    rep = potential_energy(z, nl, REF)
    assert rep.b_value == rep.b1_value == rep.b2_value == 0.0
    _close(gagliardo_first_variation(u, u, REF, ker), 2.0 * gagliardo_energy(u, REF, ker), 1e-12)
    assert gagliardo_first_variation(u, z, REF, ker) == 0.0
    assert potential_first_variation(u, z, nl, REF) == 0.0
    assert potential_first_variation(z, u, nl, REF) == 0.0


# bl_nonlinearity -----------------------------------------------------------


def check_nonlinearity():
    _raises(DomainError, make_model, 1.0, 4.0, REF)
    nl = make_model(1.0, 3.0, REF)
    _close(float(nl.G(2.0)), 2.0 / 3.0)
    assert nl.zeta == 2.0
    g, G, g1, g2, G1, G2 = (float(x) for x in eval_all(nl, 1.0))
    for got, want in zip((g, G, g1, g2, G1, G2), (0.0, -1 / 6, 1.0, 1.0, 1 / 3, 0.5)):
        _close(got, want, 1e-15)
    assert all(float(x) == 0.0 for x in eval_all(nl, 0.0))
    _close(float(nl.g1(-0.5)), -0.25)
    for r, want in ((4.0, 2.0), (5.0, 0.0), (4.5, 1.0)):
        _close(float(initializer_value(nl, 4.0, r)), want)
    w = initial_guess(nl, REF, 4.0)
    assert np.array_equal(w.values, initializer_value(nl, 4.0, w.nodes))


# var_solver ----------------------------------------------------------------


def check_solver_pieces():
    nl = make_model(1.0, 3.0, REF)
    w = initial_guess(nl, REF, 8.0, SMALL)
    u = project_constraint(w, nl, REF)
    assert abs(potential_energy(u, nl, REF).b_value - 1.0) <= 1e-8
    assert project_constraint(u, nl, REF) is u or abs(potential_energy(project_constraint(u, nl, REF), nl, REF).b_value - 1) < 1e-12
    v = dilate(u, 2.0)  # b = 4 = 2^N
    _close(project_constraint(v, nl, REF).scale, u.scale, 1e-12)
    J = 3.7
    sig = sigma_bar_of(J, REF)
    _close(sig ** REF.sp * REF.N / (REF.N - REF.sp), J, 1e-14)
    ker = AngularKernel.build(REF, u.base_nodes)
    _, Gb, wts = projected_gradient(u, nl, REF, ker)
    proj = Gb - (np.sum(wts * Gb * Gb) / np.sum(wts * Gb * Gb)) * Gb
    assert np.all(proj == 0.0)


# identity_checks -----------------------------------------------------------


def check_identities():
    rng = np.random.default_rng(0)
    x, y = rng.normal(size=(2, 1000, 2)) * 5
    X = VectorFieldSpec.identity()
    assert np.all(divergence_bracket(X, x, y, REF) == REF.N - REF.sp)
    Xc = VectorFieldSpec("identity_cutoff", 0.1)
    far = np.array([[30.0, 0.0]]), np.array([[0.0, -25.0]])
    assert divergence_bracket(Xc, *far, REF)[0] == 0.0
    near = divergence_bracket(Xc, np.array([[2.0, 1e-6]]), np.array([[2.0, 0.0]]), REF)[0]
    _close(near, REF.N - REF.sp, 1e-12)
    nl = make_model(1.0, 3.0, REF)
    u = gaussian_bump(grid=SMALL)
    ker = AngularKernel.build(REF, u.base_nodes)
    z = u.with_values(np.zeros_like(u.values))
    assert pohozaev_residual(z, nl, REF, ker) == 0.0
    w = initial_guess(nl, REF, 4.0, GridSpec(M=48, Rmax=6.0))
    rows = cutoff_limit_study(w, nl, REF, [0.1, 0.05])
    assert all(r.g_lambda == 0.0 for r in rows)
    _close(rows[0].lhs, rows[1].lhs, 1e-12)


# cli_reports ---------------------------------------------------------------


def check_io():
    nl = make_model(1.0, 3.0, REF)
    w = initial_guess(nl, REF, 8.0)
    with tempfile.TemporaryDirectory() as d:
        path = store_profile(w, Path(d) / "w.csv")
        back = load_profile(path)
        assert np.array_equal(back.nodes, w.nodes) and np.array_equal(back.values, w.values)
        bad = Path(d) / "bad.csv"
        bad.write_text("x,y\n0,1\n1,0\n")
        _raises(SchemaError, load_profile, bad)
        bad.write_text("r,u\n0,1\n2,0.5\n1,0\n")
        try:
            load_profile(bad)
        except ParseError as exc:
            assert exc.line == 4
        else:
            raise AssertionError("non-monotone r accepted")


CHECKS = {
    "params": check_params,
    "dilation": check_dilation,
    "symmetrization": check_symmetrization,
    "operator": check_operator,
    "energy": check_energy,
    "nonlinearity": check_nonlinearity,
    "solver": check_solver_pieces,
    "identities": check_identities,
    "io": check_io,
}


def run_selftest() -> dict:
    """Run every check; returns ``{"passed": bool, "checks": {name: "ok" | message}}``."""
    results = {}
    for name, fn in CHECKS.items():
        try:
            fn()
            results[name] = "ok"
        except Exception as exc:  # noqa: BLE001  (report every failure, keep going)
            results[name] = f"{type(exc).__name__}: {exc}\n{traceback.format_exc(limit=3)}"
    return {"passed": all(v == "ok" for v in results.values()), "checks": results}
