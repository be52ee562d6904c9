import math

import numpy as np
import pytest
from scipy.integrate import quad

from fracp import AngularKernel, GridSpec, KernelMismatch, ParseError, validate
from fracp.kernel import angular_kernel, load_kernel, save_kernel, tail_integral, radial_kernel

from conftest import SMALL_GRID


def sphere_quadrature(N, mu, r, rho):
    # ∫_{S^{N-1}} |r e1 - rho w|^{-2mu} = |S^{N-2}| ∫_0^pi (...) sin^{N-2}
    lower = 2.0 if N == 2 else 2 * math.pi ** ((N - 1) / 2) / math.gamma((N - 1) / 2)

    def f(th):
        return (r * r + rho * rho - 2 * r * rho * math.cos(th)) ** (-mu) * math.sin(th) ** (N - 2)

    return lower * quad(f, 0.0, math.pi, epsabs=0.0, epsrel=1e-12, limit=200, points=[0.0])[0]


@pytest.mark.parametrize("N", [2, 3])
@pytest.mark.parametrize("sp", [0.5, 1.0, 1.7])
@pytest.mark.parametrize("r, rho", [(1.0, 0.5), (0.3, 2.0), (5.0, 4.5), (1.0, 0.999)])
def test_closed_form_against_angular_quadrature(N, sp, r, rho):
    mu = 0.5 * (N + sp)
    assert angular_kernel(N, mu, r, rho) == pytest.approx(sphere_quadrature(N, mu, r, rho), rel=1e-9)


def test_closed_form_is_symmetric_positive_and_blows_up(rng):
    r, rho = rng.uniform(0.01, 10.0, size=(2, 200))
    K = angular_kernel(2, 1.5, r, rho)
    np.testing.assert_allclose(K, angular_kernel(2, 1.5, rho, r), rtol=1e-13)
    assert np.all(K > 0)
    gaps = [1e-1, 1e-2, 1e-3, 1e-4]
    vals = angular_kernel(2, 1.5, 1.0, 1.0 + np.array(gaps))
    assert np.all(np.diff(vals) > 0)


def test_kernel_matrix_invariants(small_kernel):
    K = small_kernel.K
    band = ~np.isfinite(K)
    assert np.all(np.isinf(K[band]))
    # band is exactly the diagonal and adjacent cells
    cell = small_kernel.rule.cell
    np.testing.assert_array_equal(band, np.abs(cell[:, None] - cell[None, :]) < 2)
    fin = K[~band]
    assert np.all(fin > 0)
    np.testing.assert_allclose(K[~band], K.T[~band], rtol=1e-12)


def test_kernel_entries_match_the_closed_form(small_kernel):
    K = small_kernel.K
    pts = small_kernel.rule.pts
    i, j = 3, 40
    assert K[i, j] == pytest.approx(float(angular_kernel(2, 1.5, pts[i], pts[j])), rel=1e-12)


def test_tail_integral_against_quad():
    N, sp, Rmax = 2, 1.0, 12.0
    k = radial_kernel(N, sp)
    r = np.array([0.5, 6.0, 11.5])
    got = tail_integral(r, Rmax, k, N, sp)
    for ri, gi in zip(r, got):
        want = quad(lambda rho: float(k(ri, rho)), Rmax, np.inf, epsabs=0.0, epsrel=1e-11, limit=400)[0]
        assert gi == pytest.approx(want, rel=1e-7)


def test_check_rejects_mismatch(small_kernel, ref_params):
    nodes = SMALL_GRID.nodes()
    small_kernel.check(ref_params, nodes)
    with pytest.raises(KernelMismatch, match="built for"):
        small_kernel.check(validate(2, 0.5, 3.0), nodes)
    with pytest.raises(KernelMismatch, match="node set"):
        small_kernel.check(ref_params, GridSpec(M=64, Rmax=13.0).nodes())


def test_save_and_load_round_trip(tmp_path, small_kernel, ref_params):
    path = save_kernel(small_kernel, tmp_path / "k.bin")
    back = load_kernel(path, ref_params, SMALL_GRID.nodes())
    assert back.digest == small_kernel.digest
    for name in ("pts", "qw", "W", "near_a", "near_b", "near_w", "tail"):
        np.testing.assert_array_equal(getattr(back.rule, name), getattr(small_kernel.rule, name))
    with pytest.raises(KernelMismatch):
        load_kernel(path, validate(2, 0.4, 2.0), SMALL_GRID.nodes())


def test_cache_dir_reuses_the_sidecar(tmp_path, ref_params):
    nodes = GridSpec(M=16, Rmax=6.0).nodes()
    k1 = AngularKernel.build(ref_params, nodes, cache_dir=tmp_path)
    files = list(tmp_path.iterdir())
    assert len(files) == 1
    k2 = AngularKernel.build(ref_params, nodes, cache_dir=tmp_path)
    np.testing.assert_array_equal(k1.rule.W, k2.rule.W)


def test_corrupt_sidecar(tmp_path, ref_params):
    bad = tmp_path / "junk.bin"
    bad.write_bytes(b"not a kernel\n")
    with pytest.raises(ParseError):
        load_kernel(bad, ref_params, SMALL_GRID.nodes())
