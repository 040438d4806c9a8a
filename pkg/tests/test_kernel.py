import math

import numpy as np
import pytest
from numpy.polynomial import Polynomial

from dkern.basis import OrthonormalBasis, generate_basis
from dkern.domains import Constant, Disc
from dkern.errors import DkernError
from dkern.kernel import (KernelEvaluator, M_mixed_partial, M_partials, M_partials_grid, build_evaluator,
                          diagonal_jets, higher_order_kernel, kernel_function_M, kn_derivative, reduced_kernel,
                          reproduce_check, zero_set_probe)
from dkern.oracle import disc_Kn, disc_Mn
from dkern.quadrature import path_build

PI = math.pi


def test_reduced_kernel_examples(disc_ke):
    assert reduced_kernel(disc_ke, 0, 0) == pytest.approx(1 / PI, abs=1e-14)
    for z in (0.5, 0.2 - 0.3j):
        assert reduced_kernel(disc_ke, z, 0, 0, 1) == pytest.approx(2 * z / PI, abs=1e-14)
    assert reduced_kernel(disc_ke, 0.5, 0.5) == pytest.approx(16 / (9 * PI), abs=1e-12)


def test_hermitian_symmetry(disc_ke, annulus_ke):
    t = np.linspace(-0.6, 0.6, 10)
    disc_pts = (t[:, None] + 1j * t[None, ::-1] * 0.9).ravel()[:10]
    ann_pts = 0.65 * np.exp(2j * PI * np.arange(10) / 10) + 0.1
    for ke, pts in ((disc_ke, disc_pts), (annulus_ke, ann_pts)):
        Z, W = np.meshgrid(pts, pts, indexing="ij")
        for j, k in ((0, 0), (1, 0), (0, 2), (1, 1)):
            a = reduced_kernel(ke, Z, W, j, k)
            b = np.conj(reduced_kernel(ke, W, Z, k, j))
            assert np.max(np.abs(a - b)) < 1e-12


def test_diagonal_jets(disc_ke):
    jets = diagonal_jets(disc_ke, 0, 1)
    assert np.allclose(jets.matrix, [[1 / PI, 0], [0, 2 / PI]], atol=1e-14)
    assert jets.determinants[0] == pytest.approx(1 / PI)
    assert jets.determinants[1] == pytest.approx(2 / PI**2)
    jets = diagonal_jets(disc_ke, 0.5, 3)
    assert jets.determinants[0] == pytest.approx(16 / (9 * PI), rel=1e-12)
    assert np.allclose(jets.matrix, jets.matrix.conj().T)
    assert all(J > 0 for J in jets.determinants)


def test_zero_set_probe(disc_ke, annulus_ke):
    for r in (0, 0.3, 0.6, 0.9):
        for t in (0, 1, 2.5):
            assert not zero_set_probe(disc_ke, r * np.exp(1j * t))
    assert not zero_set_probe(annulus_ke, 0.5)
    b = generate_basis(Disc(0j, 1.0), 3)
    dead = KernelEvaluator(OrthonormalBasis(b, np.zeros((4, 4))), Constant(1.0), Disc(0j, 1.0))
    assert zero_set_probe(dead, 0.2)


def test_diagonal_positivity(annulus_ke, weighted_disc_ke):
    for ke, pts in ((annulus_ke, [0.35, 0.5j, -0.9]), (weighted_disc_ke, [0, 0.5, -0.7j])):
        for p in pts:
            assert reduced_kernel(ke, p, p).real > 0
            assert abs(reduced_kernel(ke, p, p).imag) < 1e-14 * reduced_kernel(ke, p, p).real


def test_higher_order_kernel_examples(disc_ke):
    assert higher_order_kernel(disc_ke, 0.5, 0, 2) == pytest.approx(1 / PI, abs=1e-13)
    assert abs(higher_order_kernel(disc_ke, 0, 0, 2)) < 1e-15
    z = 0.3 + 0.1j
    assert higher_order_kernel(disc_ke, z, 0.2, 1) == reduced_kernel(disc_ke, z, 0.2)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_higher_order_kernel_matches_disc_closed_form(disc_ke, n):
    pts = [0.0, 0.3, -0.2 + 0.4j, 0.5j]
    for z in pts:
        for w in pts:
            assert higher_order_kernel(disc_ke, z, w, n) == pytest.approx(disc_Kn(z, w, n), abs=1e-9)


def test_frame_matches_determinant(annulus_ke):
    z = np.array([0.5, -0.4 + 0.3j, 0.8j])
    for n in (1, 2, 3):
        assert np.allclose(kn_derivative(annulus_ke, z, 0.6j, n), higher_order_kernel(annulus_ke, z, 0.6j, n),
                           atol=1e-10)


def test_near_zero_set_guard():
    ke = build_evaluator({"disc": {"radius": 1}}, {"constant": 1}, exponents=range(1, 8))
    assert zero_set_probe(ke, 0)
    with pytest.raises(DkernError) as e:
        higher_order_kernel(ke, 0.5, 0, 2)
    assert e.value.code == "NEAR_ZERO_SET"
    with pytest.raises(DkernError) as e:
        kernel_function_M(ke, 0.5, 0, 2)
    assert e.value.code == "NEAR_ZERO_SET"


def test_kernel_function_examples(disc_ke):
    assert kernel_function_M(disc_ke, 0.5, 0, 1).value == pytest.approx(0.5 / PI, abs=1e-14)
    assert kernel_function_M(disc_ke, 0.5, 0, 2).value == pytest.approx(0.25 / PI, abs=1e-14)
    for n in (1, 2, 3):
        ev = kernel_function_M(disc_ke, 0.3 - 0.2j, 0.3 - 0.2j, n)
        assert ev.value == 0
        assert ev.path.vertices[0] == 0.3 - 0.2j


def test_primitive_consistency(annulus_ke, weighted_disc_ke):
    h = 1e-4
    for ke, z, w in ((annulus_ke, 0.5 + 0.2j, -0.6j), (weighted_disc_ke, 0.3 + 0.1j, -0.2)):
        for n in (1, 2):
            fd = (kernel_function_M(ke, z + h, w, n).value - kernel_function_M(ke, z - h, w, n).value) / (2 * h)
            assert abs(fd - higher_order_kernel(ke, z, w, n)) < 1e-6


def test_path_independence(annulus_ke):
    d = annulus_ke.domain
    z, w = 0.6 + 0.1j, -0.6
    for n in (1, 2):
        a = kernel_function_M(annulus_ke, z, w, n, path=path_build(d, w, z, [-0.5 + 0.5j, 0.5 + 0.5j])).value
        b = kernel_function_M(annulus_ke, z, w, n, path=path_build(d, w, z, [-0.5 - 0.5j, 0.5 - 0.5j])).value
        assert abs(a - b) <= 4 * annulus_ke.path_tol


def test_mismatched_path_rejected(disc_ke):
    with pytest.raises(DkernError) as e:
        kernel_function_M(disc_ke, 0.5, 0, 1, path=path_build(disc_ke.domain, 0.1, 0.5))
    assert e.value.code == "NO_PATH"


def test_small_step_slope(annulus_ke):
    w = 0.5 + 0.1j
    eps = 1e-6
    m = kernel_function_M(annulus_ke, w + eps, w, 1).value
    assert abs(m / eps - reduced_kernel(annulus_ke, w, w)) < 1e-4 * abs(reduced_kernel(annulus_ke, w, w))


def test_mixed_partial_witnesses(disc_ke):
    for z in (0.5, 0.3 - 0.4j):
        assert M_mixed_partial(disc_ke, z, 0, 1, 0, 1) == pytest.approx(z**2 / PI, abs=1e-12)
        assert M_mixed_partial(disc_ke, z, 0, 1, 1, 0) == pytest.approx(-1 / PI, abs=1e-12)
    assert M_mixed_partial(disc_ke, 0.4, 0.1j, 2, 0, 0) == kernel_function_M(disc_ke, 0.4, 0.1j, 2).value


def _fd_partial(ke, z, w, n, r, s, h=1e-3):
    def M(wz):
        return kernel_function_M(ke, z, wz, n).value

    def dx(f, p):
        return (f(p + h) - f(p - h)) / (2 * h)

    def dy(f, p):
        return (f(p + 1j * h) - f(p - 1j * h)) / (2 * h)

    # d/dzeta = (d/dx - i d/dy)/2, d/dconj(zeta) = (d/dx + i d/dy)/2
    if (r, s) == (1, 0):
        return 0.5 * (dx(M, w) - 1j * dy(M, w))
    if (r, s) == (0, 1):
        return 0.5 * (dx(M, w) + 1j * dy(M, w))
    lap = (M(w + h) + M(w - h) + M(w + 1j * h) + M(w - 1j * h) - 4 * M(w)) / h**2
    return lap / 4


@pytest.mark.parametrize("r,s", [(1, 0), (0, 1), (1, 1)])
def test_mixed_partials_match_finite_differences(annulus_ke, weighted_disc_ke, r, s):
    for ke, z, w in ((weighted_disc_ke, 0.4 - 0.1j, 0.1 + 0.2j), (annulus_ke, 0.5 + 0.3j, 0.6)):
        for n in (1, 2):
            exact = M_mixed_partial(ke, z, w, n, r, s)
            assert abs(exact - _fd_partial(ke, z, w, n, r, s)) < 1e-4 * max(1, abs(exact))


def test_partials_grid_matches_path_route(annulus_ke):
    zs = np.array([0.5 + 0.3j, -0.7, 0.4j])
    orders = [(0, 0), (1, 0), (0, 1), (1, 1), (2, 0)]
    got = M_partials_grid(annulus_ke, zs, 0.6, 2, orders)
    for i, z in enumerate(zs):
        ref = M_partials(annulus_ke, z, 0.6, 2, orders)
        for c, o in enumerate(orders):
            assert abs(got[i, c] - ref[o]) < 1e-9 * max(1, abs(ref[o]))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_disc_kernel_function_closed_form(disc_ke, n):
    for z in (0.5, 0.2 - 0.3j):
        for w in (0, 0.4j, -0.3 + 0.1j):
            assert kernel_function_M(disc_ke, z, w, n).value == pytest.approx(disc_Mn(z, w, n), abs=1e-9)


def test_reproduce_check_examples(disc_ke):
    assert reproduce_check(disc_ke, Polynomial([0, 0, 1]), 0, 2) < 1e-6
    assert reproduce_check(disc_ke, Polynomial([0, 0, 0, 1]), 0, 2) < 1e-6
    with pytest.raises(DkernError) as e:
        reproduce_check(disc_ke, Polynomial([0, 1]), 0, 2)
    assert e.value.code == "BAD_TEST_FUNCTION"


def test_reproduce_check_weighted_and_annulus(weighted_disc_ke, annulus_ke):
    for ke, w in ((weighted_disc_ke, 0.3 + 0.2j), (annulus_ke, 0.5 - 0.2j)):
        for n in (1, 2):
            for m in (n, n + 1, n + 2):
                f = Polynomial([-w, 1]) ** m
                assert reproduce_check(ke, f, w, n) < 1e-6


def test_invalid_orders(disc_ke):
    with pytest.raises(DkernError):
        higher_order_kernel(disc_ke, 0.1, 0, 0)
    with pytest.raises(DkernError):
        M_mixed_partial(disc_ke, 0.1, 0, 1, -1, 0)


@pytest.mark.parametrize("n", [2, 3])
def test_zeta_partials_at_origin_match_closed_form(disc_ke, n):
    # at the origin the minors have a singular constant part but nonzero increments
    from dkern.oracle import scaled_disc_Mn_dzeta, scaled_disc_Mn_dzetabar
    z = 0.45 - 0.1j
    got = M_partials(disc_ke, z, 0, n, [(1, 0), (0, 1)])
    assert abs(got[(1, 0)] - scaled_disc_Mn_dzeta(1.0, z, 0j, n)) < 1e-12
    assert abs(got[(0, 1)] - scaled_disc_Mn_dzetabar(1.0, z, 0j, n)) < 1e-12


def test_series_determinant_with_singular_constant_part():
    from dkern import _series as ser
    eps = np.zeros((2, 1), dtype=complex)
    eps[1, 0] = 1
    one = ser.const(1.0, (2, 1))
    # det [[eps, 1], [1, eps]] = eps^2 - 1 and det [[eps, 0], [0, 1]] = eps
    assert np.allclose(ser.det([[eps, one], [one, eps]]), -one)
    assert np.allclose(ser.det([[eps, 0 * one], [0 * one, one]]), eps)
