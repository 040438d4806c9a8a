import math

import numpy as np
import pytest

from dkern.basis import (build_orthonormal_basis, eval_basis_derivatives, generate_basis, gram_matrix,
                         measured_gram, orthonormalize)
from dkern.domains import Annulus, Constant, Disc, DiscPower, RadialPower, Sampled
from dkern.errors import DkernError
from dkern.quadrature import Path, area_quadrature, integrate_path

UNIT = Disc(0j, 1.0)
ANN = Annulus(0j, 0.3, 1.0)


def test_generate_disc_basis():
    b = generate_basis(UNIT, 3)
    assert b.exponents == (0, 1, 2, 3)
    assert b.kind == "monomials"


def test_generate_annulus_basis_skips_inverse():
    b = generate_basis(ANN, 2)
    assert b.exponents == (-2, 0, 1, 2)
    assert b.kind == "laurent"


@pytest.mark.parametrize("order", [0, -1])
def test_invalid_order(order):
    with pytest.raises(DkernError) as e:
        generate_basis(UNIT, order)
    assert e.value.code == "INVALID_ORDER"


def test_gram_disc_two_elements():
    b = generate_basis(UNIT, 1)
    rule = area_quadrature(UNIT)
    G = gram_matrix(b, Constant(1.0), rule)
    assert np.allclose(G, np.diag([math.pi, math.pi / 2]), atol=1e-12)
    assert abs(G[0, 1]) < 1e-14


def test_gram_radial_shortcut_matches_assembly():
    rule = area_quadrature(UNIT)
    b = generate_basis(UNIT, 12)
    for w in (Constant(2.0), RadialPower(1.0), DiscPower(1.5)):
        fast = gram_matrix(b, w, rule, domain=UNIT)
        full = gram_matrix(b, w, rule)
        assert np.allclose(fast, full, atol=1e-12)
        assert np.max(np.abs(full - np.diag(np.diag(full)))) < 1e-12


def test_gram_annulus_norms():
    b = generate_basis(ANN, 4)
    G = gram_matrix(b, Constant(1.0), area_quadrature(ANN))
    k = np.array(b.exponents)
    exact = math.pi * (1 - 0.3 ** (2 * k + 2)) / (k + 1)
    assert np.allclose(np.diag(G).real, exact, rtol=1e-12)


def test_orthonormalize_examples():
    b = generate_basis(UNIT, 1)
    ob = orthonormalize(b, np.diag([math.pi, math.pi / 2]))
    assert np.allclose(ob.coefficients, np.diag([1 / math.sqrt(math.pi), math.sqrt(2 / math.pi)]))
    ob = orthonormalize(b, np.eye(2))
    assert np.allclose(ob.coefficients, np.eye(2))


def test_orthonormalize_rejects_indefinite():
    b = generate_basis(UNIT, 1)
    G = np.array([[1.0, 0.0], [0.0, -1e-3]])
    with pytest.raises(DkernError) as e:
        orthonormalize(b, G)
    assert e.value.code == "ILL_CONDITIONED"
    G = np.array([[1.0, 1.0 - 1e-3], [1.0 - 1e-3, 1.0]]) - 2e-3 * np.eye(2)
    with pytest.raises(DkernError) as e:
        orthonormalize(b, G)
    assert e.value.code == "ILL_CONDITIONED"


def test_orthonormalize_jitter_recovers_roundoff_indefiniteness():
    b = generate_basis(UNIT, 1)
    G = np.array([[1.0, 1.0], [1.0, 1.0 - 1e-15]])
    try:
        ob = orthonormalize(b, G)
    except DkernError as e:
        assert e.code == "ILL_CONDITIONED"
    else:
        assert ob.jitter > 0


def test_coefficients_lower_triangular_positive_diagonal():
    rule = area_quadrature(UNIT, 40, 80)
    b = generate_basis(UNIT, 6)
    # a non-radial weight gives a full Gram matrix
    w = Sampled(-1 - 1j, 0.5, np.arange(1, 17, dtype=float).reshape(4, 4))
    ob = orthonormalize(b, gram_matrix(b, w, rule))
    C = ob.coefficients
    assert np.allclose(np.triu(C, 1), 0)
    assert np.all(np.diag(C).real > 0) and np.allclose(np.diag(C).imag, 0)


@pytest.mark.parametrize("domain,weight", [
    (UNIT, Constant(1.0)),
    (UNIT, RadialPower(1.0)),
    (UNIT, DiscPower(1.0)),
    (ANN, Constant(1.0)),
])
def test_remeasured_orthonormality(domain, weight):
    ob, rule = build_orthonormal_basis(domain, weight)
    I = np.eye(len(ob))
    assert np.max(np.abs(measured_gram(ob, weight, rule) - I)) < 1e-8
    fine = area_quadrature(domain, 160, 320)
    assert np.max(np.abs(measured_gram(ob, weight, fine) - I)) < 1e-6


def test_eval_basis_derivatives_examples():
    ob, _ = build_orthonormal_basis(UNIT, Constant(1.0), 5)
    z = 0.3 - 0.2j
    assert eval_basis_derivatives(ob, z, 0)[0] == pytest.approx(1 / math.sqrt(math.pi))
    assert eval_basis_derivatives(ob, z, 1)[0] == 0
    assert eval_basis_derivatives(ob, z, 1)[1] == pytest.approx(math.sqrt(2 / math.pi))
    with pytest.raises(DkernError):
        eval_basis_derivatives(ob, z, -1)


@pytest.mark.parametrize("domain", [UNIT, ANN])
def test_derivative_consistency(domain):
    ob, _ = build_orthonormal_basis(domain, Constant(1.0), 10)
    h = 1e-4
    for z in (0.5, 0.4 + 0.3j, -0.2 + 0.6j):
        for j in range(3):
            fd = (eval_basis_derivatives(ob, z + h, j) - eval_basis_derivatives(ob, z - h, j)) / (2 * h)
            exact = eval_basis_derivatives(ob, z, j + 1)
            assert np.max(np.abs(fd - exact)) < 1e-6 * max(1.0, np.max(np.abs(exact)))


def test_primitives_differentiate_to_basis():
    ob, _ = build_orthonormal_basis(ANN, Constant(1.0), 8)
    z, h = 0.5 + 0.2j, 1e-5
    fd = (ob.primitives(z + h) - ob.primitives(z - h)) / (2 * h)
    assert np.max(np.abs(fd - ob.derivatives(z))) < 1e-5 * np.max(np.abs(ob.derivatives(z)))


def test_closed_loop_integral_vanishes():
    ob, _ = build_orthonormal_basis(ANN, Constant(1.0), 8)
    loop = Path((0.6, 0.6j, -0.6, -0.6j, 0.6), ANN)
    vals = integrate_path(loop, lambda x: ob.derivatives(x))
    assert np.max(np.abs(vals)) < 1e-10


def test_full_bergman_family_needs_explicit_exponents():
    b = generate_basis(ANN, 0, exponents=range(-3, 4))
    assert -1 in b.exponents and not b.reduced
    with pytest.raises(DkernError):
        generate_basis(UNIT, 0, exponents=[-2, 0, 1])
