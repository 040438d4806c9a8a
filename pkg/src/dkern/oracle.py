"""Closed-form ground truth for the unit disc, scaled discs and annuli, plus
a brute-force finite-dimensional solver for ``M_n`` that shares nothing with
the determinant route except the Gram matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .basis import generate_basis, gram_matrix
from .domains import Domain, Weight, make_domain, make_weight
from .errors import DkernError
from .quadrature import QuadratureRule, area_quadrature, integrate_area

ANNULUS_KMAX = 60
ANNULUS_TAIL_TARGET = 1e-12


def _check_disc(*pts, radius: float = 1.0):
    for p in pts:
        if np.any(np.abs(p) >= radius):
            raise DkernError("OUT_OF_DISC", f"point outside the disc of radius {radius}")


def mobius(zeta, z):
    """Involutive disc automorphism ``(zeta - z) / (1 - z conj(zeta))``."""
    _check_disc(zeta, z)
    return (zeta - z) / (1 - z * np.conj(zeta))


def mobius_derivative(zeta, z):
    _check_disc(zeta, z)
    return (np.abs(zeta) ** 2 - 1) / (1 - np.conj(zeta) * z) ** 2


def disc_Kn(xi, zeta, n: int):
    """n-th order reduced Bergman kernel of the unit disc (weight 1)."""
    phi = mobius(zeta, xi)
    dphi = mobius_derivative(zeta, xi)
    d0 = mobius_derivative(zeta, 0j)
    return math.factorial(n) / math.pi * phi ** (n - 1) * dphi / np.conj(d0**n)


def disc_Mn(xi, zeta, n: int):
    _check_disc(xi, zeta)
    return (math.factorial(n - 1) / math.pi * (xi - zeta) ** n
            / ((1 - np.conj(zeta) * xi) ** n * (1 - np.abs(zeta) ** 2) ** n))


def scaled_disc_Mn(rho: float, xi, zeta, n: int):
    """``M_n`` of the disc ``|z| < rho`` (weight 1), by rescaling the unit disc."""
    _check_disc(xi, zeta, radius=rho)
    r2 = rho * rho
    return (math.factorial(n - 1) / math.pi * r2**n * (xi - zeta) ** n
            / ((r2 - np.conj(zeta) * xi) ** n * (r2 - np.abs(zeta) ** 2) ** n))


def scaled_disc_Kn(rho: float, xi, zeta, n: int):
    """``d/dxi`` of :func:`scaled_disc_Mn`."""
    _check_disc(xi, zeta, radius=rho)
    r2 = rho * rho
    A = r2 - np.conj(zeta) * xi
    B = r2 - np.abs(zeta) ** 2
    return (math.factorial(n) / math.pi * r2**n * (xi - zeta) ** (n - 1)
            / (A ** (n + 1) * B ** (n - 1)))


def scaled_disc_Mn_dzeta(rho: float, xi, zeta, n: int):
    """``dM_n/dzeta`` of the rho-disc, treating zeta and conj(zeta) as independent."""
    _check_disc(xi, zeta, radius=rho)
    r2 = rho * rho
    zb = np.conj(zeta)
    A = r2 - zb * xi
    B = r2 - zeta * zb
    c = math.factorial(n - 1) / math.pi * r2**n
    return c * (-n * (xi - zeta) ** (n - 1) * A**-n * B**-n + n * zb * (xi - zeta) ** n * A**-n * B ** (-n - 1))


def scaled_disc_Mn_dzetabar(rho: float, xi, zeta, n: int):
    _check_disc(xi, zeta, radius=rho)
    r2 = rho * rho
    zb = np.conj(zeta)
    A = r2 - zb * xi
    B = r2 - zeta * zb
    c = math.factorial(n - 1) / math.pi * r2**n
    return c * (xi - zeta) ** n * (n * xi * A ** (-n - 1) * B**-n + n * zeta * A**-n * B ** (-n - 1))


def disc_moment_identity(g, n: int, rule: QuadratureRule | None = None) -> tuple[complex, complex]:
    """``(g^{(n)}(0), n!/pi * int_D g'(xi) conj(xi)^{n-1} dA)`` for a polynomial
    ``g`` vanishing to order n at the origin."""
    for k in range(n):
        gk = g.deriv(k)(0j) if k else g(0j)
        if abs(gk) > 1e-8:
            raise DkernError("BAD_TEST_FUNCTION", f"g^({k})(0) = {gk} does not vanish", k=k)
    rule = rule or area_quadrature(make_domain({"disc": {"radius": 1}}))
    gp = g.deriv(1)
    rhs = math.factorial(n) / math.pi * integrate_area(rule, lambda x: gp(x) * np.conj(x) ** (n - 1))
    return complex(g.deriv(n)(0j)), rhs


# ---------------------------------------------------------------------------
# Annulus series


def _annulus_terms(r: float, z, zeta, kmin: int, kmax: int):
    w = np.asarray(z)[..., None] * np.conj(np.asarray(zeta))[..., None]
    k = np.arange(0, kmax + 1)
    pos = (k + 1) * w**k / (math.pi * (1 - r ** (2 * k + 2)))
    # k = -m, m >= 2, rewritten so that nothing overflows for large m
    m = np.arange(2, -kmin + 1)
    neg = (m - 1) * (r * r / w) ** m / (math.pi * r * r * (1 - r ** (2 * m - 2)))
    return np.concatenate([neg, pos], axis=-1)


def annulus_series_tail(r: float, z, zeta, kmax: int) -> float:
    """Bound on the terms of :func:`annulus_reduced_kernel` with ``|k| > kmax``."""
    q = float(np.max(np.abs(z) * np.abs(zeta)))
    p = float(np.max(r * r / (np.abs(z) * np.abs(zeta))))
    K = kmax + 1

    def geo(x):
        # sum_{k >= K} (k + 1) x^k
        return x**K * ((K + 1) / (1 - x) + x / (1 - x) ** 2)

    pos = geo(q) / (math.pi * (1 - r ** (2 * K + 2)))
    # k = -m, m >= K: |term| = (m-1) |z zeta|^{-m} / (pi (r^{2-2m} - 1)) <= (m-1) p^m / (pi r^2 (1 - r^{2K-2}))
    neg = geo(p) / (math.pi * r * r * (1 - r ** (2 * K - 2)))
    return float(pos + neg)


def annulus_reduced_kernel(r: float, z, zeta, kmax: int = ANNULUS_KMAX):
    """Reduced Bergman kernel of ``{r < |z| < 1}`` from its Laurent series.

    The series is summed over ``|k| <= kmax`` (k != -1); ``kmax`` is raised
    until the tail bound drops below 1e-12.
    """
    if not (0 < r < 1):
        raise DkernError("OUT_OF_ANNULUS", f"inner radius must be in (0, 1), got {r}")
    for p in (z, zeta):
        a = np.abs(p)
        if np.any((a <= r) | (a >= 1)):
            raise DkernError("OUT_OF_ANNULUS", "point outside the annulus")
    while annulus_series_tail(r, z, zeta, kmax) > ANNULUS_TAIL_TARGET and kmax < 20000:
        kmax *= 2
    out = np.sum(_annulus_terms(r, z, zeta, -kmax, kmax), axis=-1)
    return complex(out) if np.ndim(out) == 0 else out


def annulus_reduced_kernel_bounded(r: float, z, zeta, kmax: int = ANNULUS_KMAX) -> tuple[complex, float]:
    """:func:`annulus_reduced_kernel` together with the tail bound of the truncation used."""
    value = annulus_reduced_kernel(r, z, zeta, kmax)
    while annulus_series_tail(r, z, zeta, kmax) > ANNULUS_TAIL_TARGET and kmax < 20000:
        kmax *= 2
    return value, annulus_series_tail(r, z, zeta, kmax)


def annulus_bergman_gap(r: float, zeta) -> float:
    """``K(zeta, zeta) - K_reduced(zeta, zeta)``: the omitted ``z^{-1}`` term."""
    return float(np.abs(zeta) ** -2 / (2 * math.pi * math.log(1 / r)))


# ---------------------------------------------------------------------------
# Brute-force Riesz representer


@dataclass(frozen=True, eq=False)
class BruteForceMn:
    """``M_n(., zeta)`` as an explicit combination of basis primitives."""

    zeta: complex
    n: int
    basis: object
    coefficients: np.ndarray = field(repr=False)

    def __call__(self, z):
        b = self.basis
        out = (b.primitives(np.asarray(z, dtype=complex)) - b.primitives(self.zeta)) @ self.coefficients
        return complex(out) if np.ndim(out) == 0 else out

    def derivative(self, z):
        out = self.basis.derivatives(np.asarray(z, dtype=complex), 0) @ self.coefficients
        return complex(out) if np.ndim(out) == 0 else out


def brute_force_Mn(d, w, zeta: complex, n: int, order: int, rule: QuadratureRule | None = None,
                   radial: int = 80, angular: int = 160) -> BruteForceMn:
    """Solve the Riesz problem for ``f -> f^{(n)}(zeta)`` directly.

    Trial functions are ``F(z) = sum_k a_k (G_k(z) - G_k(zeta))`` with
    ``G_k`` the basis primitives, so ``F(zeta) = 0`` and ``F' = sum a_k g_k``.
    The constraints ``F^{(m)}(zeta) = 0`` (``1 <= m < n``) are eliminated by
    projecting onto the null space of the constraint matrix (from a QR
    factorisation), and the normal equations
    ``<F, M> = F^{(n)}(zeta)`` are solved on that subspace.
    """
    if n < 1 or order < n + 2:
        raise DkernError("INVALID_ORDER", f"need order >= n + 2, got order={order}, n={n}")
    d = make_domain(d)
    w = make_weight(w)
    zeta = complex(zeta)
    b = generate_basis(d, order)
    rule = rule or area_quadrature(d, radial, angular)
    G = gram_matrix(b, w, rule, domain=d, radial=radial)
    # unit-diagonal scaling keeps annulus Laurent families well conditioned
    dg = G.diagonal().real
    if np.any(~(dg > 0)):
        raise DkernError("ILL_CONDITIONED", "Gram matrix has a nonpositive diagonal")
    s = 1.0 / np.sqrt(dg)
    Gs = s[:, None] * G * s[None, :]
    N = len(b)
    # F^{(m)}(zeta) = sum_k a_k g_k^{(m-1)}(zeta)
    A = np.array([b.derivatives(zeta, m - 1) * s for m in range(1, n)]).reshape(n - 1, N)
    v = b.derivatives(zeta, n - 1) * s
    if n > 1:
        Q, R = np.linalg.qr(A.conj().T, mode="complete")
        diagR = np.abs(np.diag(R))
        if diagR.min() <= 1e-12 * max(diagR.max(), 1e-300):
            raise DkernError("CONSTRAINT_RANK", "vanishing constraints are degenerate at this order")
        Z = Q[:, n - 1:]  # orthonormal basis of null(A)
    else:
        Z = np.eye(N, dtype=complex)
    # <F_a, F_c> = a^T Gs conj(c) with F^{(n)}(zeta) = a^T v; c = Z y
    H = Z.conj().T @ Gs.T @ Z
    rhs = Z.conj().T @ np.conj(v)
    H = 0.5 * (H + H.conj().T)
    try:
        cf = linalg.cho_factor(H, lower=True)
    except linalg.LinAlgError:
        raise DkernError("ILL_CONDITIONED", "normal equations are not positive definite") from None
    ev = np.linalg.eigvalsh(H)
    if ev[0] <= 1e-13 * ev[-1]:
        raise DkernError("ILL_CONDITIONED", "normal equations are ill conditioned; lower the order")
    y = linalg.cho_solve(cf, rhs)
    c = (Z @ y) * s
    c.setflags(write=False)
    return BruteForceMn(zeta, n, b, c)
