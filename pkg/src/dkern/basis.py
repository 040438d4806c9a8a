"""Primitive-admitting holomorphic bases, weighted Gram matrices and whitening.

Every basis element is a scaled power ``((z - c)/s)**k`` with ``k != -1``,
so each one has the closed-form primitive ``s/(k+1) * ((z - c)/s)**(k+1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, special

from .domains import Annulus, Constant, Disc, DiscPower, Domain, RadialPower, Weight, is_radial
from .errors import DkernError
from .quadrature import QuadratureRule, area_quadrature

DEFAULT_DISC_ORDER = 40
DEFAULT_ANNULUS_ORDER = 24
RCOND_MIN = 1e-13
JITTER_REL = 1e-14


@dataclass(frozen=True)
class BasisSet:
    kind: str  # "monomials" | "laurent"
    exponents: tuple[int, ...]
    center: complex = 0j
    scale: float = 1.0
    reduced: bool = True  # False only for full-Bergman comparisons

    def __post_init__(self):
        if self.reduced and -1 in self.exponents:
            raise DkernError("INVALID_ORDER", "exponent -1 has no primitive and is excluded")
        if len(set(self.exponents)) != len(self.exponents):
            raise DkernError("INVALID_ORDER", "duplicate exponents in basis")

    def __len__(self) -> int:
        return len(self.exponents)

    def derivatives(self, z, j: int = 0) -> np.ndarray:
        """Raw element derivatives ``g_k^{(j)}(z)``, shape ``z.shape + (len(self),)``."""
        z = np.asarray(z, dtype=complex)
        u = (z - self.center) / self.scale
        k = np.asarray(self.exponents)
        fall = np.ones(len(k))
        for i in range(j):
            fall = fall * (k - i)
        live = fall != 0
        vals = np.zeros(u.shape + (len(k),), dtype=complex)
        if live.any():
            vals[..., live] = _powers(u, k[live] - j) * fall[live]
        return vals / self.scale**j

    def primitives(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        u = (z - self.center) / self.scale
        k = np.asarray(self.exponents)
        return self.scale * _powers(u, k + 1) / (k + 1)


def _powers(u: np.ndarray, exps: np.ndarray) -> np.ndarray:
    """``u[..., None] ** exps`` by running products over the exponent range."""
    lo, hi = int(exps.min()), int(exps.max())
    span = hi - lo + 1
    out = np.empty(u.shape + (span,), dtype=complex)
    # negative powers only arise on annuli, where u != 0
    with np.errstate(divide="ignore", invalid="ignore"):
        out[..., 0] = u**lo if lo != 0 else 1.0
    if span > 1:
        out[..., 1:] = u[..., None]
        out = np.cumprod(out, axis=-1)
    return out[..., exps - lo]


def generate_basis(d: Domain, order: int, exponents=None) -> BasisSet:
    """Powers about the domain centre: ``0..order`` on simply connected
    domains, ``-order..order`` without ``-1`` on annuli.

    ``exponents`` overrides the family (used for deliberately degenerate
    configurations and for the full Bergman comparison on annuli).
    """
    if exponents is None and (not isinstance(order, (int, np.integer)) or order < 1):
        raise DkernError("INVALID_ORDER", f"basis order must be an integer >= 1, got {order!r}")
    center = d.center
    scale = float(d.radius)
    if exponents is not None:
        exps = tuple(int(e) for e in exponents)
        if not exps:
            raise DkernError("INVALID_ORDER", "empty exponent list")
        kind = "laurent" if min(exps) < 0 else "monomials"
        if kind == "laurent" and not isinstance(d, Annulus):
            raise DkernError("INVALID_ORDER", "negative exponents need an annulus around the centre")
        # -1 gives the full Bergman family: no primitives, comparisons only
        return BasisSet(kind, exps, center, scale, reduced=-1 not in exps)
    if isinstance(d, Annulus):
        exps = tuple(k for k in range(-order, order + 1) if k != -1)
        return BasisSet("laurent", exps, center, scale)
    return BasisSet("monomials", tuple(range(order + 1)), center, scale)


# ---------------------------------------------------------------------------
# Gram assembly


def _centered_circular(d: Domain, b: BasisSet) -> bool:
    return isinstance(d, (Disc, Annulus)) and d.center == 0 and b.center == 0


def radial_moments(b: BasisSet, w: Weight, d: Domain, radial: int = 80) -> np.ndarray:
    """``||g_k||^2 = 2 pi int r^{2k+1} mu(r) dr / s^{2k}`` for a radial weight on a
    disc or annulus centred at the origin."""
    lo = d.inner if isinstance(d, Annulus) else 0.0
    hi = d.outer if isinstance(d, Annulus) else d.radius
    k = np.asarray(b.exponents, dtype=float)
    s = b.scale
    # work in t = (r/s)^2 so the integrand is t^k mu dt
    t0, t1 = (lo / s) ** 2, (hi / s) ** 2
    if isinstance(w, (Constant, RadialPower)):
        p = w.p if isinstance(w, RadialPower) else 0.0
        c = w.value if isinstance(w, Constant) else s ** (2 * p)
        e = k + p + 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            m = np.where(np.abs(e) < 1e-14, np.log(t1 / t0) if t0 > 0 else np.inf,
                         (t1**e - t0**e) / np.where(e == 0, 1.0, e))
        return math.pi * s**2 * c * m
    if isinstance(w, DiscPower):
        if hi > 1.0 + 1e-15:
            raise DkernError("NONPOSITIVE_WEIGHT", "disc power weight needs the domain inside the unit disc")
        a = w.alpha
        # mu = (1 - s^2 t)^alpha; Gauss-Jacobi absorbs the endpoint factor at r = 1
        if abs(hi - 1.0) <= 1e-15 and s == 1.0:
            x, wx = special.roots_jacobi(radial, a, 0.0)
            tt = t0 + (t1 - t0) * (x + 1) / 2
            jac = ((t1 - t0) / 2) ** (1 + a)
            m = jac * (wx[None, :] * tt[None, :] ** k[:, None]).sum(axis=1)
        else:
            x, wx = np.polynomial.legendre.leggauss(radial)
            tt = t0 + (t1 - t0) * (x + 1) / 2
            mu = (1 - s**2 * tt) ** a
            m = (t1 - t0) / 2 * (wx[None, :] * mu[None, :] * tt[None, :] ** k[:, None]).sum(axis=1)
        return math.pi * s**2 * m
    raise TypeError(f"weight {w!r} is not radial")


def gram_matrix(b: BasisSet, w: Weight, rule: QuadratureRule, domain: Domain | None = None,
                radial: int = 80) -> np.ndarray:
    """``G[j, k] = int g_j conj(g_k) mu dA``.

    With ``domain`` given and a radial weight on a disc or annulus centred at
    the origin, the matrix is diagonal and the norms come from 1-D radial
    integrals; otherwise it is assembled on ``rule``.
    """
    if domain is not None and is_radial(w) and _centered_circular(domain, b):
        return np.diag(radial_moments(b, w, domain, radial)).astype(complex)
    mu = np.asarray(w(rule.nodes), dtype=float)
    vals = b.derivatives(rule.nodes, 0)  # (nodes, N)
    if not np.all(np.isfinite(vals)):
        raise DkernError("NAN_INTEGRAND", "basis is not finite at a quadrature node")
    rows = np.ascontiguousarray(vals.T)  # (N, nodes), contiguous for pairwise sums
    wm = rule.weights * mu
    n = len(b)
    G = np.empty((n, n), dtype=complex)
    for j in range(n):
        G[j] = np.sum(rows[j][None, :] * np.conj(rows) * wm[None, :], axis=1)
    return G


# ---------------------------------------------------------------------------
# Orthonormalisation


@dataclass(frozen=True, eq=False)
class OrthonormalBasis:
    """``phi_i = sum_j C[i, j] g_j`` with ``C`` lower triangular."""

    basis: BasisSet
    coefficients: np.ndarray = field(repr=False)
    rcond: float = 1.0
    jitter: float = 0.0
    truncation_order: int = 0

    def __len__(self) -> int:
        return len(self.basis)

    def derivatives(self, z, j: int = 0) -> np.ndarray:
        return self.basis.derivatives(z, j) @ self.coefficients.T

    def primitives(self, z) -> np.ndarray:
        return self.basis.primitives(z) @ self.coefficients.T


def orthonormalize(b: BasisSet, G: np.ndarray, truncation_order: int | None = None) -> OrthonormalBasis:
    """Whiten ``b`` against its Gram matrix.

    The matrix is Jacobi-scaled to unit diagonal, symmetrised and Cholesky
    factored, ``G = L L^H``; the coefficients are ``C = L^{-1}`` (lower
    triangular, positive diagonal).  An indefinite factorisation is retried
    once with a diagonal shift of ``1e-14 * trace``.  The reciprocal
    condition number is taken on the scaled matrix, since diagonal scaling
    does not affect the accuracy of the Cholesky route.
    """
    G = np.asarray(G, dtype=complex)
    n = len(b)
    if G.shape != (n, n):
        raise DkernError("DIMENSION_MISMATCH", f"Gram matrix {G.shape} does not match basis of size {n}")
    diag = G.diagonal().real
    if np.any(~(diag > 0)) or not np.all(np.isfinite(G)):
        raise DkernError("ILL_CONDITIONED", "Gram matrix has a nonpositive diagonal; lower the truncation order")
    dinv = 1.0 / np.sqrt(diag)
    S = dinv[:, None] * G * dinv[None, :]
    S = 0.5 * (S + S.conj().T)
    jitter = 0.0
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        jitter = JITTER_REL * float(np.trace(S).real)
        try:
            L = np.linalg.cholesky(S + jitter * np.eye(n))
        except np.linalg.LinAlgError:
            raise DkernError("ILL_CONDITIONED", "Gram matrix is indefinite beyond jitter; lower the truncation order",
                             jitter=jitter) from None
        S = S + jitter * np.eye(n)
    ev = np.linalg.eigvalsh(S)
    rcond = float(ev[0] / ev[-1]) if ev[-1] > 0 else 0.0
    if rcond < RCOND_MIN:
        raise DkernError("ILL_CONDITIONED", f"reciprocal condition {rcond:.3e} < {RCOND_MIN:g}; lower the truncation order",
                         rcond=rcond)
    Linv = linalg.solve_triangular(L, np.eye(n), lower=True)
    C = Linv * dinv[None, :]
    C.setflags(write=False)
    order = truncation_order if truncation_order is not None else max(abs(k) for k in b.exponents)
    return OrthonormalBasis(b, C, rcond, jitter, order)


def eval_basis_derivatives(ob: OrthonormalBasis, z, deriv_order: int = 0) -> np.ndarray:
    """``(phi_1^{(j)}(z), ..., phi_N^{(j)}(z))`` from exact power-rule derivatives."""
    if deriv_order < 0:
        raise DkernError("INVALID_ORDER", "derivative order must be nonnegative")
    return ob.derivatives(z, deriv_order)


def build_orthonormal_basis(d: Domain, w: Weight, order: int | None = None, *, radial: int = 80,
                            angular: int = 160, depth: int = 0, exponents=None,
                            rule: QuadratureRule | None = None) -> tuple[OrthonormalBasis, QuadratureRule]:
    if order is None:
        order = DEFAULT_ANNULUS_ORDER if isinstance(d, Annulus) else DEFAULT_DISC_ORDER
    b = generate_basis(d, order, exponents)
    if rule is None:
        rule = area_quadrature(d, radial, angular, depth)
    G = gram_matrix(b, w, rule, domain=d, radial=radial)
    return orthonormalize(b, G, order), rule


def measured_gram(ob: OrthonormalBasis, w: Weight, rule: QuadratureRule) -> np.ndarray:
    """``<phi_i, phi_j>`` re-measured on ``rule`` (always by 2-D assembly)."""
    G = gram_matrix(ob.basis, w, rule)
    C = ob.coefficients
    return C @ G @ C.conj().T


__all__ = [
    "BasisSet", "OrthonormalBasis", "generate_basis", "gram_matrix", "orthonormalize",
    "eval_basis_derivatives", "build_orthonormal_basis", "measured_gram", "radial_moments",
]
