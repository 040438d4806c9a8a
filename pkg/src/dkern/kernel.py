"""Truncated reduced Bergman kernels, the determinant formula for higher
orders, the kernel function ``M_n`` as a path integral, and its
zeta / conj(zeta) partial derivatives.

Notation: ``K(z, zeta)`` is the reduced kernel, ``K_{jk}`` its derivative
``d^j/dz^j d^k/dconj(zeta)^k``, ``K_n`` the n-th order kernel and
``M_n(z, zeta) = int_zeta^z K_n(xi, zeta) dxi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _series as ser
from .basis import OrthonormalBasis, build_orthonormal_basis
from .domains import Domain, Weight, make_domain, make_weight
from .errors import DkernError
from .quadrature import (DEFAULT_PATH_TOL, Path, QuadratureRule, area_quadrature, integrate_area,
                         integrate_path_detailed, path_build)

ZERO_SET_THRESHOLD = 1e-10
NEAR_ZERO_REL = 1e-12
IMAG_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class KernelEvaluator:
    onb: OrthonormalBasis
    weight: Weight
    domain: Domain
    rule: QuadratureRule | None = field(default=None, repr=False)
    zero_set_threshold: float = ZERO_SET_THRESHOLD
    path_tol: float = DEFAULT_PATH_TOL
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def phi(self, z, j: int = 0) -> np.ndarray:
        return self.onb.derivatives(z, j)

    @property
    def diag_scale(self) -> float:
        """Largest ``K(p, p)`` over a coarse probe grid of the domain."""
        if "diag_scale" not in self._cache:
            probe = area_quadrature(self.domain, 8, 16).nodes
            P = self.phi(probe)
            self._cache["diag_scale"] = float(np.max(np.sum(np.abs(P) ** 2, axis=-1)))
        return self._cache["diag_scale"]

    def frame(self, zeta: complex, n: int, rmax: int = 0, smax: int = 0) -> "ZetaFrame":
        key = ("frame", complex(zeta), n, rmax, smax)
        if key not in self._cache:
            self._cache[key] = _build_frame(self, complex(zeta), n, rmax, smax)
        return self._cache[key]


def build_evaluator(domain, weight, order: int | None = None, *, radial: int = 80, angular: int = 160,
                    depth: int = 0, exponents=None, zero_set_threshold: float = ZERO_SET_THRESHOLD,
                    path_tol: float = DEFAULT_PATH_TOL) -> KernelEvaluator:
    """Orthonormalise the default basis for ``(domain, weight)`` and wrap it."""
    d = make_domain(domain)
    w = make_weight(weight)
    onb, rule = build_orthonormal_basis(d, w, order, radial=radial, angular=angular, depth=depth,
                                        exponents=exponents)
    return KernelEvaluator(onb, w, d, rule, zero_set_threshold, path_tol)


# ---------------------------------------------------------------------------
# Reduced kernel and diagonal jets


def reduced_kernel(ke: KernelEvaluator, z, zeta, j: int = 0, k: int = 0):
    """``sum_i phi_i^{(j)}(z) conj(phi_i^{(k)}(zeta))``; broadcasts over arrays."""
    out = np.sum(ke.phi(z, j) * np.conj(ke.phi(zeta, k)), axis=-1)
    return complex(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class DiagonalJets:
    zeta: complex
    order: int
    matrix: np.ndarray
    determinants: tuple[float, ...]


def diagonal_jets(ke: KernelEvaluator, zeta: complex, n: int) -> DiagonalJets:
    """Jet matrix ``K_{jk}(zeta, zeta)``, ``0 <= j, k <= n``, and its leading
    principal minors ``J_0..J_n``."""
    P = np.array([ke.phi(zeta, j) for j in range(n + 1)])
    jet = P @ P.conj().T
    dets = []
    for m in range(n + 1):
        dm = complex(np.linalg.det(jet[: m + 1, : m + 1]))
        # Hermitian minors are real; the imaginary part is rounding only
        assert abs(dm.imag) <= IMAG_TOL * max(abs(dm), 1e-300) or abs(dm) < 1e-300, dm
        dets.append(dm.real)
    return DiagonalJets(complex(zeta), n, jet, tuple(dets))


def zero_set_probe(ke: KernelEvaluator, zeta: complex) -> bool:
    """True when ``K(zeta, zeta)`` is negligible relative to the domain's scale."""
    kd = float(np.sum(np.abs(ke.phi(zeta)) ** 2))
    return kd <= ke.zero_set_threshold * ke.diag_scale


def _near_zero_guard(ke: KernelEvaluator, zeta: complex, n: int, J: float):
    scale = ke.diag_scale ** (n - 1)
    if not abs(J) > NEAR_ZERO_REL * scale:
        raise DkernError("NEAR_ZERO_SET", f"J_{n - 2} = {J:.3e} is too small; zeta is too close to the zero set",
                         zeta=complex(zeta), n=n)


# ---------------------------------------------------------------------------
# Higher-order kernel


def higher_order_kernel(ke: KernelEvaluator, z, zeta: complex, n: int):
    """``K_n(z, zeta)`` by the bordered determinant.

    The n x n matrix has first row ``K_{0k}(z, zeta)`` and rows ``K_{jk}(zeta, zeta)``
    for ``j = 0..n-2``, ``k = 0..n-1``; the result is that determinant times
    ``(-1)**(n-1) / J_{n-2}``.
    """
    if n < 1:
        raise DkernError("INVALID_ORDER", f"n must be >= 1, got {n}")
    if n == 1:
        return reduced_kernel(ke, z, zeta)
    zarr = np.atleast_1d(np.asarray(z, dtype=complex))
    Pz = ke.phi(zarr)  # (m, N)
    Pa = np.array([ke.phi(zeta, k) for k in range(n)])  # (n, N)
    Ph = Pa[: n - 1]
    lower = Ph @ Pa.conj().T  # (n-1, n): K_{jk}(zeta, zeta)
    J = float(np.linalg.det(lower[:, : n - 1]).real)
    _near_zero_guard(ke, zeta, n, J)
    top = Pz @ Pa.conj().T  # (m, n): K_{0k}(z, zeta)
    mats = np.empty((len(zarr), n, n), dtype=complex)
    mats[:, 0, :] = top
    mats[:, 1:, :] = lower[None]
    out = (-1) ** (n - 1) * np.linalg.det(mats) / J
    return complex(out[0]) if np.ndim(z) == 0 else out.reshape(np.shape(z))


@dataclass(frozen=True, eq=False)
class ZetaFrame:
    """Everything about ``K_n(., zeta)`` that does not depend on the first slot.

    ``W[:, a, b]`` holds the coefficients such that
    ``sum_i phi_i^{(d)}(xi) W[i, a, b]`` is the Taylor coefficient of
    ``eps**a delta**b`` of ``d^d/dxi^d K_n(xi, zeta)`` with ``zeta -> zeta + eps``
    and ``conj(zeta) -> conj(zeta) + delta`` varied independently; ``V`` is the
    same with the orthonormalisation folded in, for the raw basis.
    """

    zeta: complex
    n: int
    W: np.ndarray
    V: np.ndarray
    J: float

    def derivative_coeffs(self, a: int, b: int) -> np.ndarray:
        return self.W[:, a, b] * (math.factorial(a) * math.factorial(b))


def _build_frame(ke: KernelEvaluator, zeta: complex, n: int, rmax: int, smax: int) -> ZetaFrame:
    if n < 1:
        raise DkernError("INVALID_ORDER", f"n must be >= 1, got {n}")
    shape = (rmax + 1, smax + 1)
    N = len(ke.onb)
    anti = [np.conj(ke.phi(zeta, m)) for m in range(n + smax)]
    if n == 1:
        coeffs = [ser.const(1.0, shape)]
        J = 1.0
    else:
        hol = [ke.phi(zeta, m) for m in range(n - 1 + rmax)]
        fa = [math.factorial(a) for a in range(max(rmax, smax) + 1)]

        def entry(j, k):
            s = np.empty(shape, dtype=complex)
            for a in range(rmax + 1):
                for b in range(smax + 1):
                    s[a, b] = np.dot(hol[j + a], anti[k + b]) / (fa[a] * fa[b])
            return s

        D = [[entry(j, k) for k in range(n)] for j in range(n - 1)]
        Jser = ser.det([row[: n - 1] for row in D])
        J = float(Jser[0, 0].real)
        _near_zero_guard(ke, zeta, n, J)
        Jinv = ser.inv(Jser)
        coeffs = []
        for k in range(n):
            minor = [[row[c] for c in range(n) if c != k] for row in D]
            sign = (-1) ** (n - 1 + k)
            coeffs.append(sign * ser.mul(ser.det(minor), Jinv))
    W = np.zeros((N,) + shape, dtype=complex)
    for k, ck in enumerate(coeffs):
        for b1 in range(smax + 1):
            # row-0 entry K_{0k}(xi, .) contributes conj(phi^{(k+b1)}(zeta)) / b1! at delta**b1
            termb = anti[k + b1] / math.factorial(b1)
            for a in range(rmax + 1):
                for b2 in range(smax + 1 - b1):
                    if ck[a, b2] != 0:
                        W[:, a, b1 + b2] += termb * ck[a, b2]
    C = ke.onb.coefficients
    V = np.einsum("ij,iab->jab", C, W)
    W.setflags(write=False)
    V.setflags(write=False)
    return ZetaFrame(zeta, n, W, V, J)


def kn_derivative(ke: KernelEvaluator, z, zeta: complex, n: int, r: int = 0, s: int = 0, dz: int = 0):
    """``d^dz/dz^dz d^r/dzeta^r d^s/dconj(zeta)^s K_n(z, zeta)``."""
    fr = ke.frame(zeta, n, r, s)
    out = ke.phi(z, dz) @ fr.derivative_coeffs(r, s)
    return complex(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Kernel function M_n and its partials


@dataclass(frozen=True)
class KernelFunctionEval:
    value: complex
    path: Path
    error_estimate: float


def _resolve_path(ke: KernelEvaluator, z: complex, zeta: complex, path: Path | None) -> Path:
    if path is None:
        return path_build(ke.domain, zeta, z)
    if not (np.isclose(path.start, zeta) and np.isclose(path.end, z)):
        raise DkernError("NO_PATH", "supplied path does not join zeta to z")
    return path


def _integrate_frame(ke: KernelEvaluator, fr: ZetaFrame, cols: list[tuple[int, int]], path: Path, tol: float):
    V = np.stack([fr.V[:, a, b] * (math.factorial(a) * math.factorial(b)) for a, b in cols], axis=1)
    basis = ke.onb.basis
    res = integrate_path_detailed(path, lambda xs: basis.derivatives(xs, 0) @ V, tol)
    return np.atleast_1d(res.value), res.error


def kernel_function_M(ke: KernelEvaluator, z: complex, zeta: complex, n: int, path: Path | None = None,
                      tol: float | None = None) -> KernelFunctionEval:
    """``M_n(z, zeta) = int_zeta^z K_n(xi, zeta) dxi`` along ``path`` (built if absent)."""
    z, zeta = complex(z), complex(zeta)
    tol = ke.path_tol if tol is None else tol
    p = _resolve_path(ke, z, zeta, path)
    if z == zeta:
        return KernelFunctionEval(0j, p, 0.0)
    fr = ke.frame(zeta, n)
    vals, err = _integrate_frame(ke, fr, [(0, 0)], p, tol)
    return KernelFunctionEval(complex(vals[0]), p, err)


def _diagonal_terms(ke: KernelEvaluator, fr: ZetaFrame, r: int, s: int) -> complex:
    """``sum_{k<r} d^k/dzeta^k d^s/dconj(zeta)^s  K_n^{(r-1-k)}(zeta, zeta)``.

    ``K_n^{(m)}`` is the m-th zeta-derivative in the second slot, restricted to
    the diagonal; the outer derivatives act on that restriction, so a zeta
    derivative also hits the first slot (Leibniz over the two slots).
    """
    total = 0j
    for k in range(r):
        m = r - 1 - k
        for i in range(k + 1):
            coef = fr.derivative_coeffs(k - i + m, s)
            total += math.comb(k, i) * complex(np.dot(ke.phi(fr.zeta, i), coef))
    return total


def M_partials(ke: KernelEvaluator, z: complex, zeta: complex, n: int, orders, path: Path | None = None,
               tol: float | None = None) -> dict:
    """Several ``d^{r+s} M_n / dzeta^r dconj(zeta)^s`` sharing one path integration.

    ``orders`` is an iterable of ``(r, s)``; the result maps each to a complex.
    """
    z, zeta = complex(z), complex(zeta)
    tol = ke.path_tol if tol is None else tol
    orders = [tuple(o) for o in orders]
    if any(r < 0 or s < 0 for r, s in orders):
        raise DkernError("INVALID_ORDER", "partial orders must be nonnegative")
    rmax = max(r for r, _ in orders)
    smax = max(s for _, s in orders)
    fr = ke.frame(zeta, n, rmax, smax)
    p = _resolve_path(ke, z, zeta, path)
    if z == zeta:
        integrals = np.zeros(len(orders), dtype=complex)
    else:
        integrals, _ = _integrate_frame(ke, fr, orders, p, tol)
    out = {}
    for (r, s), val in zip(orders, integrals):
        out[(r, s)] = complex(val) - (_diagonal_terms(ke, fr, r, s) if r >= 1 else 0j)
    return out


def M_mixed_partial(ke: KernelEvaluator, z: complex, zeta: complex, n: int, r: int, s: int,
                    path: Path | None = None, tol: float | None = None) -> complex:
    """``d^{r+s} M_n(z, zeta) / dzeta^r dconj(zeta)^s``.

    For ``r = 0`` this is the path integral of ``d^s K_n / dconj(zeta)^s``;
    for ``r >= 1`` the integral of ``d^{r+s} K_n / dzeta^r dconj(zeta)^s`` minus
    the diagonal terms produced by the moving lower limit.
    """
    return M_partials(ke, z, zeta, n, [(r, s)], path, tol)[(r, s)]


def M_partials_grid(ke: KernelEvaluator, zs, zeta: complex, n: int, orders) -> np.ndarray:
    """``M_partials`` at many first-slot points, shape ``(len(zs), len(orders))``.

    Integrates in closed form through the basis primitives, which exist for
    every reduced basis, so the result is path independent by construction.
    Falls back to path integration when the basis is not reduced.
    """
    zeta = complex(zeta)
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    orders = [tuple(o) for o in orders]
    if any(r < 0 or s < 0 for r, s in orders):
        raise DkernError("INVALID_ORDER", "partial orders must be nonnegative")
    basis = ke.onb.basis
    if not basis.reduced:
        return np.array([[M_partials(ke, z, zeta, n, orders)[o] for o in orders] for z in zs])
    rmax = max(r for r, _ in orders)
    smax = max(s for _, s in orders)
    fr = ke.frame(zeta, n, rmax, smax)
    V = np.stack([fr.V[:, a, b] * (math.factorial(a) * math.factorial(b)) for a, b in orders], axis=1)
    out = (basis.primitives(zs) - basis.primitives(zeta)) @ V
    for c, (r, s) in enumerate(orders):
        if r >= 1:
            out[:, c] -= _diagonal_terms(ke, fr, r, s)
    return out


# ---------------------------------------------------------------------------
# Reproducing property


def reproduce_check(ke: KernelEvaluator, f, zeta: complex, n: int, rule: QuadratureRule | None = None) -> float:
    """``|f^{(n)}(zeta) - int f'(xi) conj(K_n(xi, zeta)) mu(xi) dA(xi)|``.

    ``f`` is a :class:`numpy.polynomial.Polynomial` (complex coefficients in
    powers of z) or any object with ``__call__`` and ``deriv(m)`` of the
    same shape.
    """
    zeta = complex(zeta)
    for k in range(n):
        fk = f.deriv(k)(zeta) if k else f(zeta)
        if abs(fk) > 1e-8:
            raise DkernError("BAD_TEST_FUNCTION", f"f^({k})(zeta) = {fk} does not vanish", k=k)
    target = complex(f.deriv(n)(zeta))
    rule = rule or ke.rule or area_quadrature(ke.domain)
    fr = ke.frame(zeta, n)
    kn = ke.onb.basis.derivatives(rule.nodes, 0) @ fr.V[:, 0, 0]
    mu = np.asarray(ke.weight(rule.nodes), dtype=float)
    fp = f.deriv(1)
    integral = integrate_area(rule, lambda xs: fp(xs) * np.conj(kn) * mu)
    return abs(target - integral)
