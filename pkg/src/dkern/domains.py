"""Planar domains, admissible weights and the local-integrability probe.

Domains are open sets: every membership test uses strict inequalities, so
boundary points are never inside.  Weights are positive functions evaluated
pointwise; the sampled kinds are piecewise constant on their grid cells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage

from .errors import DkernError


def as_complex(v) -> complex:
    """Accept ``complex``, real numbers or ``[re, im]`` pairs."""
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise DkernError("INVALID_GEOMETRY", f"expected [re, im], got {v!r}")
        return complex(float(v[0]), float(v[1]))
    return complex(v)


# ---------------------------------------------------------------------------
# Domains


@dataclass(frozen=True)
class Disc:
    center: complex
    radius: float

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise DkernError("INVALID_GEOMETRY", f"disc radius must be positive, got {self.radius}")

    def contains(self, z):
        return np.abs(np.asarray(z) - self.center) < self.radius

    @property
    def area(self) -> float:
        return math.pi * self.radius**2

    def boundary_distance(self, z):
        return self.radius - np.abs(np.asarray(z) - self.center)


@dataclass(frozen=True)
class Annulus:
    center: complex
    inner: float
    outer: float

    def __post_init__(self):
        if not (0 < self.inner < self.outer and math.isfinite(self.outer)):
            raise DkernError(
                "INVALID_GEOMETRY",
                f"annulus needs 0 < inner < outer, got inner={self.inner}, outer={self.outer}",
            )

    def contains(self, z):
        r = np.abs(np.asarray(z) - self.center)
        return (r > self.inner) & (r < self.outer)

    @property
    def radius(self) -> float:
        return self.outer

    @property
    def area(self) -> float:
        return math.pi * (self.outer**2 - self.inner**2)

    def boundary_distance(self, z):
        r = np.abs(np.asarray(z) - self.center)
        return np.minimum(self.outer - r, r - self.inner)


@dataclass(frozen=True, eq=False)
class SampledRegion:
    """Open interior of a union of grid cells.

    Cell ``mask[i, j]`` covers ``[x0 + j*h, x0 + (j+1)*h] x [y0 + i*h, y0 + (i+1)*h]``.
    """

    origin: complex
    cell_size: float
    mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        mask = np.array(self.mask, dtype=bool)
        if mask.ndim != 2 or not mask.any():
            raise DkernError("INVALID_GEOMETRY", "sampled region needs a nonempty 2-D indicator grid")
        if not (self.cell_size > 0):
            raise DkernError("INVALID_GEOMETRY", f"cell_size must be positive, got {self.cell_size}")
        _, ncomp = ndimage.label(mask)  # default structure is 4-connectivity
        if ncomp != 1:
            raise DkernError("INVALID_GEOMETRY", f"indicator grid has {ncomp} 4-connected components")
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @property
    def shape(self) -> tuple[int, int]:
        return self.mask.shape

    @property
    def bounding_box(self) -> tuple[float, float, float, float]:
        ny, nx = self.mask.shape
        x0, y0 = self.origin.real, self.origin.imag
        return (x0, x0 + nx * self.cell_size, y0, y0 + ny * self.cell_size)

    @property
    def center(self) -> complex:
        iy, ix = np.nonzero(self.mask)
        h = self.cell_size
        return complex(self.origin.real + (ix.mean() + 0.5) * h, self.origin.imag + (iy.mean() + 0.5) * h)

    @property
    def radius(self) -> float:
        """Largest distance from :attr:`center` to a cell corner."""
        x0, x1, y0, y1 = self.bounding_box
        corners = np.array([x0 + 1j * y0, x0 + 1j * y1, x1 + 1j * y0, x1 + 1j * y1])
        return float(np.abs(corners - self.center).max())

    @property
    def area(self) -> float:
        return float(self.mask.sum()) * self.cell_size**2

    def cell_centers(self) -> np.ndarray:
        iy, ix = np.nonzero(self.mask)
        h = self.cell_size
        return self.origin + (ix + 0.5) * h + 1j * (iy + 0.5) * h

    def cell_of(self, z: complex) -> tuple[int, int]:
        fx = (z.real - self.origin.real) / self.cell_size
        fy = (z.imag - self.origin.imag) / self.cell_size
        return int(math.floor(fy)), int(math.floor(fx))

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        fx = (z.real - self.origin.real) / self.cell_size
        fy = (z.imag - self.origin.imag) / self.cell_size
        ny, nx = self.mask.shape
        inside = np.ones(z.shape, dtype=bool)
        # a point on a cell edge is interior only if every cell touching it is set
        for cx in (np.floor(fx), np.where(fx == np.floor(fx), fx - 1, np.floor(fx))):
            for cy in (np.floor(fy), np.where(fy == np.floor(fy), fy - 1, np.floor(fy))):
                ok = (cx >= 0) & (cx < nx) & (cy >= 0) & (cy < ny)
                ix = np.where(ok, cx, 0).astype(int)
                iy = np.where(ok, cy, 0).astype(int)
                inside &= ok & self.mask[iy, ix]
        return inside

    def boundary_distance(self, z):
        raise NotImplementedError("no closed-form boundary distance for sampled regions")


Domain = Disc | Annulus | SampledRegion


def make_domain(spec) -> Domain:
    """Build a domain from its JSON-style description.

    Accepted forms::

        {"disc": {"center": [0, 0], "radius": 1}}
        {"annulus": {"center": [0, 0], "inner": 0.3, "outer": 1}}
        {"sampled": {"origin": [-1, -1], "cell_size": 0.1, "mask": [[0, 1], ...]}}

    Already-built domains are returned unchanged.
    """
    if isinstance(spec, (Disc, Annulus, SampledRegion)):
        return spec
    if not isinstance(spec, dict) or len(spec) != 1:
        raise DkernError("INVALID_GEOMETRY", f"domain spec must have exactly one kind key, got {spec!r}")
    (kind, body), = spec.items()
    if not isinstance(body, dict):
        raise DkernError("INVALID_GEOMETRY", f"domain body for {kind!r} must be an object")
    center = as_complex(body.get("center", 0.0))
    if kind == "disc":
        return Disc(center, float(body["radius"]))
    if kind == "annulus":
        return Annulus(center, float(body["inner"]), float(body["outer"]))
    if kind == "sampled":
        return SampledRegion(as_complex(body.get("origin", 0.0)), float(body["cell_size"]), np.asarray(body["mask"]))
    raise DkernError("INVALID_GEOMETRY", f"unknown domain kind {kind!r}")


def contains(d: Domain, z) -> bool | np.ndarray:
    """Strict (open-set) membership of ``z`` in ``d``; vectorised over arrays."""
    out = d.contains(z)
    return bool(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Weights


@dataclass(frozen=True)
class Constant:
    value: float

    def __post_init__(self):
        if not (self.value > 0 and math.isfinite(self.value)):
            raise DkernError("NONPOSITIVE_WEIGHT", f"constant weight must be positive, got {self.value}")

    def __call__(self, z):
        return np.full(np.shape(z), self.value, dtype=float)


@dataclass(frozen=True)
class RadialPower:
    """``|z|**(2p)``."""

    p: float

    def __post_init__(self):
        if not (self.p >= 0):
            raise DkernError("NONPOSITIVE_WEIGHT", f"radial power needs p >= 0, got {self.p}")

    def __call__(self, z):
        return np.abs(np.asarray(z)) ** (2 * self.p)


@dataclass(frozen=True)
class DiscPower:
    """``(1 - |z|**2)**alpha`` on the unit disc."""

    alpha: float

    def __post_init__(self):
        if not (self.alpha > -1):
            raise DkernError("NONPOSITIVE_WEIGHT", f"disc power needs alpha > -1, got {self.alpha}")

    def __call__(self, z):
        base = 1.0 - np.abs(np.asarray(z)) ** 2
        if np.any(base <= 0):
            raise DkernError("NONPOSITIVE_WEIGHT", "disc power weight evaluated outside the unit disc")
        return base**self.alpha


@dataclass(frozen=True, eq=False)
class Sampled:
    """Piecewise-constant weight; ``values[i, j]`` uses the cell layout of :class:`SampledRegion`."""

    origin: complex
    cell_size: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 2 or vals.size == 0:
            raise DkernError("INVALID_GEOMETRY", "sampled weight needs a nonempty 2-D grid")
        if not (self.cell_size > 0):
            raise DkernError("INVALID_GEOMETRY", f"cell_size must be positive, got {self.cell_size}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        ny, nx = self.values.shape
        ix = np.floor((z.real - self.origin.real) / self.cell_size).astype(int)
        iy = np.floor((z.imag - self.origin.imag) / self.cell_size).astype(int)
        # closed top/right edge so a grid exactly covering the domain works
        ix = np.where(ix == nx, nx - 1, ix)
        iy = np.where(iy == ny, ny - 1, iy)
        if np.any((ix < 0) | (ix >= nx) | (iy < 0) | (iy >= ny)):
            raise DkernError("OUTSIDE_WEIGHT_GRID", "sampled weight queried outside its grid")
        out = self.values[iy, ix]
        if np.any(~(out > 0)):
            bad = np.flatnonzero(~(out > 0).ravel())[0]
            raise DkernError(
                "NONPOSITIVE_WEIGHT",
                "sampled weight has a nonpositive cell at a queried point",
                cell=[int(np.ravel(iy)[bad]), int(np.ravel(ix)[bad])],
            )
        return out


Weight = Constant | RadialPower | DiscPower | Sampled


def make_weight(spec) -> Weight:
    """Build a weight from JSON-style input.

    ``{"constant": 1}``, ``{"radial_power": 1}``, ``{"disc_power": 1}`` or
    ``{"sampled": {"origin": [x, y], "cell_size": h, "values": [[...]]}}``.
    """
    if isinstance(spec, (Constant, RadialPower, DiscPower, Sampled)):
        return spec
    if not isinstance(spec, dict) or len(spec) != 1:
        raise DkernError("INVALID_WEIGHT", f"weight spec must have exactly one kind key, got {spec!r}")
    (kind, body), = spec.items()
    if kind == "constant":
        return Constant(float(body))
    if kind == "radial_power":
        return RadialPower(float(body["p"] if isinstance(body, dict) else body))
    if kind == "disc_power":
        return DiscPower(float(body["alpha"] if isinstance(body, dict) else body))
    if kind == "sampled":
        return Sampled(as_complex(body.get("origin", 0.0)), float(body["cell_size"]), np.asarray(body["values"]))
    raise DkernError("INVALID_WEIGHT", f"unknown weight kind {kind!r}")


def weight_eval(w: Weight, z):
    """``mu(z)``; a scalar for scalar input, an array otherwise."""
    out = w(z)
    return float(out) if np.ndim(out) == 0 else out


def is_radial(w: Weight) -> bool:
    return isinstance(w, (Constant, RadialPower, DiscPower))


def singular_points(w: Weight, a: float) -> list[complex]:
    """Points where ``w**(-a)`` may blow up inside a bounded domain."""
    if isinstance(w, RadialPower) and w.p > 0:
        return [0j]
    return []


# ---------------------------------------------------------------------------
# Admissibility


@dataclass(frozen=True)
class CompactDisc:
    center: complex
    radius: float


@dataclass(frozen=True)
class AdmissibilityReport:
    compact: CompactDisc
    exponent: float
    estimate: float
    verdict: str  # "PASS" | "FAIL" | "INCONCLUSIVE"
    levels: int = 0
    history: tuple[float, ...] = ()


def _compact_inside(d: Domain, K: CompactDisc) -> bool:
    off = abs(K.center - getattr(d, "center", 0j))
    if isinstance(d, Disc):
        return off + K.radius < d.radius
    if isinstance(d, Annulus):
        return off + K.radius < d.outer and off - K.radius > d.inner
    t = np.linspace(0, 2 * np.pi, 512, endpoint=False)
    rr = np.linspace(0, K.radius, 33)
    pts = (K.center + rr[:, None] * np.exp(1j * t)[None, :]).ravel()
    return bool(np.all(d.contains(pts)))


def _star_rule(K: CompactDisc, pole: complex, level: int):
    """Polar rule for the disc ``K`` about an interior point ``pole``.

    Radial panels are graded geometrically toward ``pole`` so an integrable
    point singularity there is resolved as ``level`` grows.
    """
    nang = 32 * (level + 1)
    theta = 2 * np.pi * (np.arange(nang) + 0.5) / nang
    e = np.exp(1j * theta)
    # ray pole + t e meets |w - c| = R at the positive root of t^2 + 2 Re(conj(e) s) t + |s|^2 - R^2
    s = pole - K.center
    b = np.real(np.conj(e) * s)
    tmax = -b + np.sqrt(b * b - (abs(s) ** 2 - K.radius**2))
    x, wx = np.polynomial.legendre.leggauss(8 + 2 * level)
    edges = np.concatenate([[0.0], 2.0 ** -np.arange(2 * level, -1, -1)])
    u_nodes, u_w = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        u_nodes.append(0.5 * (hi - lo) * x + 0.5 * (hi + lo))
        u_w.append(0.5 * (hi - lo) * wx)
    u = np.concatenate(u_nodes)
    uw = np.concatenate(u_w)
    t = tmax[:, None] * u[None, :]
    nodes = pole + t * e[:, None]
    weights = (2 * np.pi / nang) * tmax[:, None] ** 2 * u[None, :] * uw[None, :]
    return nodes.ravel(), weights.ravel()


def check_admissibility(w: Weight, d: Domain, a: float, compact, *, rtol: float = 1e-8,
                        max_levels: int = 12) -> AdmissibilityReport:
    """Estimate ``int_K mu**(-a) dA`` by successively refined quadrature.

    The verdict is PASS once two consecutive refinements agree to ``rtol``,
    INCONCLUSIVE if that never happens within ``max_levels``, and FAIL only
    when the estimate itself is non-finite.  Local integrability of
    ``mu**(-a)`` for some ``a > 0`` is sufficient for admissibility, so PASS
    is a certificate while INCONCLUSIVE says nothing either way.
    """
    if not isinstance(compact, CompactDisc):
        compact = CompactDisc(as_complex(compact["center"]), float(compact["radius"]))
    if not (a > 0):
        raise DkernError("INVALID_EXPONENT", f"exponent a must be positive, got {a}")
    if not _compact_inside(d, compact):
        raise DkernError("COMPACT_NOT_INSIDE", "compact set is not strictly inside the domain")

    pole = compact.center
    for p in singular_points(w, a):
        if abs(p - compact.center) < compact.radius:
            pole = p
            break

    history: list[float] = []
    for level in range(max_levels + 1):
        nodes, weights = _star_rule(compact, pole, level)
        with np.errstate(divide="ignore", over="ignore"):
            vals = np.asarray(w(nodes), dtype=float) ** (-a)
        est = math.fsum(weights * vals)
        history.append(est)
        if not math.isfinite(est):
            return AdmissibilityReport(compact, a, est, "FAIL", level, tuple(history))
        if level > 0 and abs(est - history[-2]) <= rtol * abs(est):
            return AdmissibilityReport(compact, a, est, "PASS", level, tuple(history))
    return AdmissibilityReport(compact, a, history[-1], "INCONCLUSIVE", max_levels, tuple(history))


def grid_points(points: Sequence) -> np.ndarray:
    return np.array([as_complex(p) for p in points], dtype=complex)
