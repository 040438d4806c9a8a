"""Area quadrature over domains and adaptive integration along polylines."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .domains import Annulus, Disc, Domain, SampledRegion
from .errors import DkernError

DEFAULT_RADIAL = 80
DEFAULT_ANGULAR = 160
DEFAULT_PATH_TOL = 1e-10
PATH_CHECK_SAMPLES = 256
MAX_DEPTH = 20

# 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
_XGK = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600525452120,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

# full symmetric node set on [-1, 1]; Gauss nodes are the odd-indexed Kronrod ones
KRONROD_NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[:-1][::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[:-1][::-1]])
GAUSS_WEIGHTS = np.zeros(21)
GAUSS_WEIGHTS[1:10:2] = _WG
GAUSS_WEIGHTS[11:20:2] = _WG[::-1]


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.nodes)


def _freeze(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def area_quadrature(d: Domain, radial: int = DEFAULT_RADIAL, angular: int = DEFAULT_ANGULAR,
                    depth: int = 0) -> QuadratureRule:
    """Tensor rule for ``int_d f dA``.

    Discs and annuli get Gauss-Legendre in the radius times the trapezoid rule
    in angle.  Sampled regions get the midpoint rule per cell; ``depth``
    splits every cell touching the region boundary into ``4**depth`` subcells.
    Node order is radius-major (resp. row-major) and fixed.
    """
    if radial < 1 or angular < 1 or depth < 0:
        raise DkernError("CONFIG_INVALID", "quadrature resolution must be positive")
    if isinstance(d, (Disc, Annulus)):
        lo = d.inner if isinstance(d, Annulus) else 0.0
        hi = d.outer if isinstance(d, Annulus) else d.radius
        x, wx = np.polynomial.legendre.leggauss(radial)
        r = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        wr = 0.5 * (hi - lo) * wx * r
        theta = 2 * np.pi * np.arange(angular) / angular
        nodes = d.center + r[:, None] * np.exp(1j * theta)[None, :]
        weights = np.repeat(wr * (2 * np.pi / angular), angular)
        meta = {"kind": type(d).__name__.lower(), "radial": radial, "angular": angular}
        return QuadratureRule(_freeze(nodes.ravel()), _freeze(weights), meta)
    if isinstance(d, SampledRegion):
        return _sampled_rule(d, depth)
    raise TypeError(f"unsupported domain {d!r}")


def _sampled_rule(d: SampledRegion, depth: int) -> QuadratureRule:
    mask = d.mask
    h = d.cell_size
    padded = np.pad(mask, 1)
    boundary = mask & ~(padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:])
    nodes, weights = [], []
    for iy, ix in zip(*np.nonzero(mask)):
        m = 2**depth if boundary[iy, ix] else 1
        sub = (np.arange(m) + 0.5) / m
        base = d.origin + ix * h + 1j * iy * h
        pts = base + h * (sub[None, :] + 1j * sub[:, None])
        nodes.append(pts.ravel())
        weights.append(np.full(m * m, (h / m) ** 2))
    meta = {"kind": "sampled", "depth": depth}
    return QuadratureRule(_freeze(np.concatenate(nodes)), _freeze(np.concatenate(weights)), meta)


def stable_sum(values) -> complex:
    """Correctly rounded sum of a complex array (independent of node order)."""
    v = np.asarray(values)
    if np.iscomplexobj(v):
        return complex(math.fsum(v.real.ravel()), math.fsum(v.imag.ravel()))
    return complex(math.fsum(v.ravel()))


def integrate_area(rule: QuadratureRule, f) -> complex:
    """``sum_i w_i f(node_i)``.  ``f`` is called once on the full node array."""
    vals = np.asarray(f(rule.nodes))
    if vals.shape != rule.nodes.shape:
        vals = np.broadcast_to(vals, rule.nodes.shape)
    if not np.all(np.isfinite(vals)):
        raise DkernError("NAN_INTEGRAND", "integrand is not finite at some quadrature node")
    return stable_sum(rule.weights * vals)


# ---------------------------------------------------------------------------
# Paths


@dataclass(frozen=True, eq=False)
class Path:
    vertices: tuple[complex, ...]
    domain: Domain = field(repr=False)

    @property
    def start(self) -> complex:
        return self.vertices[0]

    @property
    def end(self) -> complex:
        return self.vertices[-1]

    @property
    def length(self) -> float:
        v = np.asarray(self.vertices)
        return float(np.abs(np.diff(v)).sum())

    def segments(self):
        return list(zip(self.vertices[:-1], self.vertices[1:]))


def segment_inside(d: Domain, a: complex, b: complex, samples: int = PATH_CHECK_SAMPLES) -> bool:
    t = np.linspace(0.0, 1.0, samples)
    return bool(np.all(d.contains(a + t * (b - a))))


def polyline_inside(d: Domain, vertices) -> bool:
    return all(segment_inside(d, a, b) for a, b in zip(vertices[:-1], vertices[1:]))


def _annulus_routes(d: Annulus, a: complex, b: complex):
    """Candidate polylines around the hole, simplest first."""
    m = 0.5 * (d.inner + d.outer)
    c = d.center
    ta = math.atan2((a - c).imag, (a - c).real)
    tb = math.atan2((b - c).imag, (b - c).real)
    delta = (tb - ta + math.pi) % (2 * math.pi) - math.pi
    # two arc vertices on the mid circle, shorter angular side
    yield [a, c + m * complex(math.cos(ta + delta / 3), math.sin(ta + delta / 3)),
           c + m * complex(math.cos(ta + 2 * delta / 3), math.sin(ta + 2 * delta / 3)), b]
    # finer arcs with radial legs onto the mid circle
    for k in (4, 8, 16, 32):
        arc = [c + m * complex(math.cos(ta + delta * i / k), math.sin(ta + delta * i / k)) for i in range(k + 1)]
        yield [a, *arc, b]


def _sampled_route(d: SampledRegion, a: complex, b: complex):
    """Breadth-first walk over 4-connected cells, through cell centres."""
    start, goal = d.cell_of(a), d.cell_of(b)
    ny, nx = d.mask.shape
    prev = {start: None}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        if cur == goal:
            break
        iy, ix = cur
        for nb in ((iy - 1, ix), (iy + 1, ix), (iy, ix - 1), (iy, ix + 1)):
            if 0 <= nb[0] < ny and 0 <= nb[1] < nx and d.mask[nb] and nb not in prev:
                prev[nb] = cur
                queue.append(nb)
    if goal not in prev:
        return None
    cells = []
    cur = goal
    while cur is not None:
        cells.append(cur)
        cur = prev[cur]
    h = d.cell_size
    centers = [d.origin + (ix + 0.5) * h + 1j * (iy + 0.5) * h for iy, ix in reversed(cells)]
    return [a, *centers, b]


def path_build(d: Domain, start, end, waypoints=None) -> Path:
    """Polyline from ``start`` to ``end`` that stays inside ``d``.

    The straight segment is used when it is valid (256 samples per segment);
    otherwise user waypoints, then automatic routing around an annulus hole or
    through the cells of a sampled region.
    """
    a, b = complex(start), complex(end)
    if not (d.contains(a) and d.contains(b)):
        raise DkernError("NO_PATH", "path endpoints must lie inside the domain",
                         start=a, end=b)
    if a == b:
        return Path((a,), d)
    if segment_inside(d, a, b):
        return Path((a, b), d)
    if waypoints:
        verts = [a, *(complex(w) for w in waypoints), b]
        if polyline_inside(d, verts):
            return Path(tuple(verts), d)
    candidates = []
    if isinstance(d, Annulus):
        candidates = _annulus_routes(d, a, b)
    elif isinstance(d, SampledRegion):
        route = _sampled_route(d, a, b)
        candidates = [route] if route else []
    for verts in candidates:
        if polyline_inside(d, verts):
            return Path(tuple(verts), d)
    raise DkernError("NO_PATH", "could not route a path inside the domain", start=a, end=b)


# ---------------------------------------------------------------------------
# Adaptive Gauss-Kronrod


def _gk21(f, a: complex, b: complex):
    half = 0.5 * (b - a)
    xs = 0.5 * (a + b) + half * KRONROD_NODES
    vals = np.asarray(f(xs))
    if not np.all(np.isfinite(vals)):
        raise DkernError("NAN_INTEGRAND", "integrand is not finite on the path")
    k = half * np.tensordot(KRONROD_WEIGHTS, vals, axes=(0, 0))
    g = half * np.tensordot(GAUSS_WEIGHTS, vals, axes=(0, 0))
    return k, float(np.max(np.abs(k - g)))


@dataclass(frozen=True)
class PathIntegral:
    value: complex | np.ndarray
    error: float
    evaluations: int


def integrate_path_detailed(p: Path, f, tol: float = DEFAULT_PATH_TOL, max_depth: int = MAX_DEPTH) -> PathIntegral:
    """Adaptive G10/K21 along each segment of ``p``.

    ``f`` maps an array of points to an array of values whose leading axis
    matches the points; trailing axes are integrated component-wise and the
    error estimate is their maximum.  Each piece is accepted once its
    estimate is below ``tol`` scaled by the piece's share of the path length,
    so the summed estimate stays below ``tol``.
    """
    total = p.length
    if total == 0.0:
        probe = np.asarray(f(np.array([p.start])))
        return PathIntegral(np.zeros(probe.shape[1:], dtype=complex) if probe.ndim > 1 else 0j, 0.0, 1)
    acc = None
    err = 0.0
    nevals = 0
    for a, b in p.segments():
        # fixed left-to-right order keeps the summation deterministic
        stack = [(a, b, 0)]
        pieces = []
        while stack:
            lo, hi, depth = stack.pop()
            val, e = _gk21(f, lo, hi)
            nevals += 21
            if e <= tol * abs(hi - lo) / total or e < 1e-15 * max(1.0, float(np.max(np.abs(val)))):
                pieces.append((abs(lo - a), val, e))
                continue
            if depth >= max_depth:
                raise DkernError("TOL_NOT_MET", "path integral did not reach tolerance",
                                 tol=tol, error=e, depth=depth)
            mid = 0.5 * (lo + hi)
            stack.append((mid, hi, depth + 1))
            stack.append((lo, mid, depth + 1))
        pieces.sort(key=lambda t: t[0])
        for _, val, e in pieces:
            acc = val if acc is None else acc + val
            err += e
    return PathIntegral(acc, err, nevals)


def integrate_path(p: Path, f, tol: float = DEFAULT_PATH_TOL, max_depth: int = MAX_DEPTH):
    """``int_p f(xi) dxi``; see :func:`integrate_path_detailed`."""
    res = integrate_path_detailed(p, f, tol, max_depth)
    v = res.value
    return complex(v) if np.ndim(v) == 0 else v
