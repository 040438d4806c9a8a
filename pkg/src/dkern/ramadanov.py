"""Exhaustion experiments: kernels of a sequence of domains or weights
compared against the kernel of their limit on a fixed compact grid.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import oracle
from .basis import DEFAULT_ANNULUS_ORDER, DEFAULT_DISC_ORDER
from .domains import Annulus, Disc, Domain, Weight, as_complex, contains, make_domain, make_weight
from .domains import Constant
from .errors import DkernError
from .kernel import KernelEvaluator, M_partials_grid, build_evaluator

PARTIAL_ORDERS = ((0, 0), (1, 0), (0, 1))
AUTO_ORDER_TARGET = 1e-13
AUTO_ORDER_MAX = 200
CSV_COLUMNS = ("j", "domain_param", "n", "sup_dev_M", "sup_dev_dzeta", "sup_dev_dzetabar",
               "argmax_z_re", "argmax_z_im", "argmax_zeta_re", "argmax_zeta_im")


# ---------------------------------------------------------------------------
# Sequences


@dataclass(frozen=True)
class GrowingDiscs:
    """Discs ``|z - center| < radii[j]`` tending to ``|z - center| < limit``."""

    radii: tuple[float, ...]
    limit: float = 1.0
    center: complex = 0j

    def __post_init__(self):
        if not self.radii:
            raise DkernError("INVALID_GEOMETRY", "radii list is empty")
        if any(not (0 < r <= self.limit) for r in self.radii):
            raise DkernError("INVALID_GEOMETRY", "radii must lie in (0, limit]", limit=self.limit)

    def __len__(self):
        return len(self.radii)

    def params(self):
        return list(self.radii)

    def domain(self, j: int) -> Domain:
        return Disc(self.center, self.radii[j])

    def limit_domain(self) -> Domain:
        return Disc(self.center, self.limit)


@dataclass(frozen=True)
class GrowingAnnuli:
    """Annuli ``inner[j] < |z - center| < outer`` with shrinking inner radius."""

    inner: tuple[float, ...]
    outer: float = 1.0
    center: complex = 0j
    limit_inner: float = 0.0

    def __post_init__(self):
        if not self.inner:
            raise DkernError("INVALID_GEOMETRY", "inner radii list is empty")
        if any(not (self.limit_inner <= r < self.outer) or r <= 0 for r in self.inner):
            raise DkernError("INVALID_GEOMETRY", "inner radii must lie in (limit_inner, outer)")

    def __len__(self):
        return len(self.inner)

    def params(self):
        return list(self.inner)

    def domain(self, j: int) -> Domain:
        return Annulus(self.center, self.inner[j], self.outer)

    def limit_domain(self) -> Domain:
        # the punctured disc carries the same reduced kernel as the full disc
        if self.limit_inner == 0:
            return Disc(self.center, self.outer)
        return Annulus(self.center, self.limit_inner, self.outer)


@dataclass(frozen=True)
class WeightRamp:
    """A fixed domain with weights ``weights[j]`` increasing to ``limit``."""

    domain_: Domain
    weights: tuple[Weight, ...]
    limit: Weight
    parameters: tuple[float, ...] | None = None

    def __post_init__(self):
        if not self.weights:
            raise DkernError("CONFIG_INVALID", "weights list is empty")
        if self.parameters is not None and len(self.parameters) != len(self.weights):
            raise DkernError("CONFIG_INVALID", "parameters and weights differ in length")

    def __len__(self):
        return len(self.weights)

    def params(self):
        return list(self.parameters) if self.parameters is not None else list(range(1, len(self) + 1))

    def domain(self, j: int) -> Domain:
        return self.domain_

    def limit_domain(self) -> Domain:
        return self.domain_


Sequence_ = GrowingDiscs | GrowingAnnuli | WeightRamp


@dataclass(frozen=True)
class ExhaustionSpec:
    sequence: Sequence_
    weight: Weight = field(default_factory=lambda: Constant(1.0))
    orders: tuple[int, ...] = (1,)
    grid: tuple[complex, ...] = ()
    basis_order: int | None = None
    radial: int = 80
    angular: int = 160

    def weight_at(self, j: int) -> Weight:
        if isinstance(self.sequence, WeightRamp):
            return self.sequence.weights[j]
        return self.weight

    def limit_weight(self) -> Weight:
        if isinstance(self.sequence, WeightRamp):
            return self.sequence.limit
        return self.weight


def square_grid(half_width: float = 0.5, points: int = 9, radius: float | None = 0.5,
                center: complex = 0j) -> tuple[complex, ...]:
    """``points x points`` lattice on a centred square, cut to ``|z - center| <= radius``."""
    t = np.linspace(-half_width, half_width, points)
    out = []
    for y in t:
        for x in t:
            z = complex(x, y)
            if radius is None or abs(z) <= radius + 1e-12:
                out.append(center + z)
    return tuple(out)


def first_valid_index(seq: Sequence_, grid) -> np.ndarray:
    """For every grid point, the first j from which it lies in all later domains.

    Raises ``GRID_ESCAPES`` when a point is not in the last domain.
    """
    grid = np.asarray(grid, dtype=complex)
    inside = np.array([np.asarray(contains(seq.domain(j), grid), dtype=bool) for j in range(len(seq))])
    # suffix "and": inside from j onwards
    tail = np.logical_and.accumulate(inside[::-1], axis=0)[::-1]
    if not tail[-1].all():
        bad = grid[~tail[-1]]
        raise DkernError("GRID_ESCAPES", "grid point never enters the sequence", point=complex(bad[0]))
    return np.argmax(tail, axis=0)


# ---------------------------------------------------------------------------
# Deviation measurement


def _sup_argmax(dev: np.ndarray, zs: np.ndarray, zetas: np.ndarray) -> tuple[float, tuple[complex, complex]]:
    m = float(np.max(dev))
    idx = np.flatnonzero(dev == m)
    key = min(idx, key=lambda i: (zs[i].real, zs[i].imag, zetas[i].real, zetas[i].imag))
    return m, (complex(zs[key]), complex(zetas[key]))


def deviation_sup(eval_a, eval_b, grid) -> tuple[float, tuple[complex, complex]]:
    """``max |A(z, zeta) - B(z, zeta)|`` over ``grid`` (pairs) with its argmax.

    Ties go to the lexicographically smallest ``(Re z, Im z, Re zeta, Im zeta)``.
    """
    pairs = [(as_complex(z), as_complex(w)) for z, w in grid]
    if not pairs:
        raise DkernError("EMPTY_GRID", "deviation grid is empty")
    zs = np.array([p[0] for p in pairs])
    zetas = np.array([p[1] for p in pairs])
    dev = np.array([abs(complex(eval_a(z, w)) - complex(eval_b(z, w))) for z, w in pairs])
    if not np.all(np.isfinite(dev)):
        raise DkernError("NAN_INTEGRAND", "deviation is not finite")
    return _sup_argmax(dev, zs, zetas)


def auto_order(d: Domain, points, target: float = AUTO_ORDER_TARGET) -> int:
    """Truncation order for which the basis tail is below ``target`` at ``points``.

    Uses the geometric decay ``q**N`` of the kernel series for a centred disc
    or annulus; other domains keep the default.
    """
    pts = np.asarray(points, dtype=complex)
    if isinstance(d, Disc):
        a = np.abs(pts - d.center)
        q = float(np.max(a)) ** 2 / d.radius**2
        base = DEFAULT_DISC_ORDER
    elif isinstance(d, Annulus):
        a = np.abs(pts - d.center)
        q = max(float(np.max(a)) ** 2 / d.outer**2, d.inner**2 / float(np.min(a)) ** 2)
        base = DEFAULT_ANNULUS_ORDER
    else:
        return DEFAULT_DISC_ORDER
    if q <= 0:
        return base
    if q >= 1:
        return AUTO_ORDER_MAX
    return int(min(AUTO_ORDER_MAX, max(base, math.ceil(math.log(target) / math.log(q)) + 10)))


@dataclass(frozen=True)
class ConvergenceRow:
    j: int
    domain_param: float
    n: int
    sup_dev_M: float
    sup_dev_dzeta: float
    sup_dev_dzetabar: float
    argmax: tuple[complex, complex]
    sup_dev_K: float
    pairs: int
    basis_order: int
    closed_form_M: float | None = None
    closed_form_dzeta: float | None = None
    closed_form_dzetabar: float | None = None
    closed_form_K: float | None = None

    def csv_values(self) -> tuple:
        z, w = self.argmax
        return (self.j, self.domain_param, self.n, self.sup_dev_M, self.sup_dev_dzeta, self.sup_dev_dzetabar,
                z.real, z.imag, w.real, w.imag)


@dataclass(frozen=True)
class ConvergenceTable:
    rows: tuple[ConvergenceRow, ...]
    flags: tuple[str, ...] = ()

    def trace(self, column: str, n: int | None = None) -> list[float]:
        return [getattr(r, column) for r in self.rows if n is None or r.n == n]

    @property
    def hypothesis_ok(self) -> bool:
        return "CONVERGENCE_HYPOTHESIS_FAIL" not in self.flags


def _evaluate(ke: KernelEvaluator, zs: np.ndarray, zetas: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """``(M, dM/dzeta, dM/dconj(zeta))`` columns and ``K(z, zeta)`` at the pairs."""
    vals = np.empty((len(zs), 3), dtype=complex)
    for w in np.unique(zetas):
        sel = zetas == w
        vals[sel] = M_partials_grid(ke, zs[sel], w, n, PARTIAL_ORDERS)
    kv = np.sum(ke.phi(zs) * np.conj(ke.phi(zetas)), axis=-1)
    return vals, kv


def _closed_forms(spec: ExhaustionSpec, j: int, n: int, zs, zetas):
    """Exact deviations when both the j-th and the limit kernels are known.

    Returns ``(M, dM/dzeta, dM/dconj(zeta), K)`` sup deviations, with ``None``
    where no closed form exists, or ``None`` altogether.
    """
    seq = spec.sequence
    w = spec.weight
    if isinstance(seq, WeightRamp) or not isinstance(w, Constant) or seq.center != 0:
        return None
    c = 1.0 / w.value  # kernels scale inversely with a constant weight
    if isinstance(seq, GrowingDiscs):
        def fam(rho):
            parts = np.array([oracle.scaled_disc_Mn(rho, zs, zetas, n),
                              oracle.scaled_disc_Mn_dzeta(rho, zs, zetas, n),
                              oracle.scaled_disc_Mn_dzetabar(rho, zs, zetas, n)])
            return parts * c, oracle.scaled_disc_Kn(rho, zs, zetas, 1) * c

        a, ka = fam(seq.radii[j])
        b, kb = fam(seq.limit)
        dev = np.max(np.abs(a - b), axis=1)
        return tuple(float(x) for x in dev) + (float(np.max(np.abs(ka - kb))),)
    if seq.outer == 1 and seq.limit_inner == 0:
        ka = oracle.annulus_reduced_kernel(seq.inner[j], zs, zetas) * c
        kb = c / (math.pi * (1 - zs * np.conj(zetas)) ** 2)
        return (None, None, None, float(np.max(np.abs(ka - kb))))
    return None


def _thread_count() -> int:
    env = os.environ.get("DKERN_THREADS")
    if env:
        try:
            v = int(env)
        except ValueError:
            raise DkernError("CONFIG_INVALID", f"DKERN_THREADS must be an integer, got {env!r}") from None
        if v < 1:
            raise DkernError("CONFIG_INVALID", "DKERN_THREADS must be >= 1")
        return v
    return os.cpu_count() or 1


def run_exhaustion(spec: ExhaustionSpec) -> ConvergenceTable:
    """Deviation table of the sequence against its limit over all grid pairs.

    A pair enters the sup at index j once both points lie in every domain
    from j on.  M-deviations are reported alongside the reduced-kernel
    deviation; if the latter does not decrease from first to last index the
    table carries ``CONVERGENCE_HYPOTHESIS_FAIL``.
    """
    seq = spec.sequence
    grid = np.asarray(spec.grid, dtype=complex)
    if grid.size == 0:
        raise DkernError("EMPTY_GRID", "exhaustion grid is empty")
    if any(n < 1 for n in spec.orders):
        raise DkernError("INVALID_ORDER", "kernel orders must be >= 1")
    first = first_valid_index(seq, grid)
    gi, gk = np.meshgrid(np.arange(len(grid)), np.arange(len(grid)), indexing="ij")
    gi, gk = gi.ravel(), gk.ravel()
    pair_first = np.maximum(first[gi], first[gk])
    params = seq.params()

    limit_dom = seq.limit_domain()
    lim_order = spec.basis_order or auto_order(limit_dom, grid)
    limit_ke = build_evaluator(limit_dom, spec.limit_weight(), lim_order, radial=spec.radial, angular=spec.angular)
    zs_all, zetas_all = grid[gi], grid[gk]
    limit_vals = {n: _evaluate(limit_ke, zs_all, zetas_all, n) for n in spec.orders}

    def one(j: int) -> list[ConvergenceRow]:
        sel = pair_first <= j
        if not sel.any():
            return []
        zs, zetas = zs_all[sel], zetas_all[sel]
        d = seq.domain(j)
        order = spec.basis_order or auto_order(d, np.concatenate([zs, zetas]))
        ke = build_evaluator(d, spec.weight_at(j), order, radial=spec.radial, angular=spec.angular)
        rows = []
        for n in spec.orders:
            vals, kv = _evaluate(ke, zs, zetas, n)
            lv, lk = limit_vals[n][0][sel], limit_vals[n][1][sel]
            dev = np.abs(vals - lv)
            if not np.all(np.isfinite(dev)):
                raise DkernError("NAN_INTEGRAND", "deviation is not finite", j=j + 1)
            sm, arg = _sup_argmax(dev[:, 0], zs, zetas)
            cf = _closed_forms(spec, j, n, zs, zetas)
            rows.append(ConvergenceRow(
                j=j + 1, domain_param=float(params[j]), n=n, sup_dev_M=sm,
                sup_dev_dzeta=float(np.max(dev[:, 1])), sup_dev_dzetabar=float(np.max(dev[:, 2])),
                argmax=arg, sup_dev_K=float(np.max(np.abs(kv - lk))), pairs=int(sel.sum()),
                basis_order=order,
                closed_form_M=cf[0] if cf else None, closed_form_dzeta=cf[1] if cf else None,
                closed_form_dzetabar=cf[2] if cf else None, closed_form_K=cf[3] if cf else None))
        return rows

    workers = min(_thread_count(), len(seq))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(one, range(len(seq))))
    else:
        chunks = [one(j) for j in range(len(seq))]
    rows = tuple(r for chunk in chunks for r in chunk)
    flags = []
    for n in spec.orders:
        kt = [r.sup_dev_K for r in rows if r.n == n]
        if len(kt) >= 2 and not kt[-1] < kt[0]:
            flags.append("CONVERGENCE_HYPOTHESIS_FAIL")
            break
    return ConvergenceTable(rows, tuple(flags))


def make_sequence(spec: dict, domain=None):
    """Build a sequence from ``{"growing_discs": ...}``, ``{"growing_annuli": ...}``
    or ``{"weight_ramp": ...}``."""
    if not isinstance(spec, dict) or len(spec) != 1:
        raise DkernError("CONFIG_INVALID", "sequence must have exactly one key", path="sequence")
    (kind, body), = spec.items()
    if kind == "growing_discs":
        return GrowingDiscs(tuple(float(r) for r in body["radii"]), float(body.get("limit", 1.0)),
                            as_complex(body.get("center", 0)))
    if kind == "growing_annuli":
        return GrowingAnnuli(tuple(float(r) for r in body["inner"]), float(body.get("outer", 1.0)),
                             as_complex(body.get("center", 0)), float(body.get("limit_inner", 0.0)))
    if kind == "weight_ramp":
        dom = make_domain(body.get("domain", domain))
        params = body.get("parameters")
        return WeightRamp(dom, tuple(make_weight(w) for w in body["weights"]), make_weight(body["limit"]),
                          tuple(float(p) for p in params) if params is not None else None)
    raise DkernError("CONFIG_INVALID", f"unknown sequence kind {kind!r}", path="sequence")
