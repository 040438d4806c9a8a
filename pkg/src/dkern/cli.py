"""Command-line front end.

``dkern <command> --config run.json [--out path] [--format csv|json]``

Every output file starts with a header holding the effective configuration
(defaults filled in), the library version and the tolerances in force, so
that :func:`read_output` followed by :func:`parse_config` reproduces the run.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial import Polynomial

from . import __version__, oracle
from .basis import DEFAULT_ANNULUS_ORDER, DEFAULT_DISC_ORDER, RCOND_MIN
from .domains import Annulus, Constant, Disc, as_complex, make_domain, make_weight
from .errors import DkernError
from .kernel import (NEAR_ZERO_REL, ZERO_SET_THRESHOLD, build_evaluator, higher_order_kernel, kernel_function_M,
                     M_mixed_partial, reproduce_check)
from .quadrature import DEFAULT_ANGULAR, DEFAULT_PATH_TOL, DEFAULT_RADIAL
from .ramadanov import CSV_COLUMNS, ExhaustionSpec, make_sequence, run_exhaustion, square_grid

COMMANDS = ("kernel-eval", "m-eval", "mixed-partial", "reproduce-check", "oracle-compare", "ramadanov")
FORMATS = ("csv", "json")
HEADER_TAG = "# dkern-header "
SIG_DIGITS = 15

_COMMON = {"command", "domain", "weight", "order", "radial", "angular", "depth", "tol", "basis", "format",
           "zero_set_threshold"}
_ALLOWED = {
    "kernel-eval": _COMMON | {"n", "z", "zeta", "points"},
    "m-eval": _COMMON | {"n", "z", "zeta", "points"},
    "mixed-partial": _COMMON | {"n", "z", "zeta", "points", "r", "s"},
    "reproduce-check": _COMMON | {"n", "zeta", "zetas", "f"},
    "oracle-compare": _COMMON | {"n", "z", "zeta", "points", "oracle"},
    "ramadanov": _COMMON | {"n", "sequence", "grid"},
}
_DOMAIN_KEYS = {"disc": {"center", "radius"}, "annulus": {"center", "inner", "outer"},
                "sampled": {"origin", "cell_size", "mask"}}
_WEIGHT_KEYS = {"radial_power": {"p"}, "disc_power": {"alpha"}, "sampled": {"origin", "cell_size", "values"}}
_SEQUENCE_KEYS = {"growing_discs": ({"radii"}, {"limit", "center"}),
                  "growing_annuli": ({"inner"}, {"outer", "center", "limit_inner"}),
                  "weight_ramp": ({"weights", "limit"}, {"parameters", "domain"})}
_GRID_KEYS = {"half_width", "points", "radius", "center", "list"}
ORACLES = ("disc", "brute_force", "annulus")


# ---------------------------------------------------------------------------
# Configuration


def _bad(path: str, reason: str):
    return DkernError("CONFIG_INVALID", f"{path}: {reason}", path=path)


def _one_key(spec, path: str, kinds) -> tuple[str, object]:
    if not isinstance(spec, dict) or len(spec) != 1:
        raise _bad(path, "must be an object with exactly one kind key")
    (kind, body), = spec.items()
    if kind not in kinds:
        raise _bad(f"{path}.{kind}", f"unknown kind; expected one of {sorted(kinds)}")
    return kind, body


def _check_keys(body, allowed, path: str, required=()):
    if not isinstance(body, dict):
        raise _bad(path, "must be an object")
    for k in body:
        if k not in allowed:
            raise _bad(f"{path}.{k}", "unknown field")
    for k in required:
        if k not in body:
            raise _bad(f"{path}.{k}", "missing required field")


def _number(v, path: str, *, integer=False, lo=None, hi=None, lo_open=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise _bad(path, "must be a number")
    if integer and not (isinstance(v, int) or float(v).is_integer()):
        raise _bad(path, "must be an integer")
    v = int(v) if integer else float(v)
    if not math.isfinite(v):
        raise _bad(path, "must be finite")
    if lo is not None and (v < lo or (lo_open and v == lo)):
        raise _bad(path, f"must be {'>' if lo_open else '>='} {lo}")
    if hi is not None and v > hi:
        raise _bad(path, f"must be <= {hi}")
    return v


def _complex(v, path: str) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise _bad(path, "complex numbers are [re, im] pairs")
        return complex(_number(v[0], f"{path}[0]"), _number(v[1], f"{path}[1]"))
    return complex(_number(v, path))


def _c2j(z: complex) -> list[float]:
    return [z.real, z.imag]


def _validate_domain(spec, path="domain"):
    kind, body = _one_key(spec, path, _DOMAIN_KEYS)
    _check_keys(body, _DOMAIN_KEYS[kind], f"{path}.{kind}")
    try:
        make_domain(spec)
    except (DkernError, KeyError, TypeError, ValueError) as e:
        raise _bad(path, _reason(e)) from None
    return spec


def _validate_weight(spec, path="weight"):
    kind, body = _one_key(spec, path, {"constant"} | set(_WEIGHT_KEYS))
    if isinstance(body, dict):
        _check_keys(body, _WEIGHT_KEYS.get(kind, set()), f"{path}.{kind}")
    try:
        make_weight(spec)
    except (DkernError, KeyError, TypeError, ValueError) as e:
        raise _bad(path, _reason(e)) from None
    return spec


def _reason(e: Exception) -> str:
    if isinstance(e, DkernError):
        return f"{e.code}: {e.message}"
    if isinstance(e, KeyError):
        return f"missing field {e.args[0]!r}"
    return str(e)


@dataclass(frozen=True)
class RunConfig:
    """Validated, defaults-filled run description."""

    command: str
    domain: dict
    weight: dict
    order: int | None
    radial: int = DEFAULT_RADIAL
    angular: int = DEFAULT_ANGULAR
    depth: int = 0
    tol: float = DEFAULT_PATH_TOL
    zero_set_threshold: float = ZERO_SET_THRESHOLD
    basis: dict | None = None
    format: str = "json"
    n: tuple[int, ...] = (1,)
    points: tuple[tuple[complex, complex], ...] = ()
    r: int = 0
    s: int = 0
    f: dict | None = None
    zetas: tuple[complex, ...] = ()
    oracle: str | None = None
    sequence: dict | None = None
    grid: dict | None = None

    def to_dict(self) -> dict:
        """JSON-ready form; feeding it back to :func:`parse_config` gives an equal config."""
        out = {"command": self.command}
        if self.domain is not None:
            out["domain"] = self.domain
        out.update({"weight": self.weight, "order": self.order,
               "radial": self.radial, "angular": self.angular, "depth": self.depth, "tol": self.tol,
               "zero_set_threshold": self.zero_set_threshold, "format": self.format})
        if self.basis is not None:
            out["basis"] = self.basis
        c = self.command
        if c == "ramadanov":
            out["n"] = list(self.n)
            out["sequence"] = self.sequence
            out["grid"] = self.grid
            return out
        out["n"] = self.n[0]
        if c == "reproduce-check":
            out["zetas"] = [_c2j(z) for z in self.zetas]
            out["f"] = self.f
            return out
        out["points"] = [[_c2j(z), _c2j(w)] for z, w in self.points]
        if c == "mixed-partial":
            out["r"], out["s"] = self.r, self.s
        if c == "oracle-compare":
            out["oracle"] = self.oracle
        return out


def _points(cfg: dict) -> tuple:
    if "points" in cfg:
        if "z" in cfg or "zeta" in cfg:
            raise _bad("points", "give either points or z/zeta, not both")
        pts = cfg["points"]
        if not isinstance(pts, list) or not pts:
            raise _bad("points", "must be a nonempty list of [z, zeta] pairs")
        out = []
        for i, p in enumerate(pts):
            if not isinstance(p, list) or len(p) != 2:
                raise _bad(f"points[{i}]", "must be a [z, zeta] pair")
            out.append((_complex(p[0], f"points[{i}][0]"), _complex(p[1], f"points[{i}][1]")))
        return tuple(out)
    for k in ("z", "zeta"):
        if k not in cfg:
            raise _bad(k, "missing required field")
    return ((_complex(cfg["z"], "z"), _complex(cfg["zeta"], "zeta")),)


def _sequence(spec) -> dict:
    kind, body = _one_key(spec, "sequence", _SEQUENCE_KEYS)
    req, opt = _SEQUENCE_KEYS[kind]
    _check_keys(body, req | opt, f"sequence.{kind}", required=sorted(req))
    base = f"sequence.{kind}"
    if kind == "weight_ramp":
        if not isinstance(body["weights"], list) or not body["weights"]:
            raise _bad(f"{base}.weights", "must be a nonempty list")
        for i, w in enumerate(body["weights"]):
            _validate_weight(w, f"{base}.weights[{i}]")
        _validate_weight(body["limit"], f"{base}.limit")
        if "domain" in body:
            _validate_domain(body["domain"], f"{base}.domain")
    else:
        key = "radii" if kind == "growing_discs" else "inner"
        vals = body[key]
        if not isinstance(vals, list) or not vals:
            raise _bad(f"{base}.{key}", "must be a nonempty list")
        for i, v in enumerate(vals):
            _number(v, f"{base}.{key}[{i}]", lo=0, lo_open=True)
    try:
        make_sequence(spec)
    except (DkernError, KeyError, TypeError, ValueError) as e:
        raise _bad("sequence", _reason(e)) from None
    return spec


def _grid(spec) -> dict:
    if spec is None:
        return {"half_width": 0.5, "points": 9, "radius": 0.5}
    _check_keys(spec, _GRID_KEYS, "grid")
    if "list" in spec:
        if set(spec) != {"list"}:
            raise _bad("grid", "an explicit list excludes the lattice fields")
        if not isinstance(spec["list"], list) or not spec["list"]:
            raise _bad("grid.list", "must be a nonempty list")
        return {"list": [_c2j(_complex(v, f"grid.list[{i}]")) for i, v in enumerate(spec["list"])]}
    out = {"half_width": _number(spec.get("half_width", 0.5), "grid.half_width", lo=0, lo_open=True),
           "points": _number(spec.get("points", 9), "grid.points", integer=True, lo=1, hi=101),
           "radius": (None if spec.get("radius", 0.5) is None
                      else _number(spec.get("radius", 0.5), "grid.radius", lo=0, lo_open=True))}
    if "center" in spec:
        out["center"] = _c2j(_complex(spec["center"], "grid.center"))
    return out


def grid_from_config(g: dict) -> tuple[complex, ...]:
    if "list" in g:
        return tuple(as_complex(v) for v in g["list"])
    return square_grid(g["half_width"], g["points"], g["radius"], as_complex(g.get("center", 0)))


def parse_config(text) -> RunConfig:
    """Validate a JSON document (string or already-decoded dict) into a :class:`RunConfig`."""
    if isinstance(text, (str, bytes)):
        try:
            cfg = json.loads(text)
        except json.JSONDecodeError as e:
            raise _bad("$", f"malformed JSON: {e.msg} at line {e.lineno}") from None
    else:
        cfg = text
    if not isinstance(cfg, dict):
        raise _bad("$", "configuration must be a JSON object")
    if "command" not in cfg:
        raise _bad("command", "missing required field")
    cmd = cfg["command"]
    if cmd not in COMMANDS:
        raise _bad("command", f"unknown command {cmd!r}; expected one of {list(COMMANDS)}")
    for k in cfg:
        if k not in _ALLOWED[cmd]:
            raise _bad(k, f"unknown field for command {cmd}")

    if cmd == "ramadanov" and "domain" not in cfg:
        domain = None
    else:
        if "domain" not in cfg:
            raise _bad("domain", "missing required field")
        domain = _validate_domain(cfg["domain"])
    weight = _validate_weight(cfg.get("weight", {"constant": 1.0}))

    order = cfg.get("order")
    if order is not None:
        order = _number(order, "order", integer=True, lo=1, hi=400)
    elif cmd != "ramadanov":
        order = DEFAULT_ANNULUS_ORDER if "annulus" in domain else DEFAULT_DISC_ORDER
    kw = dict(
        radial=_number(cfg.get("radial", DEFAULT_RADIAL), "radial", integer=True, lo=2, hi=4000),
        angular=_number(cfg.get("angular", DEFAULT_ANGULAR), "angular", integer=True, lo=4, hi=16000),
        depth=_number(cfg.get("depth", 0), "depth", integer=True, lo=0, hi=8),
        tol=_number(cfg.get("tol", DEFAULT_PATH_TOL), "tol", lo=0, lo_open=True, hi=1.0),
        zero_set_threshold=_number(cfg.get("zero_set_threshold", ZERO_SET_THRESHOLD), "zero_set_threshold",
                                   lo=0, hi=1.0),
    )
    fmt = cfg.get("format", "json")
    if fmt not in FORMATS:
        raise _bad("format", f"must be one of {list(FORMATS)}")
    basis = cfg.get("basis")
    if basis is not None:
        _check_keys(basis, {"exponents"}, "basis", required=("exponents",))
        ex = basis["exponents"]
        if not isinstance(ex, list) or not ex:
            raise _bad("basis.exponents", "must be a nonempty list of integers")
        basis = {"exponents": [_number(e, f"basis.exponents[{i}]", integer=True, lo=-400, hi=400)
                               for i, e in enumerate(ex)]}
        if -1 in basis["exponents"]:
            raise _bad("basis.exponents", "exponent -1 has no primitive")
        if len(set(basis["exponents"])) != len(basis["exponents"]):
            raise _bad("basis.exponents", "duplicate exponents")

    if cmd == "ramadanov":
        nv = cfg.get("n", [1])
        nlist = nv if isinstance(nv, list) else [nv]
        if not nlist:
            raise _bad("n", "must be nonempty")
        n = tuple(_number(v, f"n[{i}]", integer=True, lo=1, hi=8) for i, v in enumerate(nlist))
        if "sequence" not in cfg:
            raise _bad("sequence", "missing required field")
        seq = _sequence(cfg["sequence"])
        if domain is None and "weight_ramp" in seq and "domain" not in seq["weight_ramp"]:
            raise _bad("domain", "weight_ramp needs a domain")
        return RunConfig(cmd, domain, weight, order, format=fmt, basis=basis, n=n, sequence=seq,
                         grid=_grid(cfg.get("grid")), **kw)

    n = (_number(cfg.get("n", 1), "n", integer=True, lo=1, hi=8),)
    if cmd == "reproduce-check":
        if "zetas" in cfg and "zeta" in cfg:
            raise _bad("zetas", "give either zeta or zetas, not both")
        if "zetas" in cfg:
            if not isinstance(cfg["zetas"], list) or not cfg["zetas"]:
                raise _bad("zetas", "must be a nonempty list")
            zetas = tuple(_complex(v, f"zetas[{i}]") for i, v in enumerate(cfg["zetas"]))
        elif "zeta" in cfg:
            zetas = (_complex(cfg["zeta"], "zeta"),)
        else:
            raise _bad("zeta", "missing required field")
        if "f" not in cfg:
            raise _bad("f", "missing required field")
        f = cfg["f"]
        kind, body = _one_key(f, "f", {"coefficients", "shift_power"})
        if kind == "coefficients":
            if not isinstance(body, list) or not body:
                raise _bad("f.coefficients", "must be a nonempty list")
            f = {"coefficients": [_c2j(_complex(c, f"f.coefficients[{i}]")) for i, c in enumerate(body)]}
        else:
            f = {"shift_power": _number(body, "f.shift_power", integer=True, lo=0, hi=40)}
        return RunConfig(cmd, domain, weight, order, format=fmt, basis=basis, n=n, zetas=zetas, f=f, **kw)

    points = _points(cfg)
    if cmd == "mixed-partial":
        r = _number(cfg.get("r", 0), "r", integer=True, lo=0, hi=4)
        s = _number(cfg.get("s", 0), "s", integer=True, lo=0, hi=4)
        return RunConfig(cmd, domain, weight, order, format=fmt, basis=basis, n=n, points=points, r=r, s=s, **kw)
    if cmd == "oracle-compare":
        orc = cfg.get("oracle", "disc")
        if orc not in ORACLES:
            raise _bad("oracle", f"must be one of {list(ORACLES)}")
        return RunConfig(cmd, domain, weight, order, format=fmt, basis=basis, n=n, points=points, oracle=orc,
                         **kw)
    return RunConfig(cmd, domain, weight, order, format=fmt, basis=basis, n=n, points=points, **kw)


# ---------------------------------------------------------------------------
# Pipelines


@dataclass
class Result:
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)


def _evaluator(cfg: RunConfig):
    exps = cfg.basis["exponents"] if cfg.basis else None
    return build_evaluator(cfg.domain, cfg.weight, cfg.order, radial=cfg.radial, angular=cfg.angular,
                           depth=cfg.depth, exponents=exps, zero_set_threshold=cfg.zero_set_threshold,
                           path_tol=cfg.tol)


_PAIR_COLS = ("z_re", "z_im", "zeta_re", "zeta_im", "n")


def _run_kernel_eval(cfg):
    ke = _evaluator(cfg)
    n = cfg.n[0]
    res = Result(_PAIR_COLS + ("value_re", "value_im"))
    for z, w in cfg.points:
        v = complex(higher_order_kernel(ke, z, w, n))
        res.rows.append((z.real, z.imag, w.real, w.imag, n, v.real, v.imag))
    return res


def _run_m_eval(cfg):
    ke = _evaluator(cfg)
    n = cfg.n[0]
    res = Result(_PAIR_COLS + ("value_re", "value_im", "error_estimate"))
    for z, w in cfg.points:
        ev = kernel_function_M(ke, z, w, n, tol=cfg.tol)
        res.rows.append((z.real, z.imag, w.real, w.imag, n, ev.value.real, ev.value.imag, ev.error_estimate))
    return res


def _run_mixed_partial(cfg):
    ke = _evaluator(cfg)
    n = cfg.n[0]
    res = Result(_PAIR_COLS + ("r", "s", "value_re", "value_im"))
    for z, w in cfg.points:
        v = M_mixed_partial(ke, z, w, n, cfg.r, cfg.s, tol=cfg.tol)
        res.rows.append((z.real, z.imag, w.real, w.imag, n, cfg.r, cfg.s, v.real, v.imag))
    return res


def _test_function(spec: dict, zeta: complex) -> Polynomial:
    if "coefficients" in spec:
        return Polynomial([as_complex(c) for c in spec["coefficients"]])
    return Polynomial([-zeta, 1.0]) ** spec["shift_power"]


def _run_reproduce(cfg):
    ke = _evaluator(cfg)
    n = cfg.n[0]
    res = Result(("zeta_re", "zeta_im", "n", "residual"))
    for w in cfg.zetas:
        res.rows.append((w.real, w.imag, n, reproduce_check(ke, _test_function(cfg.f, w), w, n)))
    return res


def _run_oracle_compare(cfg):
    n = cfg.n[0]
    dom = make_domain(cfg.domain)
    wt = make_weight(cfg.weight)
    res = Result(_PAIR_COLS + ("numeric_re", "numeric_im", "oracle_re", "oracle_im", "abs_diff"))
    if cfg.oracle == "brute_force":
        ke = _evaluator(cfg)
        cache = {}
        for z, w in cfg.points:
            if w not in cache:
                cache[w] = oracle.brute_force_Mn(dom, wt, w, n, cfg.order, radial=cfg.radial, angular=cfg.angular)
            a = complex(higher_order_kernel(ke, z, w, n))
            b = complex(cache[w].derivative(z))
            res.rows.append((z.real, z.imag, w.real, w.imag, n, a.real, a.imag, b.real, b.imag, abs(a - b)))
        return res
    if not isinstance(wt, Constant) or dom.center != 0:
        raise DkernError("ORACLE_UNAVAILABLE", "closed forms need a constant weight on a centred domain")
    if cfg.oracle == "disc":
        if not isinstance(dom, Disc):
            raise DkernError("ORACLE_UNAVAILABLE", "the disc oracle needs a disc domain")
        ke = _evaluator(cfg)
        for z, w in cfg.points:
            a = kernel_function_M(ke, z, w, n, tol=cfg.tol).value
            b = complex(oracle.scaled_disc_Mn(dom.radius, z, w, n)) / wt.value
            res.rows.append((z.real, z.imag, w.real, w.imag, n, a.real, a.imag, b.real, b.imag, abs(a - b)))
        return res
    if not isinstance(dom, Annulus) or dom.outer != 1 or n != 1:
        raise DkernError("ORACLE_UNAVAILABLE", "the annulus oracle needs an annulus with outer radius 1 and n = 1")
    ke = _evaluator(cfg)
    for z, w in cfg.points:
        a = complex(higher_order_kernel(ke, z, w, 1))
        b = complex(oracle.annulus_reduced_kernel(dom.inner, z, w)) / wt.value
        res.rows.append((z.real, z.imag, w.real, w.imag, n, a.real, a.imag, b.real, b.imag, abs(a - b)))
    return res


def _run_ramadanov(cfg):
    seq = make_sequence(cfg.sequence, cfg.domain)
    spec = ExhaustionSpec(seq, make_weight(cfg.weight), cfg.n, grid_from_config(cfg.grid), cfg.order,
                          cfg.radial, cfg.angular)
    table = run_exhaustion(spec)
    res = Result(CSV_COLUMNS)
    res.rows = [r.csv_values() for r in table.rows]
    res.flags = list(table.flags)
    return res


_PIPELINES = {"kernel-eval": _run_kernel_eval, "m-eval": _run_m_eval, "mixed-partial": _run_mixed_partial,
              "reproduce-check": _run_reproduce, "oracle-compare": _run_oracle_compare,
              "ramadanov": _run_ramadanov}


def execute(cfg: RunConfig) -> Result:
    return _PIPELINES[cfg.command](cfg)


# ---------------------------------------------------------------------------
# Output


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), f".{SIG_DIGITS}g")


def _round(v):
    """Round floats to 15 significant digits, recursively."""
    if isinstance(v, bool) or v is None or isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(format(float(v), f".{SIG_DIGITS}g"))
    if isinstance(v, dict):
        return {k: _round(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_round(x) for x in v]
    return v


def header(cfg: RunConfig, flags=()) -> dict:
    h = {"version": __version__, "config": cfg.to_dict(),
         "tolerances": {"path_tol": cfg.tol, "zero_set_threshold": cfg.zero_set_threshold,
                        "near_zero_rel": NEAR_ZERO_REL, "rcond_min": RCOND_MIN}}
    if flags:
        h["flags"] = list(flags)
    return _round(h)


def render(cfg: RunConfig, res: Result, fmt: str) -> str:
    h = header(cfg, res.flags)
    if fmt == "json":
        doc = {"header": h, "columns": list(res.columns), "rows": [_round(list(r)) for r in res.rows]}
        return json.dumps(doc, indent=1, sort_keys=False, allow_nan=True) + "\n"
    buf = io.StringIO()
    buf.write(HEADER_TAG + json.dumps(h, sort_keys=False) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(res.columns)
    for r in res.rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def read_output(text: str) -> tuple[dict, list[str], list[list]]:
    """Parse rendered CSV or JSON back into ``(header, columns, rows)``."""
    if text.startswith(HEADER_TAG):
        first, _, rest = text.partition("\n")
        h = json.loads(first[len(HEADER_TAG):])
        rows = list(csv.reader(io.StringIO(rest)))
        cols, body = rows[0], rows[1:]
        return h, cols, [[_parse_cell(c) for c in r] for r in body]
    doc = json.loads(text)
    return doc["header"], doc["columns"], doc["rows"]


def _parse_cell(c: str):
    try:
        return int(c)
    except ValueError:
        return float(c)


def run(cfg: RunConfig, out: str | None = None, fmt: str | None = None, stream=None) -> int:
    """Execute ``cfg``; write the artifact to ``out`` (or ``stream``). Returns the exit status."""
    stream = stream or sys.stdout
    if fmt and fmt != cfg.format:
        cfg = replace(cfg, format=fmt)
    fmt = cfg.format
    try:
        res = execute(cfg)
        text = render(cfg, res, fmt)
    except DkernError as e:
        stream.write(json.dumps({"error": _round(e.to_dict())}) + "\n")
        return e.exit_status
    except FloatingPointError as e:
        err = DkernError("NUMERIC_ERROR", str(e))
        stream.write(json.dumps({"error": err.to_dict()}) + "\n")
        return err.exit_status
    if out is None:
        stream.write(text)
        return 0
    try:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as e:
        err = DkernError("IO_ERROR", f"cannot write {out}: {e.strerror}", path=out)
        stream.write(json.dumps({"error": err.to_dict()}) + "\n")
        return err.exit_status
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dkern", description="Weighted kernel functions and their derivatives.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", help="output file (default: standard output)")
    p.add_argument("--format", choices=FORMATS, help="output format (default: from config, else json)")
    p.add_argument("--version", action="version", version=f"dkern {__version__}")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        err = DkernError("IO_ERROR", f"cannot read {args.config}: {e.strerror}", path=args.config)
        print(json.dumps({"error": err.to_dict()}))
        return err.exit_status
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        err = _bad("$", f"malformed JSON: {e.msg} at line {e.lineno}")
        print(json.dumps({"error": err.to_dict()}))
        return err.exit_status
    if isinstance(doc, dict):
        if "command" in doc and doc["command"] != args.command:
            err = _bad("command", f"config says {doc['command']!r} but {args.command!r} was requested")
            print(json.dumps({"error": err.to_dict()}))
            return err.exit_status
        doc.setdefault("command", args.command)
    try:
        cfg = parse_config(doc)
    except DkernError as e:
        print(json.dumps({"error": e.to_dict()}))
        return e.exit_status
    return run(cfg, args.out, args.format)


if __name__ == "__main__":
    sys.exit(main())
