import math

import numpy as np
import pytest

from dkern.domains import make_domain, make_weight
from dkern.errors import DkernError
from dkern.oracle import disc_Mn, scaled_disc_Mn
from dkern.ramadanov import (CSV_COLUMNS, ExhaustionSpec, GrowingAnnuli, GrowingDiscs, WeightRamp, auto_order,
                             deviation_sup, first_valid_index, make_sequence, run_exhaustion, square_grid)

GRID = square_grid()
PAIRS = [(z, w) for z in GRID for w in GRID]


def test_square_grid_shape():
    assert len(GRID) == 49
    assert all(abs(z) <= 0.5 + 1e-12 for z in GRID)
    assert 0j in GRID and 0.5 in GRID


def test_deviation_sup_identical():
    f = lambda z, w: disc_Mn(z, w, 1)
    value, where = deviation_sup(f, f, PAIRS[:50])
    assert value == 0
    # every pair ties; the lexicographically smallest wins
    assert where == min(PAIRS[:50], key=lambda p: (p[0].real, p[0].imag, p[1].real, p[1].imag))


def test_deviation_sup_closed_forms():
    a = lambda z, w: disc_Mn(z, w, 1)
    b = lambda z, w: scaled_disc_Mn(0.875, z, w, 1)
    value, (z, w) = deviation_sup(a, b, PAIRS)
    brute = max(abs(a(p, q) - b(p, q)) for p, q in PAIRS)
    assert value == brute > 0
    assert abs(a(z, w) - b(z, w)) == value


def test_deviation_sup_empty():
    with pytest.raises(DkernError) as e:
        deviation_sup(lambda z, w: 0, lambda z, w: 0, [])
    assert e.value.code == "EMPTY_GRID"


def test_first_valid_index_and_escape():
    seq = GrowingDiscs((0.5, 0.75, 0.875))
    first = first_valid_index(seq, [0, 0.5, 0.4j, 0.8j])
    assert first.tolist() == [0, 1, 0, 2]
    # eventually contained: a non-monotone prefix only delays entry
    seq = GrowingDiscs((0.8, 0.3, 0.6, 0.9))
    assert first_valid_index(seq, [0.5, 0.1]).tolist() == [2, 0]
    with pytest.raises(DkernError) as e:
        first_valid_index(GrowingDiscs((0.5, 0.6)), [0.7])
    assert e.value.code == "GRID_ESCAPES"
    with pytest.raises(DkernError) as e:
        first_valid_index(GrowingAnnuli((0.3, 0.1)), [0.0, 0.5])
    assert e.value.code == "GRID_ESCAPES"


def test_sequence_validation():
    with pytest.raises(DkernError):
        GrowingDiscs((0.5, 1.2), limit=1.0)
    with pytest.raises(DkernError):
        GrowingDiscs(())
    with pytest.raises(DkernError):
        GrowingAnnuli((1.2,), outer=1.0)
    with pytest.raises(DkernError):
        make_sequence({"growing_squares": {}})


def test_auto_order_grows_near_the_rim():
    d = make_domain({"disc": {"radius": 0.5}})
    assert auto_order(d, [0.1, 0.2]) == 40
    assert auto_order(d, [0.45]) > 100


def test_growing_discs_trace_matches_closed_form():
    seq = GrowingDiscs(tuple(1 - 2.0**-j for j in range(1, 9)))
    table = run_exhaustion(ExhaustionSpec(seq, grid=GRID))
    assert [r.j for r in table.rows] == list(range(1, 9))
    assert table.hypothesis_ok
    for r in table.rows:
        assert abs(r.sup_dev_M - r.closed_form_M) < 1e-5
        assert abs(r.sup_dev_dzeta - r.closed_form_dzeta) < 1e-5
        assert abs(r.sup_dev_dzetabar - r.closed_form_dzetabar) < 1e-5
        assert abs(r.sup_dev_K - r.closed_form_K) < 1e-5
        assert r.sup_dev_M >= 0 and math.isfinite(r.sup_dev_M)
    trace = table.trace("sup_dev_M")
    assert all(b < a for a, b in zip(trace, trace[1:]))
    assert trace[-1] < trace[0] / 10
    assert table.rows[0].pairs == 45 * 45 and table.rows[-1].pairs == 49 * 49


def test_limit_radius_in_sequence_gives_zero():
    table = run_exhaustion(ExhaustionSpec(GrowingDiscs((0.75, 1.0)), grid=GRID))
    assert table.rows[-1].sup_dev_M < 1e-12
    assert table.rows[-1].sup_dev_dzeta < 1e-12


def test_growing_annuli_trace_reported():
    grid = tuple(r * np.exp(2j * math.pi * k / 8) for r in (0.35, 0.5, 0.6) for k in range(8))
    table = run_exhaustion(ExhaustionSpec(GrowingAnnuli((0.3, 0.2, 0.1, 0.05)), grid=grid))
    for r in table.rows:
        assert math.isfinite(r.sup_dev_M) and r.sup_dev_M >= 0
        assert abs(r.sup_dev_K - r.closed_form_K) < 1e-6
    assert table.rows[-1].sup_dev_M < table.rows[0].sup_dev_M


def test_weight_ramp_and_multiple_orders():
    d = make_domain({"disc": {"radius": 1}})
    weights = tuple(make_weight({"disc_power": a}) for a in (1.0, 0.5, 0.1, 0.0))
    seq = WeightRamp(d, weights, make_weight({"constant": 1}), (1.0, 0.5, 0.1, 0.0))
    table = run_exhaustion(ExhaustionSpec(seq, orders=(1, 2), grid=square_grid(0.4, 5, 0.4)))
    assert [(r.j, r.n) for r in table.rows] == [(j, n) for j in range(1, 5) for n in (1, 2)]
    last = [r for r in table.rows if r.j == 4]
    assert all(r.sup_dev_M < 1e-10 for r in last)
    assert table.rows[0].closed_form_M is None


def test_hypothesis_flag_when_kernels_do_not_converge():
    # a "ramp" that moves away from its limit
    d = make_domain({"disc": {"radius": 1}})
    weights = tuple(make_weight({"constant": c}) for c in (1.5, 3.0))
    seq = WeightRamp(d, weights, make_weight({"constant": 1.0}))
    table = run_exhaustion(ExhaustionSpec(seq, grid=square_grid(0.4, 3, 0.4)))
    assert not table.hypothesis_ok
    assert "CONVERGENCE_HYPOTHESIS_FAIL" in table.flags


def test_threads_do_not_change_results(monkeypatch):
    spec = ExhaustionSpec(GrowingDiscs((0.6, 0.8, 0.9)), grid=square_grid(0.4, 5, 0.4))
    monkeypatch.setenv("DKERN_THREADS", "1")
    serial = run_exhaustion(spec)
    monkeypatch.setenv("DKERN_THREADS", "3")
    parallel = run_exhaustion(spec)
    assert serial == parallel
    monkeypatch.setenv("DKERN_THREADS", "zero")
    with pytest.raises(DkernError):
        run_exhaustion(spec)


def test_csv_values_follow_columns():
    table = run_exhaustion(ExhaustionSpec(GrowingDiscs((0.75,)), grid=square_grid(0.4, 3, 0.4)))
    assert len(table.rows[0].csv_values()) == len(CSV_COLUMNS)
