import csv
import math

import numpy as np
import pytest

from inflap.expr import ScalarFn
from inflap.inequalities import (
    HypothesisError,
    PiecewiseConstant,
    battery_summary,
    lemma1_check,
    lemma2_check,
    lemma3_check,
    lemma4_check,
    random_step_function,
    run_battery,
    window_inf_step,
    write_battery_csv,
)


def flat(a, b, c=1.0):
    return PiecewiseConstant([a, b], [c])


def test_lemma1_spot_value():
    # H = t, mu = 2: eta = t/2; (int_1^e sqrt(2) t^-1 dt)^2 = 2 and int_1^e dt/t = 1
    H = ScalarFn.parse("t", lo=0.0, positive=True)
    eta = ScalarFn.parse("t/2", lo=0.0, positive=True)
    rep = lemma1_check(eta, H, 0.5, 2.0, 2.0, 1.0, math.e)
    assert rep.lhs == pytest.approx(2.0, rel=1e-9) and rep.rhs == pytest.approx(1.0, rel=1e-9)
    assert rep.C == pytest.approx(2.0, abs=1e-3)


def test_lemma1_identity_case():
    rep = lemma1_check(flat(0.1, 100.0), flat(0.1, 100.0), 1.0, 2.0, 2.0, 1.0, 5.0)
    assert rep.C == pytest.approx(1.0, rel=1e-14)
    rep = lemma1_check(ScalarFn.constant(1.0, lo=0.0), ScalarFn.constant(1.0, lo=0.0), 1.0, 2.0, 2.0, 1.0, 5.0)
    assert rep.C == pytest.approx(1.0, rel=1e-9)


def test_lemma1_hypotheses():
    with pytest.raises(HypothesisError):
        lemma1_check(flat(0.1, 100.0), flat(0.1, 100.0), 1.0, 2.0, 2.0, 1.0, 1.5)
    with pytest.raises(HypothesisError):
        lemma1_check(flat(0.1, 100.0, 2.0), flat(0.1, 100.0), 1.0, 2.0, 2.0, 1.0, 5.0)


def test_window_inf_step_exact():
    H = PiecewiseConstant([1.0, 2.0, 4.0, 8.0], [3.0, 1.0, 2.0])
    eta = window_inf_step(H, 2.0)
    # window (t/2, 2t) at t = 5 covers (2.5, 10): levels 1 and 2
    assert eta(5.0) == 1.0
    # at t = 6.5 it covers (3.25, 13): still touches the level-1 cell
    assert eta(6.5) == 1.0
    # at t = 1.2 it covers (0.6, 2.4): levels 3 and 1
    assert eta(1.2) == 1.0
    assert eta(0.9) == 3.0


def test_lemma2_spot_value():
    rep = lemma2_check(flat(0.0, 1.0), 0.5, 0.0, 1.0)
    assert rep.lhs == pytest.approx(2.0 / 3.0, rel=1e-14)
    assert rep.rhs == pytest.approx(math.pi / 8.0, rel=1e-12)
    assert rep.C == pytest.approx(16.0 / (3.0 * math.pi), abs=1e-3)


def test_lemma2_expression_path_agrees():
    rep = lemma2_check(ScalarFn.constant(1.0), 0.5, 0.0, 1.0)
    assert rep.C == pytest.approx(16.0 / (3.0 * math.pi), rel=1e-6)


def test_lemma2_zero_is_degenerate():
    rep = lemma2_check(flat(0.0, 1.0, 0.0), 0.5, 0.0, 1.0)
    assert rep.degenerate and rep.passed and math.isnan(rep.C)


def test_lemma3_spot_value_and_telescoping():
    rep = lemma3_check(flat(0.0, 1.0), 0.5, 0.0, 1.0)
    assert (rep.lhs, rep.rhs) == (pytest.approx(1.0), pytest.approx(2.0))
    assert rep.C == pytest.approx(0.5, abs=1e-3)
    # for any step function the right side telescopes to (int eta)^alpha / alpha
    eta = random_step_function(np.random.default_rng(3), 0.5, 9.0, zero_fraction=0.2)
    assert lemma3_check(eta, 0.3, 0.5, 9.0).C == pytest.approx(0.3, rel=1e-12)


def test_lemma3_vanishing_tail():
    eta = PiecewiseConstant([0.0, 0.6, 1.0], [1.0, 0.0])
    rep = lemma3_check(eta, 0.5, 0.0, 1.0)
    assert math.isfinite(rep.C) and rep.C == pytest.approx(0.5)
    rep = lemma3_check(ScalarFn.from_callable(lambda x: 1.0 if x < 0.6 else 0.0, breakpoints=(0.6,)), 0.5, 0.0, 1.0)
    assert rep.C == pytest.approx(0.5, rel=1e-4)


def test_lemma4_spot_value():
    p = ScalarFn.parse("1/t", lo=0.0, positive=True)
    rep = lemma4_check(p, 1.0, 2.0, 1.0, math.e, math.e**2, samples=400)
    assert rep.C == pytest.approx((2.0 + math.log(2.0)) / 2.0, abs=1e-6)


def test_lemma4_identity_window():
    rep = lemma4_check(flat(0.0, 10.0), 1.0, 1.0, 0.0, 1.0, 4.0)
    assert rep.C == 1.0


def test_lemma4_hypothesis_violation():
    # a level jump after a tiny initial mass makes r p / int p large
    p = PiecewiseConstant([1.0, 2.0, 4.0], [1e-3, 10.0])
    with pytest.raises(HypothesisError):
        lemma4_check(p, 2.0, 1.5, 1.0, 1.5, 2.5)


def test_battery_bounds_and_lemma4_oracle():
    rows = run_battery(100, 0)
    assert len(rows) == 400
    summ = battery_summary(rows)
    assert all(v["within_bounds"] for v in summ.values())
    # (ln P)' = p/P <= gamma/r gives P(lam r)/P(r) <= lam^gamma = 4
    assert summ[4]["C_max"] <= 4.0
    assert summ[3]["C_min"] == pytest.approx(0.5) and summ[3]["C_max"] == pytest.approx(0.5)


def test_battery_is_seeded(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_battery_csv(run_battery(10, 7), a)
    write_battery_csv(run_battery(10, 7), b)
    assert a.read_bytes() == b.read_bytes()
    write_battery_csv(run_battery(10, 8), b)
    assert a.read_bytes() != b.read_bytes()
    rows = list(csv.reader(a.open()))
    assert rows[0] == ["lemma", "seed", "index", "parameters", "C_emp"] and len(rows) == 41
