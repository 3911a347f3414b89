import dataclasses
import math

import numpy as np
import pytest

from inflap.expr import ScalarFn
from inflap.minorant import (
    MinorantError,
    build_minorant,
    check_levels,
    integral_bound_factor,
    verification_grid,
    verify_minorant,
    window_inf,
)

MU = math.sqrt(2.0)


def test_window_inf_oracles():
    assert window_inf(ScalarFn.parse("t", lo=0.0), 2.0, 4.0) == pytest.approx(2.0, rel=1e-9)
    assert window_inf(ScalarFn.constant(5.0), 2.0, 3.0) == 5.0


def test_window_inf_against_brute_force():
    H = ScalarFn.parse("t^2*(2+sin(t))", lo=0.0)
    # H is continuous, so the open-window inf equals the min over the closed window
    xs = np.linspace(5.0, 20.0, 100_001)
    brute = float(np.min(H.many(xs)))
    assert window_inf(H, 2.0, 10.0) == pytest.approx(brute, rel=1e-8)


def test_integral_bound_factor():
    assert integral_bound_factor(2.0) == pytest.approx(2**0.5 / (1 - 2 ** (-1 / 16)))


@pytest.fixture(scope="module")
def quartic():
    H = ScalarFn.parse("t^4", lo=0.0, positive=True)
    return H, build_minorant(H, MU, 1e6)


def test_quartic_minorant_properties(quartic):
    H, res = quartic
    t = np.geomspace(1e-2, 1e6, 1000)
    h = res.h.many(t)
    assert np.all(h <= H.many(t) * (1 + 1e-9))
    assert np.all(np.diff(h) >= -1e-12 * h[1:])
    rep = verify_minorant(res, H, MU, alpha=2.0)
    assert rep.passed, rep.summary()
    assert math.isfinite(rep.beta) and rep.beta >= 1.0
    assert rep.integral_ratio_max <= rep.integral_bound
    assert check_levels(res, H) == {"i": 0, "ii": 0}


def test_fast_path_matches_quadrature(quartic):
    _, res = quartic
    t = np.array([0.7, 1.3, 4.0, 250.0, 9e4])
    np.testing.assert_allclose(res.h.many(t), [float(res.h_exact(x)) for x in t], rtol=1e-8)


def test_constant_H_has_unit_doubling():
    H = ScalarFn.constant(5.0, lo=0.0, positive=True)
    res = build_minorant(H, MU, 1e5, check_eta=False)
    rep = verify_minorant(res, H, MU)
    assert rep.passed
    assert rep.beta == pytest.approx(1.0, abs=1e-12)


def test_oscillating_H_integral_ratio_bound():
    H = ScalarFn.parse("t^4*(1+0.5*sin(ln(t)))", lo=0.0, positive=True)
    res = build_minorant(H, MU, 1e6)
    rep = verify_minorant(res, H, MU)
    assert rep.properties["4"]
    assert rep.integral_ratio_max <= MU**0.5 / (1 - MU ** (-1 / 16))


def test_corrupted_minorant_is_flagged(quartic):
    H, res = quartic
    t0 = float(verification_grid(res.t_max)[2500])
    good = res.h

    def bad_vec(t):
        t = np.asarray(t, dtype=float)
        return np.where(t == t0, 1.01 * H.many(np.where(t == t0, t, 1.0)), good.many(t))

    bad = ScalarFn.from_callable(lambda t: float(bad_vec(t)), vec=bad_vec, lo=0.0)
    rep = verify_minorant(dataclasses.replace(res, h=bad), H, MU)
    assert not rep.properties["1"]
    assert rep.violations["1"] == [t0]


def test_rejects_bad_mu():
    with pytest.raises((MinorantError, ValueError)):
        build_minorant(ScalarFn.parse("t^4", lo=0.0, positive=True), 1.0, 1e3)
