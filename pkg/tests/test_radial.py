import math

import numpy as np
import pytest

from inflap.expr import DomainError, ScalarFn
from inflap.radial import BumpKernel, RadialProfile, bump, infinity_laplacian_radial, mollify, mollify_piecewise_linear, numeric_derivatives


def test_inf_laplacian_closed_forms():
    sq = RadialProfile(lambda r: r * r, lambda r: 2 * r, lambda r: 2.0)
    assert infinity_laplacian_radial(sq, 1.0) == 8.0
    lin = RadialProfile(lambda r: r, lambda r: 1.0, lambda r: 0.0)
    assert infinity_laplacian_radial(lin, 3.3) == 0.0
    cube = RadialProfile(lambda r: r**3, lambda r: 3 * r * r, lambda r: 6 * r)
    assert infinity_laplacian_radial(cube, 1.0) == 54.0


def test_inf_laplacian_numeric_fallback():
    cube = RadialProfile(lambda r: r**3)
    assert infinity_laplacian_radial(cube, 1.0) == pytest.approx(54.0, rel=1e-7)


def test_profile_domain():
    p = RadialProfile(lambda r: r, lambda r: 1.0, lambda r: 0.0, r_lo=1.0)
    with pytest.raises(DomainError):
        p.derivatives(0.5)


def test_validate_derivatives_flags_wrong_closed_form():
    good = RadialProfile(lambda r: r**3, lambda r: 3 * r * r, lambda r: 6 * r, r_lo=0.1)
    bad = RadialProfile(lambda r: r**3, lambda r: 3 * r * r, lambda r: 5 * r, r_lo=0.1)
    assert good.validate_derivatives() == []
    assert len(bad.validate_derivatives()) > 0


def test_numeric_derivatives():
    assert numeric_derivatives(lambda r: 4.0, 2.0) == (0.0, 0.0)
    d1, d2 = numeric_derivatives(lambda r: r * r, 3.0)
    assert d1 == pytest.approx(6.0, abs=1e-9) and d2 == pytest.approx(2.0, abs=1e-6)
    d1, d2 = numeric_derivatives(math.exp, 0.0, 1e-3)
    assert abs(d1 - 1.0) < 1e-9 and abs(d2 - 1.0) < 1e-9


def test_numeric_derivatives_respects_domain():
    with pytest.raises(DomainError):
        numeric_derivatives(ScalarFn.parse("ln(t)", lo=0.0), 1e-5, 1e-5)


def test_kernel_mass_and_support():
    assert BumpKernel(0.3).mass() == pytest.approx(1.0, abs=1e-12)
    assert bump(np.array([-1.0, 1.0, 1.5]))[...].tolist() == [0.0, 0.0, 0.0]
    assert bump(0.0) > 0
    with pytest.raises(ValueError):
        BumpKernel(0.0)


def test_mollify_oracles():
    c = ScalarFn.constant(3.5)
    assert mollify(c, 0.7, 2.0) == pytest.approx(3.5, rel=1e-12)
    step = ScalarFn.from_callable(lambda t: 1.0 if t >= 0 else 0.0, vec=lambda t: (np.asarray(t) >= 0).astype(float), breakpoints=(0.0,))
    assert mollify(step, 1.0, 0.0) == pytest.approx(0.5, abs=1e-9)
    ident = ScalarFn.parse("t", lo=-math.inf)
    assert mollify(ident, 1.0, 5.0) == pytest.approx(5.0, rel=1e-12)


def test_piecewise_linear_fast_path_matches_quadrature():
    xs = np.array([0.0, 1.0, 1.5, 4.0])
    ys = np.array([0.0, 2.0, 2.0, 5.0])
    f = ScalarFn.from_samples(xs, ys)
    ts = np.array([1.0, 1.3, 2.0, 3.0])
    fast = mollify_piecewise_linear(xs, ys, 0.4, ts)
    slow = [mollify(f, 0.4, float(t)) for t in ts]
    np.testing.assert_allclose(fast, slow, rtol=1e-9)
