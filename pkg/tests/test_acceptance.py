"""Exit criteria, each at its pinned tolerance and runtime budget."""

import math
import time

import numpy as np
import pytest

from inflap.barrier import PFunction, certify_nonexistence, integrate_ode, picard_grid, solve_picard
from inflap.cli import main
from inflap.criteria import Classification, NonlinearitySpec, classify
from inflap.examples import example1_witness, example2_witness, example3_witness, verify_subsolution
from inflap.expr import ScalarFn
from inflap.inequalities import PiecewiseConstant, battery_summary, lemma1_check, lemma2_check, lemma3_check, run_battery
from inflap.minorant import build_minorant, check_levels, verify_minorant

EPS_PRIME = 0.01


def stated_verdict(lam, s, mu, nu):
    """The sign conditions as stated for the three families, written out literally."""
    if nu != 0:
        trivial = nu > 4 and s >= -4
    elif mu != 0:
        trivial = lam > 3 and mu >= -1
    else:
        trivial = lam > 3 and s >= -lam - 1
    return Classification.TRIVIAL_ONLY if trivial else Classification.NONTRIVIAL_EXISTS


CLASSIFICATION_POINTS = (
    [(lam, -lam - 1 + d, 0.0, 0.0) for lam in (2.0, 3.0, 4.0) for d in (EPS_PRIME, -EPS_PRIME)]
    + [(4.0, -5.0, mu, 0.0) for mu in (-1.0, -2.0)]
    + [(3.0, -4.0, -1.0, 0.0)]
    + [(3.0, s, 0.0, nu) for nu in (4.0, 5.0) for s in (-4.0, -4.0 - EPS_PRIME)]
)


def test_criterion_1_classification(acceptance_record):
    t0 = time.perf_counter()
    wrong = []
    for lam, s, mu, nu in CLASSIFICATION_POINTS:
        got = classify(NonlinearitySpec(lam=lam, s=s, mu_log=mu, nu_log=nu)).status
        if got != stated_verdict(lam, s, mu, nu):
            wrong.append((lam, s, mu, nu, got.value))
    dt = time.perf_counter() - t0
    ok = not wrong and len(CLASSIFICATION_POINTS) >= 12 and dt < 1.0
    acceptance_record(1, ok, f"{len(CLASSIFICATION_POINTS) - len(wrong)}/{len(CLASSIFICATION_POINTS)} points match, {dt:.3f} s")
    assert not wrong
    assert dt < 1.0


def test_criterion_2_witnesses(acceptance_record):
    details, ok = [], True

    t0 = time.perf_counter()
    rep = verify_subsolution(example1_witness(4.0, -6.0, 1.0, c0=1.0), 1e4, 10_000)
    r = rep.r
    oracle = (r - 1) ** 4 / (8 * r**2 * (1 + r) ** 2)
    dt = time.perf_counter() - t0
    e1 = rep.passed and rep.violations == 0 and abs(rep.ratio[-1] - 0.125) <= 0.01 and np.allclose(rep.ratio, oracle, rtol=1e-9) and dt < 5
    details.append(f"Ex1 ratio(1e4)={rep.ratio[-1]:.6f} {dt:.2f}s")
    ok &= e1

    t0 = time.perf_counter()
    w2 = example2_witness(4.0, -2.0, math.e**2, c0=0.5)
    rep2 = verify_subsolution(w2, 1e4 * w2.r0, 10_000)
    dt2 = time.perf_counter() - t0
    e2 = rep2.passed and dt2 < 5
    details.append(f"Ex2 max ratio {rep2.max_ratio:.4f} {dt2:.2f}s")
    ok &= e2

    t0 = time.perf_counter()
    w3 = example3_witness(8.0, -6.0, 1.0, c0=1 / 32)
    rep3 = verify_subsolution(w3, 1e3 * w3.r0, 10_000)
    dt3 = time.perf_counter() - t0
    e3 = rep3.passed and dt3 < 5
    details.append(f"Ex3 max ratio {rep3.max_ratio:.4f} {dt3:.2f}s")
    ok &= e3

    acceptance_record(2, ok, "; ".join(details))
    assert e1 and e2 and e3


def test_criterion_3_closed_form_barrier(acceptance_record):
    t0 = time.perf_counter()
    p = PFunction.test(lambda r: 2.0 / 3.0)
    h = ScalarFn.constant(1.0, lo=0.0, positive=True)
    r = np.linspace(0.0, 4.0, 4001)
    exact = 1.0 + 0.75 * r ** (4.0 / 3.0)
    err_ode = float(np.max(np.abs(integrate_ode(p, h, 1.0, r_end=4.0).w_at(r) - exact)))
    err_pic = float(np.max(np.abs(solve_picard(p, h, 1.0, r_end=4.0).w_at(r) - exact)))
    dt = time.perf_counter() - t0
    ok = err_ode <= 1e-6 and err_pic <= 1e-6 and dt < 5
    acceptance_record(3, ok, f"sup error ODE {err_ode:.2e}, Picard {err_pic:.2e}, {dt:.2f} s")
    assert err_ode <= 1e-6 and err_pic <= 1e-6
    assert dt < 5


def _blowup_problem():
    # h(eps/r) ~ r^-4 is not integrable at 0, so p starts at r = 1/2
    p = PFunction.test(lambda r: np.minimum(1.0, 1.0 / r), support_start=0.5, breakpoints=(1.0,))
    h = ScalarFn.parse("(1+t)^4", lo=0.0, positive=True)
    return p, h


@pytest.fixture(scope="module")
def blowup_solution():
    p, h = _blowup_problem()
    return p, h, integrate_ode(p, h, 1.0)


def test_criterion_4_blow_up_detection(acceptance_record, blowup_solution):
    t0 = time.perf_counter()
    p, h, sol = blowup_solution
    half = integrate_ode(p, h, 1.0, rtol=0.5e-11, atol=0.5e-12, bracket_tol=0.5e-6)
    change = abs(half.R_max_mid - sol.R_max_mid) / sol.R_max_mid if sol.blew_up and half.blew_up else math.inf
    ctrl = certify_nonexistence(NonlinearitySpec(lam=2.0, s=0.0), 1.0, r_end=1e6, t_max=1e14)
    w_end = float(ctrl.solution.w[-1])
    reached = ctrl.certificate is None and ctrl.solution.r[-1] == 1e6 and math.isfinite(w_end)
    dt = time.perf_counter() - t0
    ok = sol.blew_up and change <= 0.01 and reached and dt < 60
    acceptance_record(
        4,
        ok,
        f"BlowUp bracket [{sol.R_max_low:.6f}, {sol.R_max_high:.6f}], midpoint change {change:.1e} under halved tolerances; "
        f"lambda=2 reached r={ctrl.solution.r[-1]:.0e} with w={w_end:.6g}; {dt:.1f} s",
    )
    assert sol.blew_up and half.blew_up
    assert change <= 0.01
    assert reached
    assert dt < 60


def test_criterion_5_solver_cross_validation(acceptance_record, blowup_solution):
    p, h, sol = blowup_solution
    top = 0.9 * sol.R_max_mid
    pic = solve_picard(p, h, 1.0, top, grid=picard_grid(p.support_start, top, per_unit=16384, coarsen=1.0001))
    diff = np.abs(pic.w - sol.w_at(pic.r))
    err = float(diff.max())
    rel = float(np.max(diff / np.maximum(1.0, np.abs(pic.w))))
    ok = err <= 1e-5
    acceptance_record(5, ok, f"sup |w_picard - w_ode| on [0, {top:.4g}] = {err:.3g} (relative {rel:.2g}, w up to {pic.w.max():.3g})")
    assert err <= 1e-5


FAMILIES = {
    "t^4": "t^4",
    "oscillating": "t^4*(1+0.5*sin(ln(t)))",
    "log": "t^3*ln(2+t)^5",
    "constant": None,
    "seeded piecewise": "piecewise",
}


def _seeded_piecewise():
    # dyadic steps times t^4, levels log-uniform in [1/2, 2]
    rng = np.random.default_rng(20260101)
    edges = 2.0 ** np.arange(-24, 25)
    levels = np.exp(rng.uniform(-math.log(2), math.log(2), len(edges) - 1))
    step = PiecewiseConstant(edges, levels)

    def vec(t):
        t = np.asarray(t, dtype=float)
        return t**4 * step(np.clip(t, edges[0], edges[-1] * 0.999))

    return ScalarFn.from_callable(lambda t: float(vec(t)), vec=vec, lo=0.0, positive=True, label="seeded piecewise", breakpoints=tuple(edges))


def test_criterion_6_minorant_battery(acceptance_record):
    mu = math.sqrt(2.0)
    t0 = time.perf_counter()
    results = {}
    for name, text in FAMILIES.items():
        if text is None:
            H = ScalarFn.constant(5.0, lo=0.0, positive=True)
        elif text == "piecewise":
            H = _seeded_piecewise()
        else:
            H = ScalarFn.parse(text, lo=0.0, positive=True)
        res = build_minorant(H, mu, 1e6, check_eta=text is not None)
        rep = verify_minorant(res, H, mu)
        bound_ok = rep.integral_ratio_max <= mu**0.5 / (1 - mu ** (-1 / 16))
        results[name] = rep.passed and bound_ok and check_levels(res, H) == {"i": 0, "ii": 0}
    dt = time.perf_counter() - t0
    ok = all(results.values()) and dt < 30
    acceptance_record(6, ok, ", ".join(f"{k} {'ok' if v else 'FAIL'}" for k, v in results.items()) + f"; {dt:.1f} s")
    assert all(results.values()), results
    assert dt < 30


def test_criterion_7_lemma_battery(acceptance_record):
    t0 = time.perf_counter()
    summ = battery_summary(run_battery(100, 0))
    one = PiecewiseConstant([0.0, 1.0], [1.0])
    spot1 = lemma1_check(ScalarFn.parse("t/2", lo=0.0, positive=True), ScalarFn.parse("t", lo=0.0, positive=True), 0.5, 2.0, 2.0, 1.0, math.e).C
    spot2 = lemma2_check(one, 0.5, 0.0, 1.0).C
    spot3 = lemma3_check(one, 0.5, 0.0, 1.0).C
    spots_ok = abs(spot1 - 2.0) <= 1e-3 and abs(spot2 - 16 / (3 * math.pi)) <= 1e-3 and abs(spot3 - 0.5) <= 1e-3
    bounded = all(v["within_bounds"] and v["count"] == 100 for v in summ.values())
    dt = time.perf_counter() - t0
    ok = spots_ok and bounded and dt < 60
    env = ", ".join(f"L{k} [{v['C_min']:.3g}, {v['C_max']:.3g}]" for k, v in summ.items())
    acceptance_record(7, ok, f"spots {spot1:.6f} {spot2:.6f} {spot3:.6f}; {env}; {dt:.2f} s")
    assert spots_ok and bounded
    assert dt < 60


def test_criterion_8_certificate_pipeline(acceptance_record, tmp_path, capsys):
    outputs = []
    for run in ("first", "second"):
        out = tmp_path / run
        code = main(["certify", "--lambda", "4", "--s", "-5", "--out", str(out)])
        outputs.append((code, (out / "certificate.json").read_bytes() if (out / "certificate.json").exists() else None, (out / "trajectory.csv").read_bytes()))
    capsys.readouterr()
    (c1, cert1, traj1), (c2, cert2, traj2) = outputs
    produced = c1 == 0 and cert1 is not None
    identical = cert1 == cert2 and traj1 == traj2 and c1 == c2
    acceptance_record(8, produced and identical, f"certificate {'produced' if produced else 'missing'}; rerun {'byte-identical' if identical else 'differs'}")
    assert produced
    assert identical
