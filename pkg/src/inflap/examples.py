"""Closed-form radial subsolutions for the three parametric families.

Each witness is phi(r) = F(r) - F(r0) on (r0, inf), glued to zero on
[0, r0].  :func:`verify_subsolution` checks phi'' phi'^2 >= f(r, phi) on a
log grid; everything is carried in logarithms so the exponential family
does not overflow before the ratio is formed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .criteria import NonlinearitySpec
from .radial import RadialProfile

__all__ = [
    "WitnessError",
    "Witness",
    "SubsolutionReport",
    "example1_witness",
    "example2_witness",
    "example3_witness",
    "witness_for",
    "verify_subsolution",
]


class WitnessError(ValueError):
    """Parameters outside a family's regime, or an unsuccessful r0 search."""


@dataclass(frozen=True)
class Witness:
    profile: RadialProfile
    r0: float
    spec: NonlinearitySpec
    regime: str
    exponent: float
    formula: str
    # log phi, log phi', log phi'' (nan where phi'' <= 0) on numpy arrays
    log_terms: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]] = field(repr=False, compare=False, default=None)

    def __call__(self, r: float) -> float:
        return 0.0 if r <= self.r0 else self.profile(r)


@dataclass
class SubsolutionReport:
    passed: bool
    max_ratio: float
    argmax_r: float
    violations: int
    first_violation: float | None
    max_admissible_c0: float
    r: np.ndarray = field(repr=False)
    lhs: np.ndarray = field(repr=False)
    rhs: np.ndarray = field(repr=False)
    ratio: np.ndarray = field(repr=False)

    def summary(self) -> str:
        verdict = "pass" if self.passed else f"FAIL ({self.violations} violations, first at r={self.first_violation:.6g})"
        return f"{verdict}; max ratio {self.max_ratio:.6g} at r={self.argmax_r:.6g}; max admissible c0 {self.max_admissible_c0:.6g}"

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["r", "lhs_inf_laplacian", "rhs_f", "ratio_rhs_over_lhs"])
            for row in zip(self.r, self.lhs, self.rhs, self.ratio):
                out.writerow([f"{v:.17g}" for v in row])


def _log1mexp(x):
    """log(1 - exp(-x)) for x > 0."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x < math.log(2.0), np.log(-np.expm1(-x)), np.log1p(-np.exp(-x)))


def _safe_log(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0, np.log(np.where(x > 0, x, 1.0)), np.nan)


def _check_r0(r0):
    if not (math.isfinite(r0) and r0 > 0):
        raise WitnessError("r0 must be a positive finite radius")


def example1_witness(lam: float, s: float, r0: float, c0: float = 1.0) -> Witness:
    """phi(r) = r^a - r0^a with a = -(4+s)/(lam-3); needs lam > 3, s < -lam-1."""
    if not lam > 3:
        raise WitnessError("Example 1 witness needs lambda > 3")
    if not s < -lam - 1:
        raise WitnessError("Example 1 witness needs s < -lambda-1")
    _check_r0(r0)
    a = -(4.0 + s) / (lam - 3.0)
    base = r0**a
    profile = RadialProfile(
        phi=lambda r: r**a - base,
        dphi=lambda r: a * r ** (a - 1.0),
        d2phi=lambda r: a * (a - 1.0) * r ** (a - 2.0),
        r_lo=r0,
        label=f"r^{a:g} - {base:g}",
    )

    def log_terms(r):
        lr = np.log(r)
        lphi = a * lr + _log1mexp(a * (lr - math.log(r0)))
        return lphi, math.log(a) + (a - 1.0) * lr, math.log(a * (a - 1.0)) + (a - 2.0) * lr

    spec = NonlinearitySpec(lam=lam, s=s, c0=c0)
    return Witness(profile, float(r0), spec, "Example1", a, f"r^{a:.12g} - r0^{a:.12g}", log_terms)


def _search_r0(build, r0: float, r_max_factor: float, grid_points: int, factor: float, max_steps: int) -> Witness:
    r = r0
    for _ in range(max_steps):
        try:
            w = build(r)
            rep = verify_subsolution(w, r_max=r * r_max_factor, grid_points=grid_points)
        except OverflowError:
            raise WitnessError(f"no admissible r0 found between {r0:g} and {r:g} (witness overflows beyond)") from None
        if rep.passed:
            return w
        r *= factor
    raise WitnessError(f"no admissible r0 found between {r0:g} and {r:g}")


def example2_witness(lam: float, mu: float, r0: float, c0: float = 1.0, *, r_max_factor: float = 1e4, grid_points: int = 2000, factor: float = 1.25, max_steps: int = 120) -> Witness:
    """phi(r) = r ln^k r - r0 ln^k r0 with k = -(mu+1)/(lam-3), s = -lam-1.

    r0 is raised geometrically until the subsolution check passes on
    (r0, r_max_factor * r0]; the accepted radius is the one recorded.
    """
    if not lam > 3:
        raise WitnessError("Example 2 witness needs lambda > 3")
    if not mu < -1:
        raise WitnessError("Example 2 witness needs mu < -1")
    _check_r0(r0)
    k = -(mu + 1.0) / (lam - 3.0)
    spec = NonlinearitySpec(lam=lam, s=-lam - 1.0, c0=c0, mu_log=mu)

    def build(r0_):
        r0_ = max(r0_, 1.0 + 1e-9)
        base = r0_ * math.log(r0_) ** k
        profile = RadialProfile(
            phi=lambda r: r * math.log(r) ** k - base,
            dphi=lambda r: math.log(r) ** k + k * math.log(r) ** (k - 1.0),
            d2phi=lambda r: k * math.log(r) ** (k - 2.0) * (math.log(r) + k - 1.0) / r,
            r_lo=r0_,
            label=f"r ln(r)^{k:g} - {base:g}",
        )

        def log_terms(r):
            lr = np.log(r)
            llr = np.log(lr)
            f_log = lr + k * llr
            lphi = f_log + _log1mexp(f_log - math.log(base))
            ld1 = k * llr + np.log1p(k / lr)
            ld2 = math.log(k) + (k - 2.0) * llr + _safe_log(lr + k - 1.0) - lr
            return lphi, ld1, ld2

        return Witness(profile, float(r0_), spec, "Example2", k, f"r ln(r)^{k:.12g} - r0 ln(r0)^{k:.12g}", log_terms)

    return _search_r0(build, max(r0, 1.0 + 1e-9), r_max_factor, grid_points, factor, max_steps)


def example3_witness(nu: float, s: float, r0: float, c0: float = 1.0, *, r_max_factor: float = 1e3, grid_points: int = 2000, factor: float = 1.25, max_steps: int = 120) -> Witness:
    """phi(r) = exp(r^a) - exp(r0^a) with a = (4+s)/(4-nu), lam = 3."""
    if not nu > 4:
        raise WitnessError("Example 3 witness needs nu > 4")
    if not s < -4:
        raise WitnessError("Example 3 witness needs s < -4")
    _check_r0(r0)
    a = (4.0 + s) / (4.0 - nu)
    spec = NonlinearitySpec(lam=3.0, s=s, c0=c0, nu_log=nu)

    def build(r0_):
        e0 = math.exp(r0_**a)
        profile = RadialProfile(
            phi=lambda r: math.exp(r**a) - e0,
            dphi=lambda r: a * r ** (a - 1.0) * math.exp(r**a),
            d2phi=lambda r: a * r ** (a - 2.0) * math.exp(r**a) * (a - 1.0 + a * r**a),
            r_lo=r0_,
            label=f"exp(r^{a:g}) - {e0:g}",
        )

        def log_terms(r):
            lr = np.log(r)
            ra = r**a
            lphi = ra + _log1mexp(ra - r0_**a)
            ld1 = math.log(a) + (a - 1.0) * lr + ra
            ld2 = math.log(a) + (a - 2.0) * lr + ra + _safe_log(a - 1.0 + a * ra)
            return lphi, ld1, ld2

        return Witness(profile, float(r0_), spec, "Example3", a, f"exp(r^{a:.12g}) - exp(r0^{a:.12g})", log_terms)

    return _search_r0(build, r0, r_max_factor, grid_points, factor, max_steps)


def witness_for(spec: NonlinearitySpec, r0: float, **kw) -> Witness:
    """Dispatch to the family constructor the parameters belong to."""
    if spec.nu_log != 0:
        if spec.lam != 3 or spec.mu_log != 0:
            raise WitnessError("no witness family for these parameters")
        return example3_witness(spec.nu_log, spec.s, r0, spec.c0, **kw)
    if spec.mu_log != 0:
        if spec.s != -spec.lam - 1:
            raise WitnessError("Example 2 witness needs s = -lambda-1")
        return example2_witness(spec.lam, spec.mu_log, r0, spec.c0, **kw)
    return example1_witness(spec.lam, spec.s, r0, spec.c0)


def _log_rhs(spec: NonlinearitySpec, r, lphi):
    out = math.log(spec.c0) + spec.s * np.log1p(r) + spec.lam * lphi
    if spec.mu_log != 0:
        out = out + spec.mu_log * np.log(np.log(2.0 + r))
    if spec.nu_log != 0:
        # ln(2 + phi) from log phi without forming phi
        ln2phi = np.logaddexp(math.log(2.0), lphi)
        out = out + spec.nu_log * np.log(ln2phi)
    return out


def verify_subsolution(w: Witness, r_max: float, grid_points: int = 10_000) -> SubsolutionReport:
    """Check phi'' phi'^2 >= f(r, phi) on ``grid_points`` log-spaced radii in (r0, r_max].

    On [0, r0] the witness is zero and f(r, 0) = 0, so nothing is checked
    there.  The ratio rhs/lhs is linear in c0, hence the reported maximal
    admissible c0 is c0 / max_ratio.
    """
    if not r_max > w.r0:
        raise ValueError("r_max must exceed r0")
    if grid_points < 2:
        raise ValueError("need at least two grid points")
    r = np.geomspace(w.r0, r_max, grid_points + 1)[1:]
    lphi, ld1, ld2 = w.log_terms(r)
    log_lhs = ld2 + 2.0 * ld1
    log_rhs = _log_rhs(w.spec, r, lphi)
    with np.errstate(over="ignore", invalid="ignore"):
        lhs = np.exp(log_lhs)
        rhs = np.exp(log_rhs)
        ratio = np.where(np.isnan(log_lhs), np.inf, np.exp(log_rhs - log_lhs))
    if np.any(np.isnan(ratio)):
        raise ValueError("witness evaluation produced NaN")
    bad = ratio > 1.0
    i = int(np.argmax(ratio))
    max_ratio = float(ratio[i])
    return SubsolutionReport(
        passed=not bool(bad.any()),
        max_ratio=max_ratio,
        argmax_r=float(r[i]),
        violations=int(bad.sum()),
        first_violation=float(r[np.argmax(bad)]) if bad.any() else None,
        max_admissible_c0=w.spec.c0 / max_ratio if max_ratio > 0 else math.inf,
        r=r,
        lhs=np.where(np.isnan(log_lhs), 0.0, lhs),
        rhs=rhs,
        ratio=ratio,
    )
