"""Empirical constants for the four integral inequalities used by the barrier argument.

1. (int eta^-a t^(a-1))^(1/a)  >=  C int dt/H        when eta <= inf_{(t/mu, t mu)} H
2. int (int_{r1}^rho eta)^a d rho  >=  C int (1 - xi/r2)^a (xi eta)^a d xi
3. (int eta)^a  >=  C int eta kappa^(a-1),  kappa(xi) = int_xi^{r2} eta
4. int_{r*}^{lam r} p  <=  C int_{r*}^r p           when r p / int_{r*}^r p <= gamma

Piecewise-constant inputs are integrated in closed form; general
:class:`~inflap.expr.ScalarFn` inputs go through adaptive quadrature.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .expr import ScalarFn

__all__ = [
    "HypothesisError",
    "PiecewiseConstant",
    "LemmaReport",
    "lemma1_check",
    "lemma2_check",
    "lemma3_check",
    "lemma4_check",
    "random_step_function",
    "run_battery",
    "BatteryRow",
    "battery_summary",
    "write_battery_csv",
]


class HypothesisError(ValueError):
    """A stated hypothesis failed on the sampled or exact check."""


@dataclass(frozen=True)
class PiecewiseConstant:
    """Value ``levels[i]`` on ``[edges[i], edges[i+1])``; zero outside ``[edges[0], edges[-1])``."""

    edges: np.ndarray
    levels: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=float)
        v = np.asarray(self.levels, dtype=float)
        if e.ndim != 1 or v.shape != (len(e) - 1,) or np.any(np.diff(e) <= 0):
            raise ValueError("need increasing edges and one level per cell")
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "levels", v)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        i = np.searchsorted(self.edges, t, side="right") - 1
        inside = (i >= 0) & (i < len(self.levels))
        return np.where(inside, self.levels[np.clip(i, 0, len(self.levels) - 1)], 0.0)

    def restrict(self, a: float, b: float) -> "PiecewiseConstant":
        """The same function on [a, b) (zero-padded where undefined)."""
        inner = self.edges[(self.edges > a) & (self.edges < b)]
        e = np.concatenate([[a], inner, [b]])
        return PiecewiseConstant(e, self(0.5 * (e[1:] + e[:-1])))

    def integral(self) -> float:
        return float(np.sum(self.levels * np.diff(self.edges)))

    def cumulative(self) -> np.ndarray:
        """Integral from edges[0] to each edge."""
        return np.concatenate([[0.0], np.cumsum(self.levels * np.diff(self.edges))])

    def as_scalar_fn(self) -> ScalarFn:
        return ScalarFn.from_callable(lambda x: float(self(x)), vec=self, lo=-math.inf, label="step", breakpoints=tuple(self.edges))


@dataclass
class LemmaReport:
    lemma: int
    inputs: dict
    lhs: float
    rhs: float
    C: float
    passed: bool
    degenerate: bool = False
    note: str = ""

    def summary(self) -> str:
        tag = "degenerate" if self.degenerate else ("pass" if self.passed else "FAIL")
        return f"lemma {self.lemma}: C_emp={self.C:.10g} (lhs {self.lhs:.6g}, rhs {self.rhs:.6g}) {tag}"


def _report(lemma, inputs, lhs, rhs, ratio_lhs_over_rhs=True, note=""):
    if lhs == 0.0 and rhs == 0.0:
        return LemmaReport(lemma, inputs, lhs, rhs, math.nan, True, True, note or "both sides vanish")
    C = lhs / rhs if ratio_lhs_over_rhs else rhs / lhs
    ok = math.isfinite(C) and C > 0
    return LemmaReport(lemma, inputs, float(lhs), float(rhs), float(C), ok, False, note)


def _quad(f, a, b, points=None):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        pts = None if points is None else [p for p in points if a < p < b][:400] or None
        return integrate.quad(f, a, b, epsabs=1e-11, epsrel=1e-9, limit=max(500, 4 * len(pts or ())), points=pts)[0]


# -- Lemma 1 -----------------------------------------------------------------


def window_inf_step(H: PiecewiseConstant, mu: float) -> PiecewiseConstant:
    """Exact inf of a step function over the sliding open window (t/mu, t mu)."""
    e = H.edges
    cand = np.unique(np.concatenate([e / mu, e * mu]))
    cand = cand[cand > 0]
    mids = np.sqrt(cand[1:] * cand[:-1])
    vals = np.empty(len(mids))
    for k, t in enumerate(mids):
        lo, hi = t / mu, t * mu
        cells = (e[1:] > lo) & (e[:-1] < hi)
        lv = H.levels[cells]
        # outside the tabulated range H counts as +inf (no constraint)
        vals[k] = lv.min() if len(lv) else np.inf
    return PiecewiseConstant(cand, vals)


def lemma1_check(eta, H, alpha: float, mu: float, nu: float, M1: float, M2: float, samples: int = 2000) -> LemmaReport:
    """C_emp = (int_{M1}^{M2} eta^-alpha t^(alpha-1) dt)^(1/alpha) / int_{M1}^{M2} dt/H."""
    if not (0 < alpha <= 1 and mu > 1 and nu > 1 and M1 > 0):
        raise ValueError("need 0 < alpha <= 1, mu > 1, nu > 1, M1 > 0")
    if not M2 >= nu * M1:
        raise HypothesisError("M2 must be at least nu * M1")
    inputs = dict(alpha=alpha, mu=mu, nu=nu, M1=M1, M2=M2)
    if isinstance(eta, PiecewiseConstant) and isinstance(H, PiecewiseConstant):
        bound = window_inf_step(H, mu).restrict(M1, M2)
        e_r = eta.restrict(M1, M2)
        grid = np.unique(np.concatenate([e_r.edges, bound.edges]))
        mid = 0.5 * (grid[1:] + grid[:-1])
        if np.any(eta(mid) > bound(mid) * (1 + 1e-12)):
            raise HypothesisError("eta exceeds the window infimum of H")
        if np.any(e_r.levels <= 0) or np.any(H.restrict(M1, M2).levels <= 0):
            raise HypothesisError("eta and H must be positive")
        a, b = e_r.edges[:-1], e_r.edges[1:]
        lhs = float(np.sum(e_r.levels**-alpha * (b**alpha - a**alpha) / alpha)) ** (1.0 / alpha)
        Hr = H.restrict(M1, M2)
        rhs = float(np.sum(np.diff(Hr.edges) / Hr.levels))
        return _report(1, inputs, lhs, rhs)

    from .minorant import window_inf

    ts = np.geomspace(M1, M2, samples)
    ev = eta.many(ts)
    bound = np.array([window_inf(H, mu, float(t), samples=256) for t in ts])
    if np.any(ev > bound * (1 + 1e-9)):
        raise HypothesisError(f"eta exceeds the window infimum of H near t={ts[np.argmax(ev > bound * (1 + 1e-9))]:.6g}")
    bps = tuple(getattr(eta, "breakpoints", ())) + tuple(getattr(H, "breakpoints", ()))
    lhs = _quad(lambda t: eta(t) ** -alpha * t ** (alpha - 1.0), M1, M2, bps) ** (1.0 / alpha)
    rhs = _quad(lambda t: 1.0 / H(t), M1, M2, bps)
    return _report(1, inputs, lhs, rhs)


# -- Lemma 2 -----------------------------------------------------------------


def _inc_beta_integral(a: float, b: float, alpha: float) -> float:
    """int_a^b (1-u)^alpha u^alpha du for 0 <= a <= b <= 1."""
    B = special.beta(alpha + 1.0, alpha + 1.0)
    return float(B * (special.betainc(alpha + 1.0, alpha + 1.0, b) - special.betainc(alpha + 1.0, alpha + 1.0, a)))


def lemma2_check(eta, alpha: float, r1: float, r2: float) -> LemmaReport:
    """C_emp = int_{r1}^{r2} (int_{r1}^rho eta)^alpha d rho / int (1 - xi/r2)^alpha (xi eta)^alpha d xi."""
    if not (0 <= r1 < r2 and 0 < alpha <= 1):
        raise ValueError("need 0 <= r1 < r2 and 0 < alpha <= 1")
    inputs = dict(alpha=alpha, r1=r1, r2=r2)
    if isinstance(eta, PiecewiseConstant):
        s = eta.restrict(r1, r2)
        if np.any(s.levels < 0):
            raise HypothesisError("eta must be non-negative")
        F = s.cumulative()
        a, b, c = s.edges[:-1], s.edges[1:], s.levels
        Fa, Fb = F[:-1], F[1:]
        with np.errstate(divide="ignore", invalid="ignore"):
            rising = (Fb ** (alpha + 1.0) - Fa ** (alpha + 1.0)) / (c * (alpha + 1.0))
        lhs = float(np.sum(np.where(c > 0, rising, Fa**alpha * (b - a))))
        rhs = sum(
            ci**alpha * r2 ** (1.0 + alpha) * _inc_beta_integral(ai / r2, bi / r2, alpha)
            for ai, bi, ci in zip(a, b, c)
            if ci > 0
        )
        return _report(2, inputs, lhs, float(rhs))

    bps = tuple(getattr(eta, "breakpoints", ()))

    def F(rho):
        return _quad(lambda x: eta(x), r1, rho, bps) if rho > r1 else 0.0

    lhs = _quad(lambda rho: max(F(rho), 0.0) ** alpha, r1, r2, bps)
    rhs = _quad(lambda x: (1.0 - x / r2) ** alpha * max(x * eta(x), 0.0) ** alpha, r1, r2, bps)
    return _report(2, inputs, lhs, rhs)


# -- Lemma 3 -----------------------------------------------------------------


def lemma3_check(eta, alpha: float, r1: float, r2: float) -> LemmaReport:
    """C_emp = (int eta)^alpha / int eta kappa^(alpha-1), zero where kappa vanishes."""
    if not (0 <= r1 < r2 and 0 < alpha < 1):
        raise ValueError("need 0 <= r1 < r2 and 0 < alpha < 1")
    inputs = dict(alpha=alpha, r1=r1, r2=r2)
    if isinstance(eta, PiecewiseConstant):
        s = eta.restrict(r1, r2)
        if np.any(s.levels < 0):
            raise HypothesisError("eta must be non-negative")
        total = s.integral()
        # kappa at each edge, summed from the right so kappa(r2) is exactly 0
        kappa = np.concatenate([np.cumsum((s.levels * np.diff(s.edges))[::-1])[::-1], [0.0]])
        # on a cell with level c, int c kappa^(alpha-1) = (kappa_a^alpha - kappa_b^alpha)/alpha
        ka, kb = np.maximum(kappa[:-1], 0.0), np.maximum(kappa[1:], 0.0)
        rhs = float(np.sum(np.where(s.levels > 0, (ka**alpha - kb**alpha) / alpha, 0.0)))
        return _report(3, inputs, total**alpha, rhs)

    bps = tuple(getattr(eta, "breakpoints", ()))
    total = _quad(lambda x: eta(x), r1, r2, bps)

    def integrand(x):
        kap = _quad(lambda z: eta(z), x, r2, bps)
        ev = eta(x)
        return 0.0 if kap <= 0.0 or ev == 0.0 else ev * kap ** (alpha - 1.0)

    rhs = _quad(integrand, r1, r2, bps)
    return _report(3, inputs, total**alpha, rhs)


# -- Lemma 4 -----------------------------------------------------------------


def lemma4_check(p, gamma: float, lam: float, r_star: float, r0: float, r: float, samples: int = 4000) -> LemmaReport:
    """C_emp = int_{r*}^{lam r} p / int_{r*}^r p, after checking r p/P <= gamma on [r0, lam r]."""
    if not (gamma > 0 and lam >= 1 and r0 > r_star and r >= r0):
        raise ValueError("need gamma > 0, lam >= 1, r0 > r_star, r >= r0")
    inputs = dict(gamma=gamma, lam=lam, r_star=r_star, r0=r0, r=r)
    top = lam * r
    if isinstance(p, PiecewiseConstant):
        s = p.restrict(r_star, top)
        if np.any(s.levels < 0):
            raise HypothesisError("p must be non-negative")
        P = s.cumulative()
        a, b, c = s.edges[:-1], s.edges[1:], s.levels
        # r c / (P_a + c (r - a)) is monotone on each cell; test both ends (b from the left)
        worst = 0.0
        for ai, bi, ci, Pa, Pb in zip(a, b, c, P[:-1], P[1:]):
            if bi <= r0 or ci == 0:
                continue
            lo = max(ai, r0)
            Plo = Pa + ci * (lo - ai)
            for x, Px in ((lo, Plo), (bi, Pb)):
                worst = max(worst, math.inf if Px <= 0 else x * ci / Px)
        if worst > gamma * (1 + 1e-12):
            raise HypothesisError(f"r p(r) / int p reaches {worst:.6g} > gamma = {gamma:g}")
        num = float(np.interp(top, s.edges, P))
        den = float(np.interp(r, s.edges, P))
        return _report(4, dict(inputs, hypothesis_sup=worst), den, num, ratio_lhs_over_rhs=False)

    bps = tuple(getattr(p, "breakpoints", ()))
    xs = np.geomspace(r0, top, samples)
    Px = np.array([_quad(lambda x: p(x), r_star, float(x), bps) for x in xs])
    ratio = xs * p.many(xs) / Px
    if np.any(ratio > gamma * (1 + 1e-9)):
        raise HypothesisError(f"r p(r) / int p exceeds gamma near r={xs[np.argmax(ratio > gamma * (1 + 1e-9))]:.6g}")
    den = _quad(lambda x: p(x), r_star, r, bps)
    num = den + _quad(lambda x: p(x), r, top, bps)
    return _report(4, dict(inputs, hypothesis_sup=float(ratio.max())), den, num, ratio_lhs_over_rhs=False)


# -- seeded battery ----------------------------------------------------------


def random_step_function(rng: np.random.Generator, lo: float, hi: float, spread: float = 4.0, zero_fraction: float = 0.0, split: int = 2) -> PiecewiseConstant:
    """Log-uniform levels in [1/spread, spread] on a dyadic partition of [lo, hi).

    Each dyadic cell [2^j, 2^(j+1)) is further cut into ``split`` equal parts;
    a fraction ``zero_fraction`` of the cells is set to zero.
    """
    if lo > 0:
        j0, j1 = math.floor(math.log2(lo)), math.ceil(math.log2(hi))
        dy = 2.0 ** np.arange(j0, j1 + 1)
    else:
        dy = np.concatenate([[0.0], 2.0 ** np.arange(math.floor(math.log2(hi)) - 6, math.ceil(math.log2(hi)) + 1)])
    edges = np.unique(np.concatenate([np.linspace(a, b, split + 1) for a, b in zip(dy[:-1], dy[1:])]))
    edges = np.unique(np.clip(edges, lo, hi))
    n = len(edges) - 1
    levels = np.exp(rng.uniform(-math.log(spread), math.log(spread), n))
    if zero_fraction > 0:
        levels[rng.random(n) < zero_fraction] = 0.0
    return PiecewiseConstant(edges, levels)


@dataclass
class BatteryRow:
    lemma: int
    seed: int
    index: int
    params: dict
    C: float
    report: LemmaReport = field(repr=False)


#: fixed parameters per lemma; the envelope of C may depend only on these
BATTERY_PARAMS = {
    1: dict(alpha=0.5, mu=2.0, nu=2.0),
    2: dict(alpha=0.5),
    3: dict(alpha=0.5),
    4: dict(gamma=2.0, lam=2.0),
}


def _battery_member(lemma: int, rng: np.random.Generator) -> tuple[dict, LemmaReport]:
    P = BATTERY_PARAMS[lemma]
    if lemma == 1:
        M1 = 2.0 ** rng.uniform(-3, 3)
        M2 = M1 * P["nu"] * 2.0 ** rng.uniform(0, 4)
        H = random_step_function(rng, M1 / P["mu"] / 2, M2 * P["mu"] * 2)
        eta = window_inf_step(H, P["mu"]).restrict(M1, M2)
        # shrink by a random factor <= 1 so eta sits strictly under the bound
        eta = PiecewiseConstant(eta.edges, eta.levels * rng.uniform(0.5, 1.0))
        args = dict(P, M1=M1, M2=M2)
        return args, lemma1_check(eta, H, **args)
    if lemma in (2, 3):
        r2 = 2.0 ** rng.uniform(-2, 4)
        r1 = r2 * rng.uniform(0.0, 0.5)
        eta = random_step_function(rng, r1, r2, zero_fraction=0.15)
        if eta.integral() == 0.0:
            eta = PiecewiseConstant(eta.edges, np.where(np.arange(len(eta.levels)) == 0, 1.0, eta.levels))
        args = dict(P, r1=r1, r2=r2)
        fn = lemma2_check if lemma == 2 else lemma3_check
        return args, fn(eta, **args)
    r_star, r0 = 1.0, 16.0
    r = 2.0 ** rng.uniform(4, 10)
    top = P["lam"] * r
    # levels c_j 2^-j on dyadic cells keep r p / int p below 8/j
    j = np.arange(0, math.ceil(math.log2(top)) + 1)
    edges = 2.0 ** np.concatenate([[0.0], j + 1])
    levels = np.exp(rng.uniform(-math.log(2.0), math.log(2.0), len(edges) - 1)) * 2.0 ** -np.concatenate([[0.0], j])[: len(edges) - 1]
    p = PiecewiseConstant(edges, levels)
    args = dict(P, r_star=r_star, r0=r0, r=r)
    return args, lemma4_check(p, **args)


def run_battery(n: int = 100, seed: int = 0) -> list[BatteryRow]:
    """``n`` seeded step functions per lemma, rows ordered by lemma then index."""
    rows = []
    for lemma in (1, 2, 3, 4):
        for i in range(n):
            rng = np.random.default_rng([seed, lemma, i])
            params, rep = _battery_member(lemma, rng)
            rows.append(BatteryRow(lemma, seed, i, params, rep.C, rep))
    return rows


def battery_summary(rows: list[BatteryRow]) -> dict[int, dict]:
    out = {}
    for lemma in sorted({r.lemma for r in rows}):
        cs = np.array([r.C for r in rows if r.lemma == lemma and not r.report.degenerate])
        finite = bool(np.all(np.isfinite(cs)) and np.all(cs > 0))
        out[lemma] = {
            "count": int(len(cs)),
            "C_min": float(cs.min()),
            "C_max": float(cs.max()),
            "spread": float(cs.max() / cs.min()) if finite else math.inf,
            "all_finite_positive": finite,
            "within_bounds": bool(finite and cs.min() > 1e-6 and cs.max() < 1e6),
        }
    return out


def write_battery_csv(rows: list[BatteryRow], path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["lemma", "seed", "index", "parameters", "C_emp"])
        for r in rows:
            params = ";".join(f"{k}={v:.17g}" for k, v in sorted(r.params.items()))
            out.writerow([r.lemma, r.seed, r.index, params, f"{r.C:.17g}"])
