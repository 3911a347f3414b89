"""Radial barrier: the weight p, the Cauchy problem for w, blow-up detection.

The barrier solves

    (w')^2 w'' = p(r) h(w/r) / 2,   w(0) = epsilon,  w'(0) = 0,

equivalently the first-order system y = (w')^3, y' = 3/2 p h(w/r),
w' = y^(1/3), or the integral equation

    w(r) = epsilon + int_0^r (3/2 int_0^rho p(xi) h(w(xi)/xi) dxi)^(1/3) drho.

A finite blow-up radius R_max certifies, by comparison, that every
admissible solution stays below epsilon on the ball of radius R_star.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import DOP853, OdeSolution, cumulative_simpson
from scipy.interpolate import PchipInterpolator
from scipy.ndimage import maximum_filter1d

from . import __version__
from .criteria import NonlinearitySpec, check_g_condition, check_q_condition, derive_q_g
from .expr import DomainError, ScalarFn
from .minorant import build_minorant
from .radial import mollify_piecewise_linear

__all__ = [
    "BarrierError",
    "ShiftRStar",
    "PFunction",
    "construct_p",
    "default_delta",
    "min_R_star",
    "check_p_invariants",
    "BarrierSolution",
    "integrate_ode",
    "solve_picard",
    "compare_barrier",
    "Comparison",
    "Certificate",
    "CertifyOutcome",
    "window_sup",
    "certify_nonexistence",
]


class BarrierError(RuntimeError):
    """Solver failure; ``stage`` names the pipeline step when known."""

    def __init__(self, message: str, stage: str | None = None, report: dict | None = None):
        super().__init__(f"[{stage}] {message}" if stage else message)
        self.stage = stage
        self.report = report or {}


class ShiftRStar(ValueError):
    """M_delta(R_star + 1) = 0; ``nearest`` is the closest radius with M_delta > 0, if any."""

    def __init__(self, R_star: float, nearest: float | None):
        hint = "q vanishes everywhere on the sampled range" if nearest is None else f"M_delta > 0 first at r = {nearest:.17g}"
        super().__init__(f"M_delta(R_star + 1) = 0 for R_star = {R_star!r}; {hint}")
        self.R_star = R_star
        self.nearest = nearest


# -- the weight p ------------------------------------------------------------


def min_R_star(sigma: float) -> float:
    """Lower bound 1/(sigma^(1/4) - 1) for the ramp start."""
    return 1.0 / (sigma**0.25 - 1.0)


def default_delta(sigma: float, R_star: float) -> float:
    return (sigma**0.125 - 1.0) * R_star / 4.0


@dataclass(frozen=True)
class PFunction:
    """p(r): zero on [0, support_start], then a ramp and M_delta, or a test profile.

    Constructed instances hold r*M_delta(r) as a monotone cubic through
    values <= 1, which keeps r p(r) <= 1 between the nodes as well.
    """

    evaluate: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    support_start: float
    breakpoints: tuple = ()
    r_hi: float = math.inf
    q_source: ScalarFn | None = field(default=None, repr=False)
    sigma: float | None = None
    delta: float | None = None
    R_star: float | None = None
    r_star: float | None = None
    M_at_ramp_end: float | None = None
    test_mode: bool = False
    label: str = "p"

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r > self.r_hi):
            raise DomainError(f"p is tabulated only up to r = {self.r_hi:.6g}")
        out = np.zeros(r.shape)
        on = r > self.support_start
        if on.any():
            out[on] = self.evaluate(r[on])
        return out if out.ndim else float(out)

    @classmethod
    def test(cls, fn: Callable[[np.ndarray], np.ndarray] | ScalarFn, support_start: float = 0.0, breakpoints=(), label: str = "p (test mode)") -> "PFunction":
        """Direct p for oracle runs; never eligible for a certificate."""
        ev = fn.many if isinstance(fn, ScalarFn) else (lambda r: np.asarray(fn(r), dtype=float) * np.ones(np.shape(r)))
        return cls(evaluate=ev, support_start=float(support_start), breakpoints=tuple(breakpoints), test_mode=True, label=label)


def window_sup(fn_values: np.ndarray, half_width: int, exclude: np.ndarray | None = None) -> np.ndarray:
    """Sliding max over 2*half_width - 1 nodes (open window of half-width ``half_width``)."""
    vals = np.asarray(fn_values, dtype=float).copy()
    if exclude is not None:
        vals[exclude] = -np.inf
    return maximum_filter1d(vals, size=2 * half_width - 1, mode="nearest")


def construct_p(q: ScalarFn, sigma: float, delta: float | None, R_star: float, r_star: float, *, r_hi: float = 2e6, nodes_per_window: int = 64) -> PFunction:
    """Q = windowed sup of q on (r*, inf), Q_delta = omega_delta * Q, M = min(Q_delta, 1/r), then the ramp."""
    if not sigma > 1:
        raise ValueError("sigma must exceed 1")
    if not R_star > r_star:
        raise ValueError("R_star must exceed r_star")
    lower = min_R_star(sigma)
    if not R_star > lower:
        raise ValueError(f"R_star must exceed 1/(sigma^(1/4) - 1) = {lower:.6g}")
    delta = default_delta(sigma, R_star) if delta is None else float(delta)
    if not delta > 0:
        raise ValueError("delta must be positive")
    if not r_hi > R_star + 1:
        raise ValueError("r_hi must exceed R_star + 1")

    step = 0.25 * math.log(sigma) / nodes_per_window
    lo = r_star * math.exp(-step)
    hi = (r_hi + delta) * sigma**0.25 * math.exp(2 * step)
    rho = np.exp(np.arange(math.floor(math.log(lo) / step), math.ceil(math.log(hi) / step) + 1) * step)
    inside = rho > r_star
    qv = np.zeros(rho.shape)
    qv[inside] = q.many(rho[inside])
    if np.any(qv < 0):
        raise DomainError("q must be non-negative")
    Q = window_sup(qv, nodes_per_window, exclude=~inside)
    Q = np.where(inside, np.maximum(Q, 0.0), 0.0)
    # Q vanishes up to r*, then jumps
    first = int(np.argmax(inside))
    xs = np.concatenate([[r_star], [r_star], rho[first:]])
    ys = np.concatenate([[0.0], [Q[first]], Q[first:]])

    nodes = rho[(rho >= R_star) & (rho <= r_hi * math.exp(step))]
    nodes = np.unique(np.concatenate([[R_star + 1.0], nodes]))
    Qd = mollify_piecewise_linear(xs, ys, delta, nodes, left=0.0)
    Qd = np.maximum(Qd, 0.0)
    m = np.minimum(nodes * Qd, 1.0)
    m_interp = PchipInterpolator(nodes, m, extrapolate=False)
    M_end = float(m_interp(R_star + 1.0)) / (R_star + 1.0)
    if not M_end > 0:
        pos = nodes[m > 0]
        raise ShiftRStar(R_star, float(pos[np.argmin(np.abs(pos - (R_star + 1.0)))]) if len(pos) else None)

    def ev(r):
        out = np.empty(r.shape)
        ramp = r <= R_star + 1.0
        rr = r[ramp]
        out[ramp] = np.exp(-1.0 / (rr - R_star) + 1.0) * M_end
        rt = r[~ramp]
        out[~ramp] = np.clip(m_interp(rt), 0.0, 1.0) / rt
        return out

    return PFunction(
        evaluate=ev,
        support_start=float(R_star),
        breakpoints=(float(R_star + 1.0),),
        r_hi=float(r_hi),
        q_source=q,
        sigma=float(sigma),
        delta=delta,
        R_star=float(R_star),
        r_star=float(r_star),
        M_at_ramp_end=M_end,
        label=f"p[{q.label}]",
    )


def check_p_invariants(p: PFunction, r_max: float | None = None, n: int = 10_000) -> dict[str, bool]:
    """Zero before R_star, the ramp identity, r p <= 1, and sampled continuity."""
    top = min(p.r_hi, r_max if r_max is not None else (p.support_start + 1.0) * 1e3)
    r = np.unique(np.concatenate([np.linspace(0.0, p.support_start + 2.0, n // 2), np.geomspace(max(p.support_start, 1e-3), top, n // 2)]))
    v = np.asarray(p(r))
    out = {
        "zero_before_support": bool(np.all(v[r <= p.support_start] == 0.0)),
        "r_p_le_1": bool(np.all(r * v <= 1.0 + 1e-12)),
        "nonnegative": bool(np.all(v >= 0.0)),
    }
    if p.M_at_ramp_end is not None:
        R = p.R_star
        ramp = (r > R) & (r <= R + 1.0)
        expected = np.exp(-1.0 / (r[ramp] - R) + 1.0) * p.M_at_ramp_end
        out["ramp_identity"] = bool(np.allclose(v[ramp], expected, rtol=1e-13, atol=0.0))
        out["ramp_end_value"] = bool(abs(float(p(R + 1.0)) - p.M_at_ramp_end) <= 1e-15 * p.M_at_ramp_end)
    # continuity: a half-step change must stay below the changes over the
    # neighbouring full steps (a jump would not shrink), and the one-sided
    # limits at the declared breakpoints must agree
    mid = 0.5 * (r[1:] + r[:-1])
    vm = np.asarray(p(mid))
    half = np.maximum(np.abs(vm - v[:-1]), np.abs(v[1:] - vm))
    full = np.abs(np.diff(v))
    local = np.maximum(full, np.maximum(np.concatenate([[0.0], full[:-1]]), np.concatenate([full[1:], [0.0]])))
    sampled = np.all(half <= 0.75 * local + 1e-9 * (np.abs(v[1:]) + 1e-300) + 1e-14)
    sides = [np.asarray(p(np.array([b * (1 - 1e-10), b * (1 + 1e-10)]))) for b in p.breakpoints if b < top]
    at_breaks = all(abs(a - b) <= 1e-6 * max(abs(a), abs(b)) + 1e-14 for a, b in sides)
    out["continuous"] = bool(sampled and at_breaks)
    return out


# -- solutions ---------------------------------------------------------------


@dataclass
class BarrierSolution:
    epsilon: float
    r: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)
    dw: np.ndarray = field(repr=False)
    status: str = "Completed"  # or BlowUp
    r_end: float | None = None
    R_max_low: float | None = None
    R_max_high: float | None = None
    stats: dict = field(default_factory=dict)
    dense: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)

    @property
    def blew_up(self) -> bool:
        return self.status == "BlowUp"

    @property
    def bracket(self) -> tuple[float, float] | None:
        return (self.R_max_low, self.R_max_high) if self.blew_up else None

    @property
    def R_max_mid(self) -> float | None:
        return 0.5 * (self.R_max_low + self.R_max_high) if self.blew_up else None

    def w_at(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if np.any(r < self.r[0]) or np.any(r > self.r[-1]):
            raise ValueError(f"radius outside the trajectory [{self.r[0]:.6g}, {self.r[-1]:.6g}]")
        if self.dense is not None:
            return self.dense(r)
        return np.interp(r, self.r, self.w)

    def checks(self, tol: float = 1e-9) -> dict[str, bool]:
        """Sample invariants: w(0) = epsilon, monotone, convex, (w - epsilon)/r nondecreasing."""
        w, r = self.w, self.r
        scale = tol * np.maximum(np.abs(w), 1.0)
        d = np.diff(w)
        slopes = d / np.where(np.diff(r) > 0, np.diff(r), np.inf)
        pos = r > 0
        v = (w[pos] - self.epsilon) / r[pos]
        return {
            "starts_at_epsilon": bool(w[0] == self.epsilon and r[0] == 0.0),
            "nondecreasing": bool(np.all(d >= -scale[1:])),
            "convex": bool(np.all(np.diff(slopes[np.isfinite(slopes)]) >= -tol * np.maximum(1.0, np.abs(slopes[np.isfinite(slopes)][1:])))),
            "v_nondecreasing": bool(np.all(np.diff(v) >= -tol * np.maximum(1.0, np.abs(v[1:])))),
        }

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("r,w,dw_dr\n")
            for row in zip(self.r, self.w, self.dw):
                fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def _h_of(h: ScalarFn, t: np.ndarray) -> np.ndarray:
    return h.many(t)


_GL8 = np.polynomial.legendre.leggauss(8)


def _cbrt(y):
    return np.cbrt(y)


def integrate_ode(
    p: PFunction,
    h: ScalarFn,
    epsilon: float,
    w_cap: float = 1e12,
    *,
    r_end: float = 1e6,
    rtol: float = 1e-11,
    atol: float = 1e-12,
    h_min_rel: float = 1e-3,
    bracket_tol: float = 1e-6,
    w_stop: float = 1e60,
    max_steps: int = 2_000_000,
) -> BarrierSolution:
    """Adaptive DOP853 on (w, y), restarted at the breakpoints of p.

    BlowUp is declared once w >= w_cap with an accepted step below
    ``h_min_rel * r``; integration then continues until the power-law
    remainder -g/g' (g = w/w') drops under ``bracket_tol * r``.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if not w_cap > epsilon:
        raise ValueError("w_cap must exceed epsilon")
    s = p.support_start
    rs, ws, dws = [0.0], [float(epsilon)], [0.0]
    ts_dense: list[float] = [0.0]
    interps: list = []
    if s > 0:
        rs.append(min(s, r_end))
        ws.append(float(epsilon))
        dws.append(0.0)
        ts_dense.append(min(s, r_end))
        interps.append(_Const(float(epsilon)))
    stats = {"rtol": rtol, "atol": atol, "w_cap": w_cap, "h_min_rel": h_min_rel, "bracket_tol": bracket_tol, "nfev": 0, "steps": 0, "restarts": 0}

    def rhs(r, z):
        stats["nfev"] += 1
        w, y = z
        pv = float(p(r))
        if pv == 0.0:
            return np.array([_cbrt(y), 0.0])
        if r > 0:
            hv = float(h(w / r))
        else:
            hv = float(h.func(math.inf))
            if not math.isfinite(hv):
                raise BarrierError("p > 0 at r = 0 needs h bounded at infinity", "integrate_ode")
        return np.array([_cbrt(y), 1.5 * pv * hv])

    def finish(status, **kw):
        dense = OdeSolution(np.array(ts_dense), interps) if len(ts_dense) > 1 else None
        return BarrierSolution(float(epsilon), np.array(rs), np.array(ws), np.array(dws), status, stats=stats, dense=(lambda rr: np.asarray(dense(rr))[0]) if dense else None, **kw)

    if s >= r_end:
        return finish("Completed", r_end=float(r_end))
    edges = sorted({b for b in p.breakpoints if s < b < r_end} | {float(r_end)})
    state = np.array([float(epsilon), 0.0])
    r0 = s
    in_blowup = False
    for seg_end in edges:
        solver = DOP853(rhs, r0, state, seg_end, rtol=rtol, atol=atol, first_step=min(1e-6, (seg_end - r0) / 10))
        stats["restarts"] += 1
        while solver.status == "running":
            solver.step()
            if solver.status == "failed":
                raise BarrierError(
                    f"step size underflow at r = {solver.t:.17g} with w = {solver.y[0]:.6g} below the cap",
                    "integrate_ode",
                    {"r": solver.t, "w": float(solver.y[0]), "y": float(solver.y[1]), **stats},
                )
            stats["steps"] += 1
            if stats["steps"] > max_steps:
                raise BarrierError("step budget exhausted", "integrate_ode", dict(stats))
            r, (w, y) = solver.t, solver.y
            rs.append(float(r))
            ws.append(float(w))
            dws.append(float(_cbrt(y)))
            ts_dense.append(float(r))
            interps.append(solver.dense_output())
            if not math.isfinite(w):
                raise BarrierError(f"non-finite w at r = {r:.17g}", "integrate_ode", dict(stats))
            if w >= w_cap and solver.step_size < h_min_rel * max(r, 1.0):
                in_blowup = True
            if in_blowup and len(rs) >= 3:
                g1, g0 = ws[-1] / dws[-1], ws[-2] / dws[-2]
                gprime = (g1 - g0) / (rs[-1] - rs[-2])
                if gprime < 0:
                    remainder = -g1 / gprime
                    if remainder <= bracket_tol * max(r, 1.0) or w >= w_stop:
                        stats["w_final"] = float(w)
                        stats["power_law_exponent"] = float(-1.0 / gprime)
                        stats["bracket_width"] = remainder
                        return finish("BlowUp", R_max_low=float(r), R_max_high=float(r + remainder))
            if w >= w_stop:
                raise BarrierError(f"w exceeded {w_stop:g} without a power-law tail", "integrate_ode", dict(stats))
        state = solver.y.copy()
        r0 = seg_end
    if ws[-1] >= w_cap:
        raise BarrierError(f"w reached the cap {w_cap:g} at r = {rs[-1]:.6g} without step collapse", "integrate_ode", dict(stats))
    return finish("Completed", r_end=float(r_end))


class _Const:
    """Dense-output stand-in for the flat part w = epsilon on [0, support_start]."""

    def __init__(self, value: float):
        self.value = value

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.full((2,) + t.shape, 0.0) + np.array([self.value, 0.0]).reshape((2,) + (1,) * t.ndim)


def ode_residual(sol: BarrierSolution, p: PFunction, h: ScalarFn) -> float:
    """max |w' - (3/2 int_0^r p h(w/xi))^(1/3)| / max(1, w') on the trajectory samples."""
    gx, gw = _GL8
    r = sol.r
    acc = 0.0
    worst = 0.0
    for i in range(1, len(r)):
        a, b = r[i - 1], r[i]
        if b > a and b > p.support_start:
            a = max(a, p.support_start)
            xi = 0.5 * (b - a) * gx + 0.5 * (a + b)
            pv = np.asarray(p(xi))
            wv = sol.w_at(xi)
            hv = np.where(pv > 0, h.many(wv / xi), 0.0)
            acc += 0.5 * (b - a) * float(np.sum(gw * pv * hv))
        lhs = sol.dw[i]
        rhs = (1.5 * acc) ** (1.0 / 3.0)
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    return worst


def picard_grid(support_start: float, r_end: float, per_unit: int = 4096, grading: float = 3.0, coarsen: float = 1.0003) -> np.ndarray:
    """Nodes 0 and s = support_start, ``per_unit`` nodes on [s, s+1] graded as
    s + (k/N)^grading, then spacing growing geometrically by ``coarsen``.

    w' behaves like (r - s)^(1/3) at the support start; cubic grading keeps
    Simpson's rule at full order there.
    """
    s = float(support_start)
    k = np.arange(per_unit + 1) / per_unit
    first = s + k**grading
    x, hstep = first[-1], first[-1] - first[-2]
    tail = []
    while x < r_end:
        hstep *= coarsen
        x += hstep
        tail.append(x)
    xs = np.unique(np.concatenate([[0.0, s], first, tail]))
    xs = xs[xs <= r_end]
    if xs[-1] < r_end:
        xs = np.append(xs, r_end)
    return xs


def solve_picard(p: PFunction, h: ScalarFn, epsilon: float, r_end: float, tol: float = 1e-10, *, w_cap: float = 1e12, max_iter: int = 5000, grid: np.ndarray | None = None) -> BarrierSolution:
    """Successive substitution in the integral equation with cumulative Simpson quadrature."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if not math.isfinite(r_end) or r_end <= 0:
        raise ValueError("r_end must be positive and finite")
    x = picard_grid(p.support_start, r_end) if grid is None else np.asarray(grid, dtype=float)
    pv = np.asarray(p(x))
    active = pv > 0
    # integrands restart at every breakpoint; Simpson runs piecewise
    cut_at = sorted({b for b in (p.support_start, *p.breakpoints) if x[0] < b < x[-1]})
    cuts = [0] + [int(np.searchsorted(x, b)) for b in cut_at] + [len(x) - 1]

    def cum(f):
        out = np.zeros_like(f)
        for i, j in zip(cuts[:-1], cuts[1:]):
            if j > i:
                out[i:j + 1] = out[i] + cumulative_simpson(f[i:j + 1], x=x[i:j + 1], initial=0.0)
        return out

    w = np.full(x.shape, float(epsilon))
    hv = np.zeros(x.shape)
    for it in range(1, max_iter + 1):
        if active.any():
            xa = x[active]
            with np.errstate(divide="ignore"):
                t = w[active] / np.where(xa > 0, xa, np.nan)
            if np.any(xa == 0):
                # node r = 0 takes the limit from its neighbour
                t = np.where(xa == 0, w[active] / x[1], t)
            hv[active] = h.many(t)
        f = pv * hv
        dw = np.cbrt(1.5 * np.maximum(cum(f), 0.0))
        w_new = epsilon + cum(dw)
        if not np.all(np.isfinite(w_new)) or w_new.max() > w_cap:
            over = int(np.argmax(~np.isfinite(w_new) | (w_new > w_cap)))
            stats = {"iterations": it, "tol": tol, "grid_points": len(x)}
            return BarrierSolution(float(epsilon), x[:over], w_new[:over], dw[:over], "BlowUp", R_max_low=float(x[max(over - 1, 0)]), R_max_high=float(x[over]), stats=stats)
        diff = float(np.max(np.abs(w_new - w)))
        w = w_new
        if diff <= tol:
            stats = {"iterations": it, "tol": tol, "grid_points": len(x), "last_update": diff}
            return BarrierSolution(float(epsilon), x, w, dw, "Completed", r_end=float(x[-1]), stats=stats)
    raise BarrierError(f"Picard iteration did not settle in {max_iter} sweeps (last update {diff:.3g})", "solve_picard", {"iterations": max_iter, "last_update": diff})


# -- comparison and certificates ---------------------------------------------


@dataclass
class Comparison:
    dominated: bool
    first_violation: float | None = None
    margin: float | None = None

    def __bool__(self) -> bool:
        return self.dominated


def compare_barrier(u_samples, sol: BarrierSolution) -> Comparison:
    """Does the interpolated barrier w dominate sampled u (non-strictly)?"""
    arr = np.asarray(u_samples, dtype=float).reshape(-1, 2)
    r, u = arr[:, 0], arr[:, 1]
    w = sol.w_at(r)
    bad = u > w
    if bad.any():
        i = int(np.argmax(bad))
        return Comparison(False, float(r[i]), float(w[i] - u[i]))
    return Comparison(True, None, float(np.min(w - u)) if len(w) else None)


@dataclass
class Certificate:
    spec: dict
    epsilon: float
    R_star: float
    R_max_bracket: tuple[float, float]
    tolerances: dict
    construction: dict
    hypotheses: dict
    version: str = __version__

    @property
    def conclusion(self) -> str:
        return f"any admissible u satisfies u <= {self.epsilon!r} on the ball of radius {self.R_star!r} intersected with the domain"

    def to_json(self) -> str:
        payload = {
            "spec": self.spec,
            "epsilon": self.epsilon,
            "R_star": self.R_star,
            "R_max_bracket": list(self.R_max_bracket),
            "tolerances": self.tolerances,
            "construction": self.construction,
            "hypotheses": self.hypotheses,
            "conclusion": self.conclusion,
            "library_version": self.version,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


@dataclass
class CertifyOutcome:
    certificate: Certificate | None
    solution: BarrierSolution
    p: PFunction = field(repr=False)
    h: ScalarFn = field(repr=False)
    summary: str = ""


def _windowed_sup_fn(g: ScalarFn, mu: float, samples: int = 64) -> ScalarFn:
    """H(t) = sup of g over (t/mu, t mu), from ``samples`` log-spaced interior points."""
    offs = np.exp(np.linspace(-math.log(mu), math.log(mu), samples + 2)[1:-1])

    def vec(t):
        t = np.asarray(t, dtype=float)
        pts = t[..., None] * offs
        return g.many(pts.ravel()).reshape(pts.shape).max(axis=-1)

    return ScalarFn.from_callable(lambda t: float(vec(np.array([t]))[0]), vec=vec, lo=0.0, positive=True, label=f"sup-window[{g.label}]")


def certify_nonexistence(
    spec: NonlinearitySpec,
    epsilon: float,
    R_star: float | None = None,
    *,
    delta: float | None = None,
    w_cap: float = 1e12,
    r_end: float = 1e6,
    t_max: float = 1e36,
    rtol: float = 1e-11,
    atol: float = 1e-12,
    bracket_tol: float = 1e-6,
) -> CertifyOutcome:
    """derive_q_g -> minorant of the windowed sup of g (mu = theta^(1/2)) -> p -> ODE."""
    stage = "derive_q_g"
    try:
        q, g = derive_q_g(spec)
        hyp = {
            "q_integral": check_q_condition(q, spec.r_star).status.value,
            "g_integral": check_g_condition(g).status.value,
        }
        stage = "build_minorant"
        mu = math.sqrt(spec.theta)
        H = _windowed_sup_fn(g, mu)
        mres = build_minorant(H, mu, t_max)
        h = mres.h
        stage = "construct_p"
        if R_star is None:
            R_star = max(spec.r_star + 1.0, math.floor(min_R_star(spec.sigma)) + 2.0)
        p = construct_p(q, spec.sigma, delta, R_star, spec.r_star, r_hi=max(2.0 * r_end, R_star + 2.0))
        stage = "integrate_ode"
        sol = integrate_ode(p, h, epsilon, w_cap, r_end=r_end, rtol=rtol, atol=atol, bracket_tol=bracket_tol)
    except BarrierError as exc:
        if exc.stage is None:
            exc.stage = stage
        raise
    except (ValueError, DomainError, ArithmeticError) as exc:
        raise BarrierError(str(exc), stage) from exc

    if not sol.blew_up:
        return CertifyOutcome(None, sol, p, h, f"no certificate at desk scale: integration reached r = {sol.r[-1]:.6g} with w = {sol.w[-1]:.6g}")
    cert = Certificate(
        spec=spec.to_dict(),
        epsilon=float(epsilon),
        R_star=float(R_star),
        R_max_bracket=(sol.R_max_low, sol.R_max_high),
        tolerances={"rtol": rtol, "atol": atol, "w_cap": w_cap, "bracket_tol": bracket_tol, "minorant_t_max": t_max},
        construction={"mu": mu, "delta": p.delta, "M_delta_at_R_star_plus_1": p.M_at_ramp_end, "sigma": spec.sigma, "theta": spec.theta, "r_star": spec.r_star},
        hypotheses=hyp,
    )
    return CertifyOutcome(cert, sol, p, h, f"certificate: R_max in [{sol.R_max_low:.12g}, {sol.R_max_high:.12g}]")
