"""Smooth nondecreasing minorant h <= H with a doubling bound.

Construction on the nodes t_k = mu^(k/4):

* eta(t) = inf of H over (t/mu, t mu), gamma_k = sup of eta over (t_{k-1}, t_{k+1});
* h_1 = gamma_1 on [1, t_1];
* if mu h_{k-1}(t_{k-1}) >= gamma_k, h_k = min(gamma_k, h_{k-1}) continued flat,
  otherwise h_{k-1} continued by the linear bridge up to mu h_{k-1}(t_{k-1});
* below 1, min(htilde(1), inf over (t, 1] of H); zero on (-inf, 0];
* h(t) = (omega_{1/2} * htilde)(t - 1/2), the average of htilde over (t-1, t).

Everything lives on one log grid whose step is ln(mu)/256, so every t_k
is a node and every window (t/mu, t mu) is 2*255 nodes wide.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.ndimage import minimum_filter1d

from .criteria import Convergence, check_g_condition
from .expr import DomainError, ScalarFn
from .radial import mollify, mollify_piecewise_linear

__all__ = [
    "MinorantError",
    "MinorantLevels",
    "MinorantResult",
    "MinorantReport",
    "window_inf",
    "build_minorant",
    "verify_minorant",
    "check_levels",
    "integral_bound_factor",
]

log = logging.getLogger(__name__)

#: grid nodes per window half-width ln(mu)
NODES_PER_LOG_MU = 256
#: lowest grid node; htilde is zero below it
T_FLOOR = 1e-6


class MinorantError(ValueError):
    pass


def integral_bound_factor(mu: float) -> float:
    """mu^(1/2) / (1 - mu^(-1/16))."""
    return math.sqrt(mu) / (1.0 - mu ** (-1.0 / 16.0))


def window_inf(H: ScalarFn, mu: float, t: float, samples: int = 512) -> float:
    """inf of H over the open window (t/mu, t mu).

    Dense log sampling plus the declared breakpoints, refined by a bounded
    scalar minimization on the two cells around the best sample.
    """
    if not mu > 1:
        raise MinorantError("mu must exceed 1")
    a, b = math.log(t) - math.log(mu), math.log(t) + math.log(mu)
    # endpoints nudged inward stand in for the one-sided limits
    nudge = 1e-12 * max(1.0, abs(a), abs(b))
    x = np.linspace(a + nudge, b - nudge, samples + 2)
    pts = np.exp(x)
    vals = H.many(pts)
    bps = [p for p in H.breakpoints if t / mu < p < t * mu]
    best_i = int(np.argmin(vals))
    best = float(vals[best_i])
    for p in bps:
        best = min(best, float(H(p)))
    lo = x[max(best_i - 1, 0)]
    hi = x[min(best_i + 1, len(x) - 1)]
    if hi > lo:
        res = optimize.minimize_scalar(lambda u: float(H(math.exp(u))), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12 * max(1.0, abs(lo))})
        if res.success:
            best = min(best, float(res.fun))
    return best


@dataclass
class MinorantLevels:
    """The piecewise-linear levels h_k on [1, t_k]; ``cases[k-1]`` is 1 or 2."""

    t_nodes: np.ndarray
    gammas: np.ndarray
    levels: list[tuple[np.ndarray, np.ndarray]]
    cases: list[int]

    def level(self, k: int) -> ScalarFn:
        xs, ys = self.levels[k - 1]
        return ScalarFn.from_samples(xs, ys, label=f"h_{k}")

    def __len__(self) -> int:
        return len(self.levels)


@dataclass
class MinorantResult:
    h: ScalarFn
    htilde: ScalarFn
    htilde_xs: np.ndarray = field(repr=False)
    htilde_ys: np.ndarray = field(repr=False)
    levels: MinorantLevels = field(repr=False)
    grid: np.ndarray = field(repr=False)
    eta: np.ndarray = field(repr=False)
    mu: float = 2.0**0.5
    t_max: float = 1e6
    diagnostics: dict = field(default_factory=dict)

    def h_exact(self, t):
        """Adaptive-quadrature evaluation of the same convolution (slow path)."""
        return mollify(self.htilde, 0.5, np.asarray(t, dtype=float) - 0.5)


def _clip_above(xs: np.ndarray, ys: np.ndarray, c: float) -> tuple[np.ndarray, np.ndarray]:
    """min(c, f) for a continuous piecewise-linear f, inserting crossings."""
    if np.all(ys <= c):
        return xs, ys
    out_x, out_y = [xs[0]], [min(ys[0], c)]
    for i in range(1, len(xs)):
        x0, y0, x1, y1 = xs[i - 1], ys[i - 1], xs[i], ys[i]
        if (y0 - c) * (y1 - c) < 0:
            xc = x0 + (c - y0) * (x1 - x0) / (y1 - y0)
            out_x.append(xc)
            out_y.append(c)
        out_x.append(x1)
        out_y.append(min(y1, c))
    return np.asarray(out_x), np.asarray(out_y)


def _mollified_evaluators(hx: np.ndarray, hy: np.ndarray):
    """Evaluators of h(t) = average of htilde over (t-1, t) with the bump weight.

    Where htilde is linear on the whole window the symmetric average is the
    midpoint value htilde(t - 1/2); only the other points need the moment
    tables.
    """
    x_last, y_last = float(hx[-1]), float(hy[-1])

    def general(t):
        # htilde >= 0, so negative outputs are moment-table rounding
        return np.maximum(mollify_piecewise_linear(hx, hy, 0.5, t - 0.5, left=0.0), 0.0)

    def vec(t):
        t = np.asarray(t, dtype=float)
        i = np.searchsorted(hx, t - 1.0, side="right")
        inner = (i > 0) & (i < len(hx))
        inner[inner] &= t[inner] <= hx[i[inner]]
        flat = t - 1.0 >= x_last
        out = np.empty(t.shape)
        out[flat] = y_last
        out[inner] = np.interp(t[inner] - 0.5, hx, hy)
        rest = ~(inner | flat)
        if rest.any():
            out[rest] = general(t[rest])
        return out

    def scalar(t):
        t = float(t)
        if t - 1.0 >= x_last:
            return y_last
        i = int(np.searchsorted(hx, t - 1.0, side="right"))
        if 0 < i < len(hx) and t <= hx[i]:
            x0, x1 = hx[i - 1], hx[i]
            m = t - 0.5
            return float(hy[i - 1] + (hy[i] - hy[i - 1]) * (m - x0) / (x1 - x0))
        return float(general(np.array([t]))[0])

    return vec, scalar


def _grid(mu: float, t_top: float):
    step = math.log(mu) / NODES_PER_LOG_MU
    j_lo = math.floor(math.log(T_FLOOR) / step)
    j_hi = math.ceil(math.log(t_top) / step) + NODES_PER_LOG_MU + 1
    j = np.arange(j_lo, j_hi + 1)
    return np.exp(j * step), -j_lo  # index of t = 1


def build_minorant(H: ScalarFn, mu: float, t_max: float = 1e6, *, check_eta: bool = True) -> MinorantResult:
    """Run the level construction until t_K >= t_max, four extra levels, extend and mollify."""
    if not mu > 1:
        raise MinorantError("mu must exceed 1")
    if not t_max > 1:
        raise MinorantError("t_max must exceed 1")
    quarter = NODES_PER_LOG_MU // 4
    K = math.ceil(4.0 * math.log(t_max) / math.log(mu) - 1e-9)
    K_final = K + 4
    t_top = mu ** ((K_final + 1) / 4.0)
    grid, i1 = _grid(mu, t_top)
    try:
        Hv = H.many(grid)
    except DomainError as exc:
        raise MinorantError(f"H is not positive on the grid: {exc}") from exc
    if np.any(~(Hv > 0)) or np.any(~np.isfinite(Hv)):
        bad = grid[np.argmax(~(Hv > 0) | ~np.isfinite(Hv))]
        raise MinorantError(f"H must be positive and finite; fails at t={bad:.6g}")

    eta = minimum_filter1d(Hv, size=2 * (NODES_PER_LOG_MU - 1) + 1, mode="nearest")
    # edge nodes lack a full window; they are never used below
    t_nodes = grid[i1 + quarter * np.arange(K_final + 2)]

    gammas = np.empty(K_final + 1)
    refinement_delta = 0.0
    for k in range(1, K_final + 1):
        lo_i = i1 + quarter * (k - 1) + 1
        hi_i = i1 + quarter * (k + 1) - 1
        seg = eta[lo_i:hi_i + 1]
        j = int(np.argmax(seg))
        g_grid = float(seg[j])
        g_ref = window_inf(H, mu, float(grid[lo_i + j]))
        gammas[k] = min(g_grid, g_ref)
        refinement_delta = max(refinement_delta, (g_grid - gammas[k]) / g_grid)

    levels: list[tuple[np.ndarray, np.ndarray]] = []
    cases: list[int] = [1]
    xs = np.array([t_nodes[0], t_nodes[1]])
    ys = np.array([gammas[1], gammas[1]])
    levels.append((xs, ys))
    for k in range(2, K_final + 1):
        tk1, tk = t_nodes[k - 1], t_nodes[k]
        last = ys[-1]
        if mu * last >= gammas[k]:
            xs, ys = _clip_above(xs, ys, gammas[k])
            xs = np.append(xs, tk)
            ys = np.append(ys, min(gammas[k], last))
            cases.append(1)
        else:
            xs = np.append(xs, tk)
            ys = np.append(ys, mu * last)
            cases.append(2)
        levels.append((xs, ys))
    lev = MinorantLevels(t_nodes=t_nodes[: K_final + 1], gammas=gammas, levels=levels, cases=cases)

    # extension below 1 as a lower step function of the suffix minimum of H
    below = grid[: i1 + 1]
    suffix = np.minimum.accumulate(Hv[: i1 + 1][::-1])[::-1]
    step_vals = np.minimum(suffix[:-1], ys[0])
    ext_x = np.repeat(below[:-1], 2)[1:]
    ext_x = np.append(ext_x, below[-1])
    ext_y = np.repeat(step_vals, 2)
    hx = np.concatenate([[below[0]], ext_x, xs])
    hy = np.concatenate([[0.0], ext_y, ys])
    # the first pair encodes the jump from 0 at T_FLOOR
    hx = hx.astype(float)

    def ht_vec(t):
        return np.interp(np.asarray(t, dtype=float), hx, hy, left=0.0, right=hy[-1])

    htilde = ScalarFn.from_callable(lambda t: float(ht_vec(float(t))), vec=ht_vec, lo=0.0, label="htilde", breakpoints=tuple(np.unique(hx).tolist()))

    h_vec, h_scalar = _mollified_evaluators(hx, hy)
    h = ScalarFn.from_callable(h_scalar, vec=h_vec, lo=0.0, label="h")

    diagnostics = {
        "K": K,
        "levels_built": K_final,
        "t_K": float(t_nodes[K]),
        "extension_start": float(t_nodes[K_final]),
        "grid_refinement_delta": refinement_delta,
        "cases": {"flat": cases.count(1), "bridge": cases.count(2)},
    }
    stab_x = levels[K - 1][0]
    diff = np.abs(np.interp(stab_x, *levels[K_final - 1]) - levels[K - 1][1])
    diagnostics["stabilization_max_diff"] = float(diff.max())

    res = MinorantResult(h=h, htilde=htilde, htilde_xs=hx, htilde_ys=hy, levels=lev, grid=grid, eta=eta, mu=mu, t_max=t_max, diagnostics=diagnostics)

    if check_eta:
        span = math.floor(math.log2(t_max))
        if span >= 8:
            eta_fn = ScalarFn.from_samples(grid, eta, label="eta")
            verdict = check_g_condition(eta_fn, K=span - 1)
            diagnostics["eta_condition"] = verdict.status.value
            if verdict.status is not Convergence.CONVERGES:
                log.warning("integral of (eta t)^(-1/4) is %s on [1, %g]; the minorant need not keep it finite", verdict.status.value, t_max)
    return res


# -- verification ------------------------------------------------------------


@dataclass
class MinorantReport:
    properties: dict[str, bool]
    beta: float
    min_h_unit: float
    integral_ratio_max: float
    integral_bound: float
    violations: dict[str, list[float]]

    @property
    def passed(self) -> bool:
        return all(self.properties.values())

    def summary(self) -> str:
        n = sum(self.properties.values())
        return f"{n}/{len(self.properties)} properties pass; beta={self.beta:.6g}; integral ratio {self.integral_ratio_max:.6g} <= {self.integral_bound:.6g}"


def verification_grid(t_max: float, n: int = 4000) -> np.ndarray:
    """Deterministic sample points in (0, t_max]: log grid plus a linear block on (0, 2]."""
    return np.unique(np.concatenate([np.geomspace(1e-3, t_max, n), np.linspace(2.0 / n, 2.0, n // 4)]))


def verify_minorant(res: MinorantResult, H: ScalarFn, mu: float | None = None, alpha: float = 2.0, n: int = 4000) -> MinorantReport:
    """Sample the four properties; violations are reported, never raised."""
    mu = res.mu if mu is None else mu
    t_max = res.t_max
    t = verification_grid(t_max, n)
    hv = res.h.many(t)
    Hv = H.many(t)
    viol: dict[str, list[float]] = {}

    above = hv > Hv * (1.0 + 1e-9)
    viol["1"] = t[above].tolist()
    # absolute noise of the exact convolution scales with htilde on the kernel window
    noise = 1e-12 * np.abs(hv[1:]) + 1e-13 * res.htilde.many(t[1:])
    dec = np.diff(hv) < -noise
    viol["2"] = t[1:][dec].tolist()

    t3 = np.geomspace(2.0, t_max / max(alpha, 1.0), n)
    ratio = res.h.many(alpha * t3) / res.h.many(t3)
    beta = float(np.max(ratio))
    viol["3"] = [] if math.isfinite(beta) and beta > 0 else t3[~np.isfinite(ratio)].tolist()

    # partial integrals of (h t)^(-1/4) and (eta t)^(-1/4) from 1 up to each t_k <= t_max
    g = res.grid
    sel = (g >= 1.0 - 1e-12) & (g <= t_max * (1 + 1e-12))
    tg = g[sel]
    xg = np.log(tg)
    f_h = (res.h.many(tg) * tg) ** -0.25 * tg
    f_eta = (res.eta[sel] * tg) ** -0.25 * tg
    cum_h = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(xg) * (f_h[1:] + f_h[:-1]))])
    cum_eta = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(xg) * (f_eta[1:] + f_eta[:-1]))])
    quarter = NODES_PER_LOG_MU // 4
    idx = np.arange(quarter, len(tg), quarter)
    ratios = cum_h[idx] / cum_eta[idx]
    bound = integral_bound_factor(mu)
    viol["4"] = tg[idx][ratios > bound].tolist()

    unit = t[(t > 0) & (t <= 1.0)]
    return MinorantReport(
        properties={k: not v for k, v in viol.items()},
        beta=beta,
        min_h_unit=float(res.h.many(unit).min()),
        integral_ratio_max=float(ratios.max()) if len(ratios) else 0.0,
        integral_bound=bound,
        violations=viol,
    )


def check_levels(res: MinorantResult, H: ScalarFn) -> dict[str, int]:
    """Count node violations of properties i) and ii) across all levels."""
    lev = res.levels
    mu = res.mu
    bad_i = bad_ii = 0
    prev = None
    for k, (xs, ys) in enumerate(lev.levels, start=1):
        bad_i += int(np.sum(ys > H.many(xs) * (1 + 1e-9)))
        if prev is not None:
            px, py = prev
            bad_i += int(np.sum(np.interp(px, xs, ys) > py * (1 + 1e-12)))
        if k >= 2:
            tk1 = lev.t_nodes[k - 1]
            s = np.unique(np.concatenate([xs[xs <= tk1], xs[xs <= tk1 * mu**0.25] / mu**0.25]))
            s = s[(s >= 1.0) & (s <= tk1)]
            lhs = np.interp(s * mu**0.25, xs, ys)
            rhs = mu**2 * np.interp(s, xs, ys)
            bad_ii += int(np.sum(lhs > rhs * (1 + 1e-12)))
        prev = (xs, ys)
    return {"i": bad_i, "ii": bad_ii}
