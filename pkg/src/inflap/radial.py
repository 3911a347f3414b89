"""Radial calculus: the infinity-Laplacian of u(x) = phi(|x|), numeric
differentiation, and the bump-kernel mollifier.

For u(x) = phi(|x|) the Hessian acts on the gradient direction x/|x| with
eigenvalue phi'', so  sum_ij u_ij u_i u_j = phi''(r) phi'(r)^2  in every
dimension n >= 2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicHermiteSpline

from .expr import DomainError, ScalarFn

__all__ = [
    "MollifyError",
    "BumpKernel",
    "KERNEL_MASS",
    "bump",
    "mollify",
    "mollify_piecewise_linear",
    "RadialProfile",
    "numeric_derivatives",
    "default_step",
    "infinity_laplacian_radial",
]


class MollifyError(RuntimeError):
    pass


def _raw_bump(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape)
    inside = np.abs(t) < 1.0
    ti = t[inside]
    out[inside] = np.exp(-1.0 / (1.0 - ti * ti))
    return out


def _raw_bump_scalar(t: float) -> float:
    if abs(t) >= 1.0:
        return 0.0
    return math.exp(-1.0 / (1.0 - t * t))


#: integral of exp(-1/(1-t^2)) over (-1, 1), roughly 0.443994
KERNEL_MASS = integrate.quad(_raw_bump_scalar, -1.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=200)[0]


def bump(t):
    """Unit-mass kernel omega(t) = c exp(-1/(1-t^2)) on (-1, 1)."""
    return _raw_bump(t) / KERNEL_MASS


@dataclass(frozen=True)
class BumpKernel:
    """omega_delta(t) = omega(t/delta)/delta, supported in (-delta, delta)."""

    delta: float
    normalization: float = 1.0 / KERNEL_MASS

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("kernel scale delta must be positive")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return _raw_bump(t / self.delta) * self.normalization / self.delta

    def mass(self) -> float:
        return integrate.quad(lambda t: float(self(t)), -self.delta, self.delta, epsabs=1e-13, epsrel=1e-13, limit=200)[0]


# Cumulative moments K0(v) = int_{-1}^v omega, K1(v) = int_{-1}^v u omega(u) du,
# tabulated cell by cell with Gauss-Legendre and interpolated as Hermite cubics
# (the derivatives omega and u*omega are known exactly).
def _moment_tables(n_cells: int = 4000):
    v = np.linspace(-1.0, 1.0, n_cells + 1)
    gx, gw = np.polynomial.legendre.leggauss(12)
    a, b = v[:-1, None], v[1:, None]
    u = 0.5 * (b - a) * gx[None, :] + 0.5 * (a + b)
    w = 0.5 * (b - a) * gw[None, :]
    om = bump(u)
    k0 = np.concatenate([[0.0], np.cumsum((om * w).sum(axis=1))])
    k1 = np.concatenate([[0.0], np.cumsum((u * om * w).sum(axis=1))])
    dv = bump(v)
    return CubicHermiteSpline(v, k0, dv), CubicHermiteSpline(v, k1, v * dv)


_K0, _K1 = _moment_tables()


def _k0(v):
    return _K0(np.clip(v, -1.0, 1.0))


def _k1(v):
    return _K1(np.clip(v, -1.0, 1.0))


def _window_points(f: ScalarFn, delta: float, t: float) -> list[float]:
    pts = []
    for b in tuple(f.breakpoints) + ((f.lo,) if math.isfinite(f.lo) else ()):
        u = (t - b) / delta
        if -1.0 < u < 1.0:
            pts.append(u)
    return sorted(set(pts))


def mollify(f: ScalarFn, delta: float, t, epsabs: float = 1e-9, epsrel: float = 1e-11):
    """Convolution (omega_delta * f)(t) by adaptive quadrature.

    ``f`` is extended by zero below its domain.  ``t`` may be an array, in
    which case each point is integrated separately.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    if np.ndim(t) > 0:
        return np.array([mollify(f, delta, float(x), epsabs, epsrel) for x in np.ravel(t)]).reshape(np.shape(t))
    t = float(t)

    def integrand(u):
        return _raw_bump_scalar(u) * f.extended(t - delta * u)

    pts = _window_points(f, delta, t)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err, info = integrate.quad(integrand, -1.0, 1.0, points=pts or None, epsabs=epsabs * KERNEL_MASS, epsrel=epsrel, limit=max(500, 4 * len(pts)), full_output=True)[:3]
    val /= KERNEL_MASS
    err /= KERNEL_MASS
    if err > max(epsabs, epsrel * abs(val)) * 10:
        raise MollifyError(f"quadrature did not converge at t={t!r} (estimated error {err:.3g})")
    return val


def mollify_piecewise_linear(xs, ys, delta: float, t, left: float = 0.0, chunk: int = 256) -> np.ndarray:
    """Exact convolution of omega_delta with a piecewise-linear function.

    The function interpolates ``(xs, ys)`` linearly, equals ``left`` before
    ``xs[0]`` and ``ys[-1]`` after ``xs[-1]``.  Repeated abscissae encode
    jumps.  Only the kernel moment tables are approximate (about 1e-14).
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    t = np.asarray(t, dtype=float)
    flat = t.ravel()
    out = np.empty(flat.shape)
    order = np.argsort(flat, kind="stable")
    ts = flat[order]
    a_all, b_all = xs[:-1], xs[1:]
    ya_all, yb_all = ys[:-1], ys[1:]
    keep = b_all > a_all
    a_all, b_all, ya_all, yb_all = a_all[keep], b_all[keep], ya_all[keep], yb_all[keep]
    slope_all = (yb_all - ya_all) / (b_all - a_all)
    res = np.empty(ts.shape)
    for start in range(0, len(ts), chunk):
        tc = ts[start:start + chunk]
        i0 = max(int(np.searchsorted(b_all, tc[0] - delta)) - 1, 0)
        i1 = int(np.searchsorted(a_all, tc[-1] + delta)) + 1
        a, b = a_all[i0:i1], b_all[i0:i1]
        ya, sl = ya_all[i0:i1], slope_all[i0:i1]
        T = tc[:, None]
        vlo = (T - b[None, :]) / delta
        vhi = (T - a[None, :]) / delta
        dk0 = _k0(vhi) - _k0(vlo)
        dk1 = _k1(vhi) - _k1(vlo)
        # F(t - y) = ya + sl*(t - a) - sl*y
        body = (ya[None, :] + sl[None, :] * (T - a[None, :])) * dk0 - sl[None, :] * delta * dk1
        total = body.sum(axis=1)
        total += left * (1.0 - _k0((tc - xs[0]) / delta))
        total += ys[-1] * _k0((tc - xs[-1]) / delta)
        res[start:start + chunk] = total
    out[order] = res
    return out.reshape(t.shape)


# -- derivatives -------------------------------------------------------------


def default_step(r: float) -> float:
    return max(1e-4, 1e-4 * abs(r))


def numeric_derivatives(f, r: float, h0: float | None = None, lo: float | None = None, hi: float | None = None) -> tuple[float, float]:
    """Central differences with one Richardson level: returns (f', f'').

    ``f`` is a :class:`ScalarFn` or a plain callable; the stencil
    ``[r - 2 h0, r + 2 h0]`` must lie inside the domain.
    """
    h = default_step(r) if h0 is None else float(h0)
    if isinstance(f, ScalarFn):
        lo = f.lo if lo is None else lo
        hi = f.hi if hi is None else hi
    lo = -math.inf if lo is None else lo
    hi = math.inf if hi is None else hi
    if not (r - 2 * h > lo and r + 2 * h <= hi):
        raise DomainError(f"difference stencil [{r - 2 * h!r}, {r + 2 * h!r}] leaves the domain ({lo}, {hi}]")
    fm2, fm1, f0, fp1, fp2 = (float(f(r + k * h)) for k in (-2, -1, 0, 1, 2))
    d1_h = (fp1 - fm1) / (2 * h)
    d1_2h = (fp2 - fm2) / (4 * h)
    d2_h = (fp1 - 2 * f0 + fm1) / (h * h)
    d2_2h = (fp2 - 2 * f0 + fm2) / (4 * h * h)
    return (4 * d1_h - d1_2h) / 3, (4 * d2_h - d2_2h) / 3


@dataclass(frozen=True)
class RadialProfile:
    """phi on (r_lo, r_hi); derivatives closed-form when given, else numeric."""

    phi: Callable[[float], float]
    dphi: Callable[[float], float] | None = None
    d2phi: Callable[[float], float] | None = None
    r_lo: float = 0.0
    r_hi: float = math.inf
    h0: float | None = None
    label: str = "<profile>"

    def __call__(self, r: float) -> float:
        return float(self.phi(r))

    @property
    def closed_form(self) -> bool:
        return self.dphi is not None and self.d2phi is not None

    def derivatives(self, r: float) -> tuple[float, float]:
        if not (self.r_lo < r < self.r_hi):
            raise DomainError(f"{self.label}: r={r!r} outside ({self.r_lo}, {self.r_hi})")
        if self.closed_form:
            return float(self.dphi(r)), float(self.d2phi(r))
        return numeric_derivatives(self.phi, r, self.h0, self.r_lo, self.r_hi)

    def validate_derivatives(self, n: int = 32, seed: int = 0, rtol: float = 1e-6, span: tuple[float, float] | None = None) -> list[tuple[float, float, float]]:
        """Compare closed-form derivatives with Richardson differences.

        Returns the offending ``(r, closed, numeric)`` triples; empty means
        agreement at every sampled point.
        """
        if not self.closed_form:
            return []
        rng = np.random.default_rng(seed)
        lo, hi = span if span is not None else (self.r_lo, min(self.r_hi, self.r_lo + 10.0 * max(1.0, abs(self.r_lo))))
        bad = []
        for r in np.exp(rng.uniform(math.log(lo + 1e-3 * (hi - lo) + 1e-12), math.log(hi), n)):
            num = numeric_derivatives(self.phi, float(r), None, self.r_lo, self.r_hi)
            exact = (float(self.dphi(r)), float(self.d2phi(r)))
            for e, m in zip(exact, num):
                if abs(e - m) > rtol * max(abs(e), abs(m), 1e-300) and abs(e - m) > 1e-9:
                    bad.append((float(r), e, m))
        return bad


def infinity_laplacian_radial(p: RadialProfile, r: float) -> float:
    """phi''(r) * phi'(r)^2 for u(x) = phi(|x|)."""
    d1, d2 = p.derivatives(r)
    return d2 * d1 * d1
