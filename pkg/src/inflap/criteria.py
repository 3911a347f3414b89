"""Integral conditions for nonexistence and the parametric classifier.

For f(x, u) = c(|x|) G(u) nonexistence follows from

    int_1^inf (g(t) t)^(-1/4) dt < inf     and     int_{r*}^inf q(r) dr = inf.

:func:`check_g_condition` and :func:`check_q_condition` test these numerically
on doubling windows; :func:`classify` settles the three parametric families
analytically.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .expr import DomainError, ScalarFn

__all__ = [
    "NonlinearitySpec",
    "Convergence",
    "ConvergenceVerdict",
    "Classification",
    "ClassificationVerdict",
    "WitnessInfo",
    "window_integrals",
    "convergence_test",
    "check_g_condition",
    "check_q_condition",
    "derive_q_g",
    "product_q",
    "classify",
]

#: number of trailing windows inspected by the ratio test
TAIL_WINDOWS = 8
#: dead-band of the log-power exponent around its critical value 1
LOG_BAND = 0.1
#: the log-power fit is trusted as exactly critical only this close to 1
CRITICAL_TIGHT = 0.004
#: fitted geometric rate (log2 units per window) that decides on its own
DRIFT_LIMIT = 0.005
#: below this the rate counts as zero and the log-power exponent decides
CRITICAL_DRIFT = 2e-4
#: largest tolerated misfit of the tail model, in log W
FIT_RESIDUAL = 0.05


@dataclass(frozen=True)
class NonlinearitySpec:
    """f(x, u) = c0 (1+|x|)^s ln^mu_log(2+|x|) u^lambda ln^nu_log(2+u)."""

    lam: float
    s: float = 0.0
    c0: float = 1.0
    mu_log: float = 0.0
    nu_log: float = 0.0
    sigma: float = 2.0
    theta: float = 2.0
    r_star: float = 1.0

    def __post_init__(self):
        if not self.c0 > 0:
            raise ValueError("c0 must be positive")
        if not (self.sigma > 1 and self.theta > 1):
            raise ValueError("sigma and theta must exceed 1")
        if not self.r_star > 0:
            raise ValueError("r_star must be positive")
        for name in ("lam", "s", "c0", "mu_log", "nu_log", "sigma", "theta", "r_star"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def f(self, r, u):
        """Right-hand side at |x| = r (numpy-friendly); zero where u <= 0."""
        r = np.asarray(r, dtype=float)
        u = np.asarray(u, dtype=float)
        with np.errstate(all="ignore"):
            val = (
                self.c0
                * (1.0 + r) ** self.s
                * np.log(2.0 + r) ** self.mu_log
                * np.where(u > 0, u, 1.0) ** self.lam
                * np.log(2.0 + np.where(u > 0, u, 0.0)) ** self.nu_log
            )
        return np.where(u > 0, val, 0.0)

    def to_dict(self) -> dict:
        return asdict(self)


class Convergence(str, enum.Enum):
    CONVERGES = "Converges"
    DIVERGES = "Diverges"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class ConvergenceVerdict:
    status: Convergence
    reason: str
    window_integrals: list[float]
    partial_sums: list[float]
    ratios: list[float]
    geometric_exponent: float | None = None
    log_exponent: float | None = None
    loglog_exponent: float | None = None

    @property
    def tail_exponent(self) -> float | None:
        """Fitted decay of the window integrals in log2 units per window."""
        return self.geometric_exponent


class Classification(str, enum.Enum):
    TRIVIAL_ONLY = "TrivialOnly"
    NONTRIVIAL_EXISTS = "NontrivialExists"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class WitnessInfo:
    """Closed-form counterexample, or a marker that none is known."""

    regime: str  # Example1 / Example2 / Example3
    exponent: float | None = None
    formula: str | None = None

    @property
    def has_formula(self) -> bool:
        return self.formula is not None


@dataclass
class ClassificationVerdict:
    status: Classification
    rule: str
    witness: WitnessInfo | None = None
    spec: NonlinearitySpec | None = field(default=None, repr=False)

    def summary(self) -> str:
        line = f"{self.status.value} ({self.rule})"
        if self.witness is not None and self.witness.exponent is not None:
            line += f"; witness exponent {_fmt(self.witness.exponent)}"
        return line

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "rule": self.rule,
            "witness": None if self.witness is None else asdict(self.witness),
            "spec": None if self.spec is None else self.spec.to_dict(),
        }


def _fmt(x: float) -> str:
    return f"{x:.12g}"


# -- doubling-window convergence test ----------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(48)


def window_integrals(log_integrand, start: float, K: int = 60) -> np.ndarray:
    """W_k = int over [start 2^k, start 2^(k+1)] for k = 0..K.

    ``log_integrand(t)`` returns the natural log of the integrand on a numpy
    array (``-inf`` for zeros).  Integration runs in x = ln t with a 48-point
    Gauss-Legendre rule per window, summed in log space.
    """
    out = np.empty(K + 1)
    ln2 = math.log(2.0)
    for k in range(K + 1):
        x0 = math.log(start) + k * ln2
        x = x0 + 0.5 * ln2 * (_GL_X + 1.0)
        with np.errstate(all="ignore"):
            logs = np.asarray(log_integrand(np.exp(x)), dtype=float) + x
        logs = np.where(np.isnan(logs), -np.inf, logs)
        peak = logs.max()
        if peak == -np.inf:
            out[k] = 0.0
            continue
        out[k] = math.exp(peak) * float(np.sum(0.5 * ln2 * _GL_W * np.exp(logs - peak)))
    return out


def _design(cols, y):
    return np.column_stack([np.ones_like(y)] + list(cols))


def _lstsq(cols, y):
    coef, *_ = np.linalg.lstsq(_design(cols, y), y, rcond=None)
    return coef


def convergence_test(W: np.ndarray, start: float) -> ConvergenceVerdict:
    """Three-valued tail verdict for the series of window integrals ``W``.

    The upper three quarters of the windows are fitted against
    log W_k = a - b k ln2 - p ln m, with m = log2 of the window midpoint.
    A clear geometric rate b decides on its own (and must agree with the
    trailing ratios); b on zero hands over to the log-power exponent p, and
    p on 1 to a second fit in ln m.  Anything between the bands is
    ``Inconclusive``.
    """
    W = np.asarray(W, dtype=float)
    K = len(W) - 1
    partial = np.cumsum(W).tolist()
    tail = W[-(TAIL_WINDOWS + 1):]
    base = dict(window_integrals=W.tolist(), partial_sums=partial)

    if np.all(tail == 0.0):
        return ConvergenceVerdict(Convergence.CONVERGES, "integrand vanishes on the tail windows", ratios=[0.0] * TAIL_WINDOWS, geometric_exponent=math.inf, **base)
    ks = np.arange(K // 4, K + 1)
    Wk = W[ks]
    if np.any(Wk <= 0.0) or not np.all(np.isfinite(Wk)):
        return ConvergenceVerdict(Convergence.INCONCLUSIVE, "tail windows mix zero and non-zero mass", ratios=[], **base)
    ratios = tail[1:] / tail[:-1]
    m = math.log2(start) + ks + 0.5
    if np.any(m <= 1.0):
        return ConvergenceVerdict(Convergence.INCONCLUSIVE, "too few windows above r = 2 for the tail fit", ratios=ratios.tolist(), **base)

    y = np.log(Wk)
    cols = [-ks * math.log(2.0), -np.log(m), 1.0 / m]
    coef = _lstsq(cols, y)
    b, p = float(coef[1]), float(coef[2])
    resid = float(np.max(np.abs(y - _design(cols, y) @ coef)))
    extra = dict(ratios=ratios.tolist(), geometric_exponent=b, log_exponent=p, **base)
    if resid > FIT_RESIDUAL:
        return ConvergenceVerdict(Convergence.INCONCLUSIVE, f"tail does not follow a power/log-power law (residual {resid:.2g})", **extra)
    if b > DRIFT_LIMIT:
        if np.all(ratios < 1.0):
            return ConvergenceVerdict(Convergence.CONVERGES, "window integrals decay geometrically", **extra)
        return ConvergenceVerdict(Convergence.INCONCLUSIVE, "fitted decay contradicts the trailing ratios", **extra)
    if b < -DRIFT_LIMIT:
        if np.all(ratios > 1.0):
            return ConvergenceVerdict(Convergence.DIVERGES, "window integrals grow geometrically", **extra)
        return ConvergenceVerdict(Convergence.INCONCLUSIVE, "fitted growth contradicts the trailing ratios", **extra)
    if abs(b) > CRITICAL_DRIFT:
        return ConvergenceVerdict(Convergence.INCONCLUSIVE, "geometric rate inside its dead-band", **extra)
    if p > 1.0 + LOG_BAND:
        return ConvergenceVerdict(Convergence.CONVERGES, "log-power tail with exponent above 1", **extra)
    if p < 1.0 - LOG_BAND:
        return ConvergenceVerdict(Convergence.DIVERGES, "log-power tail with exponent below 1", **extra)
    if abs(p - 1.0) > CRITICAL_TIGHT:
        return ConvergenceVerdict(Convergence.INCONCLUSIVE, "log-power exponent inside its dead-band", **extra)

    # p == 1: W_k m ~ (ln m)^-p2
    _, p2, _ = _lstsq([-np.log(np.log(m)), 1.0 / m], np.log(Wk * m))
    p2 = float(p2)
    extra["loglog_exponent"] = p2
    if p2 < 0.25:
        return ConvergenceVerdict(Convergence.DIVERGES, "harmonic boundary tail (m^-1 with no log decay)", **extra)
    if p2 > 1.5:
        return ConvergenceVerdict(Convergence.CONVERGES, "log-log tail with exponent above 1", **extra)
    return ConvergenceVerdict(Convergence.INCONCLUSIVE, "log-log exponent undecided", **extra)


def _log_values(fn: ScalarFn, t: np.ndarray) -> np.ndarray:
    vals = fn.many(t)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(vals)


def check_g_condition(g: ScalarFn, K: int = 60) -> ConvergenceVerdict:
    """Is int_1^inf (g(t) t)^(-1/4) dt finite?"""

    def log_integrand(t):
        lg = _log_values(g, t)
        if np.any(np.isnan(lg)) or np.any(lg == -np.inf):
            raise DomainError(f"{g.label}: g must be positive on (1, inf)")
        return -0.25 * (lg + np.log(t))

    return convergence_test(window_integrals(log_integrand, 1.0, K), 1.0)


def check_q_condition(q: ScalarFn, r_star: float = 1.0, K: int = 60) -> ConvergenceVerdict:
    """Is int_{r*}^inf q(r) dr finite?  ``Diverges`` means the hypothesis holds."""

    def log_integrand(r):
        vals = q.many(r)
        if np.any(vals < 0):
            raise DomainError(f"{q.label}: q must be non-negative")
        with np.errstate(divide="ignore"):
            return np.log(vals)

    return convergence_test(window_integrals(log_integrand, r_star, K), r_star)


# -- the product family ------------------------------------------------------


def _num(x: float) -> str:
    return f"({float(x)!r})"


def product_q(c: ScalarFn, lam: float) -> ScalarFn:
    """q(r) = 4^-lam r^lam c(r/2) for f = c(|x|) u^lam with sigma = theta = 2."""
    scale = 4.0 ** (-lam)

    def q(r):
        return scale * r**lam * c(r / 2.0)

    def qv(r):
        return scale * np.asarray(r) ** lam * c.many(np.asarray(r) / 2.0)

    return ScalarFn(q, qv, lo=max(2.0 * c.lo, 0.0) if math.isfinite(c.lo) else 0.0, label=f"4^-{lam!r} r^{lam!r} c(r/2)")


def derive_q_g(spec: NonlinearitySpec) -> tuple[ScalarFn, ScalarFn]:
    """The pair (q, g) for the product nonlinearity with sigma = theta = 2.

    q(r) = 4^-lam r^lam c(r/2) with c(r) = c0 (1+r)^s ln^mu(2+r), and
    g(t) = t^lam ln^nu(2+t).
    """
    q_text = f"4^(-{_num(spec.lam)}) * r^{_num(spec.lam)} * {_num(spec.c0)} * (1 + r/2)^{_num(spec.s)}"
    if spec.mu_log != 0:
        q_text += f" * ln(2 + r/2)^{_num(spec.mu_log)}"
    g_text = f"t^{_num(spec.lam)}"
    if spec.nu_log != 0:
        g_text += f" * ln(2 + t)^{_num(spec.nu_log)}"
    q = ScalarFn.parse(q_text, "r", lo=0.0)
    g = ScalarFn.parse(g_text, "t", lo=0.0, positive=True)
    return q, g


# -- analytic classifier -----------------------------------------------------


def _ex1_witness(lam, s) -> WitnessInfo:
    a = -(4.0 + s) / (lam - 3.0)
    return WitnessInfo("Example1", a, f"r^{_fmt(a)} - r0^{_fmt(a)}")


def _ex2_witness(lam, mu) -> WitnessInfo:
    k = -(mu + 1.0) / (lam - 3.0)
    return WitnessInfo("Example2", k, f"r ln(r)^{_fmt(k)} - r0 ln(r0)^{_fmt(k)}")


def _ex3_witness(nu, s) -> WitnessInfo:
    a = (4.0 + s) / (4.0 - nu)
    return WitnessInfo("Example3", a, f"exp(r^{_fmt(a)}) - exp(r0^{_fmt(a)})")


def classify(spec: NonlinearitySpec) -> ClassificationVerdict:
    """Decide trivial-only / nontrivial-exists for the parametric family.

    Families: Example 1 (mu = nu = 0), Example 2 (s = -lam-1, nu = 0),
    Example 3 (lam = 3, mu = 0).  Other log-decorated points follow the
    product-weight rule when it applies and are otherwise Inconclusive.
    """
    lam, s, mu, nu = spec.lam, spec.s, spec.mu_log, spec.nu_log
    V, C = ClassificationVerdict, Classification

    if nu != 0:
        if lam != 3 or mu != 0:
            return V(C.INCONCLUSIVE, "outside the settled families (log factor in u needs lambda = 3, mu = 0)", spec=spec)
        if nu > 4 and s >= -4:
            return V(C.TRIVIAL_ONLY, "Example 3 rule", spec=spec)
        if nu > 4:
            return V(C.NONTRIVIAL_EXISTS, "Example 3 rule", _ex3_witness(nu, s), spec)
        return V(C.NONTRIVIAL_EXISTS, "Example 3 rule (nu <= 4)", WitnessInfo("Example3"), spec)

    if mu != 0:
        critical = s == -lam - 1
        if lam > 3:
            if s > -lam - 1 or (critical and mu >= -1):
                return V(C.TRIVIAL_ONLY, "Example 2 rule" if critical else "product-weight rule", spec=spec)
            if critical:
                return V(C.NONTRIVIAL_EXISTS, "Example 2 rule", _ex2_witness(lam, mu), spec)
            return V(C.INCONCLUSIVE, "no settled statement for s < -lambda-1 with a log factor", spec=spec)
        if critical:
            return V(C.NONTRIVIAL_EXISTS, "Example 2 rule (lambda <= 3)", WitnessInfo("Example2"), spec)
        return V(C.INCONCLUSIVE, "no settled statement for lambda <= 3 off the critical s", spec=spec)

    if lam > 3:
        if s >= -lam - 1:
            return V(C.TRIVIAL_ONLY, "Example 1 rule", spec=spec)
        return V(C.NONTRIVIAL_EXISTS, "Example 1 rule", _ex1_witness(lam, s), spec)
    return V(C.NONTRIVIAL_EXISTS, "Example 1 rule (lambda <= 3)", WitnessInfo("Example1"), spec)
