"""A tiny arithmetic expression language over one variable.

Grammar (loosest to tightest)::

    sum     := product (('+' | '-') product)*
    product := unary (('*' | '/') unary)*
    unary   := '-' unary | '+' unary | power
    power   := atom ('^' unary)?          # right-associative
    atom    := number | name | name '(' args ')' | '(' sum ')'

``^`` binds tighter than unary minus, so ``-2^2 == -4`` and ``2^-1 == 0.5``.
The parser is a Pratt parser; the grammar above is only documentation.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "ExprError",
    "ExprSyntaxError",
    "DomainError",
    "Expression",
    "Const",
    "Var",
    "Unary",
    "Binary",
    "Call",
    "parse",
    "evaluate",
    "evaluate_array",
    "to_text",
    "ScalarFn",
]


class ExprError(ValueError):
    """Base class for expression failures."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int, text: str = ""):
        self.offset = offset
        self.text = text
        super().__init__(f"{message} at offset {offset}")


class DomainError(ExprError):
    """Evaluation left the domain of an operation (ln 0, 1/0, 0^-1, ...)."""


# -- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # neg, ln, exp, sqrt, abs, sin, cos
    arg: "Expression"


@dataclass(frozen=True)
class Binary:
    op: str  # + - * / ^
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Call:
    fn: str  # min, max, pow
    args: tuple


Expression = Const | Var | Unary | Binary | Call

UNARY_FUNCS = ("ln", "exp", "sqrt", "abs", "sin", "cos")
CALL_ARITY = {"min": None, "max": None, "pow": 2}
CONSTANTS = {"pi": math.pi, "e": math.e}


# -- tokenizer ---------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)


@dataclass
class _Tok:
    kind: str  # num, name, op, end
    text: str
    offset: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        start = m.start(kind)
        tok = m.group(kind)
        if tok == "**":
            tok = "^"
        toks.append(_Tok(kind, tok, start))
        pos = m.end()
    toks.append(_Tok("end", "", n))
    return toks


# -- Pratt parser ------------------------------------------------------------

_LBP = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 30}
_PREFIX_BP = 25  # below '^', above '*' and '/'


class _Parser:
    def __init__(self, text: str, variable: str):
        self.text = text
        self.variable = variable
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, op: str) -> None:
        t = self.tok
        if t.kind != "op" or t.text != op:
            shown = t.text or "end of input"
            raise ExprSyntaxError(f"expected {op!r}, found {shown!r}", t.offset, self.text)
        self.advance()

    def expression(self, rbp: int = 0) -> Expression:
        left = self.nud(self.advance())
        while True:
            t = self.tok
            if t.kind != "op" or t.text not in _LBP or _LBP[t.text] <= rbp:
                return left
            self.advance()
            left = self.led(t, left)

    def nud(self, t: _Tok) -> Expression:
        if t.kind == "num":
            value = float(t.text)
            if not math.isfinite(value):
                raise ExprSyntaxError("number out of range", t.offset, self.text)
            return Const(value)
        if t.kind == "name":
            return self.name(t)
        if t.kind == "op":
            if t.text == "(":
                inner = self.expression()
                self.expect(")")
                return inner
            if t.text == "-":
                return Unary("neg", self.expression(_PREFIX_BP))
            if t.text == "+":
                return self.expression(_PREFIX_BP)
        shown = t.text or "end of input"
        raise ExprSyntaxError(f"unexpected {shown!r}", t.offset, self.text)

    def led(self, t: _Tok, left: Expression) -> Expression:
        if t.text == "^":
            # rbp one below lbp makes '^' right-associative
            return Binary("^", left, self.expression(_LBP["^"] - 1))
        return Binary(t.text, left, self.expression(_LBP[t.text]))

    def name(self, t: _Tok) -> Expression:
        word = t.text
        is_call = self.tok.kind == "op" and self.tok.text == "("
        if word == self.variable and not is_call:
            return Var(word)
        if word in CONSTANTS and not is_call:
            return Const(CONSTANTS[word])
        if word in UNARY_FUNCS or word in CALL_ARITY:
            if not is_call:
                raise ExprSyntaxError(f"function {word!r} needs arguments", t.offset, self.text)
            self.advance()
            args = [self.expression()]
            while self.tok.kind == "op" and self.tok.text == ",":
                self.advance()
                args.append(self.expression())
            self.expect(")")
            if word in UNARY_FUNCS:
                if len(args) != 1:
                    raise ExprSyntaxError(f"{word} takes one argument", t.offset, self.text)
                return Unary(word, args[0])
            arity = CALL_ARITY[word]
            if (arity is not None and len(args) != arity) or len(args) < 1:
                raise ExprSyntaxError(f"wrong number of arguments to {word}", t.offset, self.text)
            return Call(word, tuple(args))
        raise ExprSyntaxError(f"unknown identifier {word!r}", t.offset, self.text)


def parse(text: str, variable: str = "t") -> Expression:
    """Parse ``text`` into an expression tree over ``variable``."""
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0, text)
    p = _Parser(text, variable)
    tree = p.expression()
    if p.tok.kind != "end":
        raise ExprSyntaxError(f"unexpected {p.tok.text!r}", p.tok.offset, text)
    return tree


# -- evaluation --------------------------------------------------------------


def _pow(a: float, b: float) -> float:
    if a == 0.0 and b < 0.0:
        raise DomainError("0 raised to a negative power")
    if a < 0.0 and b != math.floor(b):
        raise DomainError(f"negative base {a!r} with non-integer exponent {b!r}")
    try:
        return math.pow(a, b)
    except OverflowError:
        raise DomainError(f"overflow in {a!r}^{b!r}") from None


def _unary(op: str, x: float) -> float:
    if op == "neg":
        return -x
    if op == "abs":
        return abs(x)
    if op == "sin":
        return math.sin(x)
    if op == "cos":
        return math.cos(x)
    if op == "ln":
        if x <= 0.0:
            raise DomainError(f"ln of non-positive value {x!r}")
        return math.log(x)
    if op == "sqrt":
        if x < 0.0:
            raise DomainError(f"sqrt of negative value {x!r}")
        return math.sqrt(x)
    if op == "exp":
        try:
            return math.exp(x)
        except OverflowError:
            raise DomainError(f"overflow in exp({x!r})") from None
    raise DomainError(f"unknown unary op {op!r}")


def _eval(e: Expression, x: float) -> float:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return x
    if isinstance(e, Unary):
        return _unary(e.op, _eval(e.arg, x))
    if isinstance(e, Binary):
        a = _eval(e.left, x)
        b = _eval(e.right, x)
        op = e.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if b == 0.0:
                raise DomainError("division by zero")
            return a / b
        return _pow(a, b)
    if isinstance(e, Call):
        vals = [_eval(a, x) for a in e.args]
        if e.fn == "min":
            return min(vals)
        if e.fn == "max":
            return max(vals)
        return _pow(vals[0], vals[1])
    raise DomainError(f"not an expression node: {e!r}")


def evaluate(e: Expression, x: float) -> float:
    """Evaluate ``e`` at ``x``; failures raise :class:`DomainError`."""
    try:
        value = _eval(e, float(x))
    except (OverflowError, ZeroDivisionError) as exc:
        raise DomainError(str(exc)) from None
    if not math.isfinite(value):
        raise DomainError(f"non-finite result at {x!r}")
    return value


def _first_bad(xs: np.ndarray, mask: np.ndarray) -> float:
    return float(np.broadcast_to(xs, mask.shape)[mask][0])


def evaluate_array(e: Expression, xs) -> np.ndarray:
    """Vectorised :func:`evaluate`; raises on the first bad point."""
    xs = np.asarray(xs, dtype=float)

    def ev(node):
        if isinstance(node, Const):
            return np.full(xs.shape, node.value)
        if isinstance(node, Var):
            return xs
        if isinstance(node, Unary):
            a = ev(node.arg)
            if node.op == "neg":
                return -a
            if node.op == "abs":
                return np.abs(a)
            if node.op == "sin":
                return np.sin(a)
            if node.op == "cos":
                return np.cos(a)
            if node.op == "ln":
                bad = a <= 0.0
                if bad.any():
                    raise DomainError(f"ln of non-positive value at x={_first_bad(xs, bad)!r}")
                return np.log(a)
            if node.op == "sqrt":
                bad = a < 0.0
                if bad.any():
                    raise DomainError(f"sqrt of negative value at x={_first_bad(xs, bad)!r}")
                return np.sqrt(a)
            return np.exp(a)
        if isinstance(node, Binary):
            a, b = ev(node.left), ev(node.right)
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            if node.op == "/":
                bad = b == 0.0
                if bad.any():
                    raise DomainError(f"division by zero at x={_first_bad(xs, bad)!r}")
                return a / b
            return _pow_array(a, b)
        if isinstance(node, Call):
            vals = [ev(a) for a in node.args]
            if node.fn == "min":
                return np.minimum.reduce(vals)
            if node.fn == "max":
                return np.maximum.reduce(vals)
            return _pow_array(vals[0], vals[1])
        raise DomainError(f"not an expression node: {node!r}")

    def _pow_array(a, b):
        a, b = np.broadcast_arrays(a, b)
        bad = ((a == 0.0) & (b < 0.0)) | ((a < 0.0) & (b != np.floor(b)))
        if bad.any():
            raise DomainError(f"invalid power at x={_first_bad(xs, bad)!r}")
        return np.power(a, b)

    with np.errstate(all="ignore"):
        out = ev(e)
    out = np.broadcast_to(out, xs.shape).astype(float)
    bad = ~np.isfinite(out)
    if bad.any():
        raise DomainError(f"non-finite result at x={_first_bad(xs, bad)!r}")
    return out


# -- canonical printer -------------------------------------------------------


def to_text(e: Expression) -> str:
    """Fully parenthesised text that parses back to the same tree."""
    if isinstance(e, Const):
        return repr(e.value) if e.value >= 0 else f"(-{-e.value!r})"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        if e.op == "neg":
            return f"(-{to_text(e.arg)})"
        return f"{e.op}({to_text(e.arg)})"
    if isinstance(e, Binary):
        return f"({to_text(e.left)} {e.op} {to_text(e.right)})"
    if isinstance(e, Call):
        return f"{e.fn}({', '.join(to_text(a) for a in e.args)})"
    raise TypeError(e)


def variable_of(e: Expression) -> str | None:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        return variable_of(e.arg)
    if isinstance(e, Binary):
        return variable_of(e.left) or variable_of(e.right)
    if isinstance(e, Call):
        for a in e.args:
            v = variable_of(a)
            if v:
                return v
    return None


# -- scalar functions --------------------------------------------------------


@dataclass(frozen=True)
class ScalarFn:
    """A real function of one variable on the interval ``(lo, hi)``.

    ``func`` evaluates a scalar, ``vec`` (optional) a numpy array.  With
    ``positive`` set, a value ``<= 0`` inside the domain is an error.
    ``breakpoints`` lists known kinks or jumps; quadrature routines use them.
    Below ``lo`` the function is extended by zero (see :meth:`extended`).
    """

    func: Callable[[float], float]
    vec: Callable[[np.ndarray], np.ndarray] | None = None
    lo: float = -math.inf
    hi: float = math.inf
    positive: bool = False
    label: str = "<fn>"
    breakpoints: tuple = ()

    def __call__(self, x: float) -> float:
        x = float(x)
        self._check_domain(x)
        value = float(self.func(x))
        if not math.isfinite(value):
            raise DomainError(f"{self.label}: non-finite value at {x!r}")
        if self.positive and value <= 0.0:
            raise DomainError(f"{self.label}: positivity violated at {x!r} (value {value!r})")
        return value

    def _check_domain(self, x: float) -> None:
        if not (self.lo < x <= self.hi):
            raise DomainError(f"{self.label}: {x!r} outside domain ({self.lo}, {self.hi}]")

    def many(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        bad = ~((xs > self.lo) & (xs <= self.hi))
        if bad.any():
            raise DomainError(f"{self.label}: {_first_bad(xs, bad)!r} outside domain ({self.lo}, {self.hi}]")
        if self.vec is not None:
            with np.errstate(all="ignore"):
                out = np.asarray(self.vec(xs), dtype=float)
            out = np.broadcast_to(out, xs.shape).copy()
        else:
            out = np.array([float(self.func(float(x))) for x in xs.ravel()]).reshape(xs.shape)
        bad = ~np.isfinite(out)
        if bad.any():
            raise DomainError(f"{self.label}: non-finite value at {_first_bad(xs, bad)!r}")
        if self.positive:
            bad = out <= 0.0
            if bad.any():
                raise DomainError(f"{self.label}: positivity violated at {_first_bad(xs, bad)!r}")
        return out

    def extended(self, x: float) -> float:
        """Value with the zero extension below the domain."""
        if x <= self.lo:
            return 0.0
        return self(x)

    def extended_many(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        out = np.zeros(xs.shape)
        inside = xs > self.lo
        if inside.any():
            out[inside] = self.many(xs[inside])
        return out

    def with_domain(self, lo: float | None = None, hi: float | None = None, positive: bool | None = None) -> "ScalarFn":
        return ScalarFn(
            self.func,
            self.vec,
            self.lo if lo is None else lo,
            self.hi if hi is None else hi,
            self.positive if positive is None else positive,
            self.label,
            self.breakpoints,
        )

    # constructors

    @classmethod
    def parse(cls, text: str, variable: str = "t", lo: float = 0.0, hi: float = math.inf, positive: bool = False) -> "ScalarFn":
        tree = parse(text, variable)
        return cls(
            func=lambda x, _t=tree: evaluate(_t, x),
            vec=lambda xs, _t=tree: evaluate_array(_t, xs),
            lo=lo,
            hi=hi,
            positive=positive,
            label=text,
        )

    @classmethod
    def from_expression(cls, tree: Expression, lo: float = 0.0, hi: float = math.inf, positive: bool = False) -> "ScalarFn":
        return cls(lambda x: evaluate(tree, x), lambda xs: evaluate_array(tree, xs), lo, hi, positive, to_text(tree))

    @classmethod
    def from_samples(cls, xs: Sequence[float], ys: Sequence[float], positive: bool = False, label: str = "<table>") -> "ScalarFn":
        """Piecewise-linear interpolant through a sample table.

        The domain is ``(xs[0], xs[-1]]`` widened to include ``xs[0]``.
        Linear interpolation keeps monotone data monotone.
        """
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or len(xs) < 2:
            raise ValueError("sample table needs matching 1-d arrays of length >= 2")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("sample abscissae must be strictly increasing")
        lo = float(np.nextafter(xs[0], -math.inf))
        return cls(
            func=lambda x: float(np.interp(x, xs, ys)),
            vec=lambda v: np.interp(v, xs, ys),
            lo=lo,
            hi=float(xs[-1]),
            positive=positive,
            label=label,
            breakpoints=tuple(float(x) for x in xs),
        )

    @classmethod
    def constant(cls, c: float, lo: float = -math.inf, hi: float = math.inf, positive: bool = False) -> "ScalarFn":
        return cls(lambda x: c, lambda xs: np.full(np.shape(xs), float(c)), lo, hi, positive, repr(float(c)))

    @classmethod
    def from_callable(cls, f, vec=None, lo: float = -math.inf, hi: float = math.inf, positive: bool = False, label: str = "<fn>", breakpoints=()) -> "ScalarFn":
        return cls(f, vec, lo, hi, positive, label, tuple(breakpoints))
