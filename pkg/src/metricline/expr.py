"""Expression DSL: parsing, printing and batched evaluation over a scalar field.

The grammar::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := base ("^" factor)?
    base   := number | ident | ident "(" expr ("," expr)* ")" | "(" expr ")" | "-" base

Piecewise functions use ``pw(cond1, e1, cond2, e2, ..., e_else)`` where each
condition is ``expr op expr`` with ``op`` one of ``< <= > >= ==``.  The first
condition that holds selects its branch.

Unary minus binds tighter than ``^`` (it is part of ``base``), so ``-x^2``
means ``(-x)^2``.  Write ``-(x^2)`` for the other reading.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

KINK_TOL = 1e-12

FUNCTIONS = ("abs", "sqrt", "exp", "log", "sgn", "min", "max", "pw")
RELOPS = ("<", "<=", ">", ">=", "==")


class ExprError(ValueError):
    """Base class for DSL errors."""


class ParseError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.message = message
        self.offset = offset


class UnboundVariable(ExprError):
    def __init__(self, name: str):
        super().__init__(f"unbound variable {name!r}")
        self.name = name


class DomainError(ExprError):
    """An operation was applied outside its domain (log of a negative, 0/0, ...)."""

    def __init__(self, node: "Expr", reason: str, point: Mapping[str, float] | None = None,
                 mask: np.ndarray | None = None):
        where = ""
        if point:
            where = " at " + ", ".join(f"{k}={v!r}" for k, v in point.items())
        super().__init__(f"{reason} in {pretty(node)}{where}")
        self.node = node
        self.reason = reason
        self.point = dict(point or {})
        self.mask = mask


# --------------------------------------------------------------------------
# AST
# --------------------------------------------------------------------------


class Expr:
    """Base class of all AST nodes."""

    __slots__ = ()

    def __str__(self) -> str:
        return pretty(self)


@dataclass(frozen=True)
class Const(Expr):
    value: float
    offset: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Var(Expr):
    name: str
    offset: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr
    offset: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr
    offset: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr
    offset: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr
    offset: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Div(Expr):
    left: Expr
    right: Expr
    offset: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: Expr
    offset: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Abs(Expr):
    arg: Expr
    offset: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Sqrt(Expr):
    arg: Expr
    offset: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Exp(Expr):
    arg: Expr
    offset: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Log(Expr):
    arg: Expr
    offset: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Sgn(Expr):
    arg: Expr
    offset: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Min(Expr):
    args: tuple[Expr, ...]
    offset: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Max(Expr):
    args: tuple[Expr, ...]
    offset: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Cond:
    op: str
    left: Expr
    right: Expr

    def __post_init__(self):
        if self.op not in RELOPS:
            raise ExprError(f"unknown comparison {self.op!r}")


@dataclass(frozen=True)
class Piecewise(Expr):
    branches: tuple[tuple[Cond, Expr], ...]
    otherwise: Expr
    offset: int = field(default=-1, compare=False, repr=False)


_UNARY = {"abs": Abs, "sqrt": Sqrt, "exp": Exp, "log": Log, "sgn": Sgn}
_UNARY_NAME = {cls: name for name, cls in _UNARY.items()}
_BINARY = {"+": Add, "-": Sub, "*": Mul, "/": Div}
_BINARY_SYM = {cls: sym for sym, cls in _BINARY.items()}


def children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, (Const, Var)):
        return ()
    if isinstance(e, (Neg, Abs, Sqrt, Exp, Log, Sgn)):
        return (e.arg,)
    if isinstance(e, (Add, Sub, Mul, Div)):
        return (e.left, e.right)
    if isinstance(e, Pow):
        return (e.base, e.exponent)
    if isinstance(e, (Min, Max)):
        return e.args
    if isinstance(e, Piecewise):
        out: list[Expr] = []
        for cond, branch in e.branches:
            out += [cond.left, cond.right, branch]
        out.append(e.otherwise)
        return tuple(out)
    raise TypeError(f"not an expression node: {e!r}")


def free_vars(e: Expr) -> frozenset[str]:
    """Exact set of variable names occurring in ``e``."""
    if isinstance(e, Var):
        return frozenset((e.name,))
    out: frozenset[str] = frozenset()
    for c in children(e):
        out |= free_vars(c)
    return out


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables by expressions (simultaneously)."""
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Const):
        return e
    if isinstance(e, (Neg, Abs, Sqrt, Exp, Log, Sgn)):
        return type(e)(substitute(e.arg, mapping), offset=e.offset)
    if isinstance(e, (Add, Sub, Mul, Div)):
        return type(e)(substitute(e.left, mapping), substitute(e.right, mapping), offset=e.offset)
    if isinstance(e, Pow):
        return Pow(substitute(e.base, mapping), substitute(e.exponent, mapping), offset=e.offset)
    if isinstance(e, (Min, Max)):
        return type(e)(tuple(substitute(a, mapping) for a in e.args), offset=e.offset)
    if isinstance(e, Piecewise):
        branches = tuple(
            (Cond(c.op, substitute(c.left, mapping), substitute(c.right, mapping)), substitute(b, mapping))
            for c, b in e.branches
        )
        return Piecewise(branches, substitute(e.otherwise, mapping), offset=e.offset)
    raise TypeError(f"not an expression node: {e!r}")


def swap_xy(e: Expr) -> Expr:
    return substitute(e, {"x": Var("y"), "y": Var("x")})


def canonical(e: Expr) -> Expr:
    """Order the operands of commutative nodes so equal-up-to-commutation trees compare equal.

    ``abs(a - b)`` is treated as commutative in ``a`` and ``b``.
    """
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Abs) and isinstance(e.arg, Sub):
        a, b = sorted((canonical(e.arg.left), canonical(e.arg.right)), key=pretty)
        return Abs(Sub(a, b))
    if isinstance(e, (Neg, Abs, Sqrt, Exp, Log, Sgn)):
        return type(e)(canonical(e.arg))
    if isinstance(e, (Add, Mul)):
        # flatten the associative chain, then sort its operands
        ops, stack = [], [e]
        while stack:
            n = stack.pop()
            if type(n) is type(e):
                stack += [n.left, n.right]
            else:
                ops.append(canonical(n))
        ops.sort(key=pretty)
        out = ops[0]
        for o in ops[1:]:
            out = type(e)(out, o)
        return out
    if isinstance(e, (Sub, Div)):
        return type(e)(canonical(e.left), canonical(e.right))
    if isinstance(e, Pow):
        return Pow(canonical(e.base), canonical(e.exponent))
    if isinstance(e, (Min, Max)):
        return type(e)(tuple(sorted((canonical(a) for a in e.args), key=pretty)))
    if isinstance(e, Piecewise):
        return Piecewise(
            tuple((Cond(c.op, canonical(c.left), canonical(c.right)), canonical(b)) for c, b in e.branches),
            canonical(e.otherwise),
        )
    raise TypeError(f"not an expression node: {e!r}")


def is_structurally_symmetric(e: Expr) -> bool:
    """Cheap sufficient test for ``e(x, y) == e(y, x)``."""
    return canonical(swap_xy(e)) == canonical(e)


# --------------------------------------------------------------------------
# Printing
# --------------------------------------------------------------------------

_PREC_SUM, _PREC_PROD, _PREC_POW, _PREC_BASE = 1, 2, 3, 4


def _fmt_number(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(float(v))


def _prec(e: Expr) -> int:
    if isinstance(e, (Add, Sub)):
        return _PREC_SUM
    if isinstance(e, (Mul, Div)):
        return _PREC_PROD
    if isinstance(e, Pow):
        return _PREC_POW
    if isinstance(e, Const) and e.value < 0:
        return _PREC_SUM
    return _PREC_BASE


def _pp(e: Expr, need: int) -> str:
    s = _pp_raw(e)
    return f"({s})" if _prec(e) < need else s


def _pp_raw(e: Expr) -> str:
    if isinstance(e, Const):
        return _fmt_number(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return "-" + _pp(e.arg, _PREC_BASE)
    if isinstance(e, (Add, Sub)):
        return f"{_pp(e.left, _PREC_SUM)} {_BINARY_SYM[type(e)]} {_pp(e.right, _PREC_PROD)}"
    if isinstance(e, (Mul, Div)):
        return f"{_pp(e.left, _PREC_PROD)}{_BINARY_SYM[type(e)]}{_pp(e.right, _PREC_POW)}"
    if isinstance(e, Pow):
        return f"{_pp(e.base, _PREC_BASE)}^{_pp(e.exponent, _PREC_POW)}"
    if isinstance(e, (Abs, Sqrt, Exp, Log, Sgn)):
        return f"{_UNARY_NAME[type(e)]}({_pp(e.arg, 0)})"
    if isinstance(e, (Min, Max)):
        name = "min" if isinstance(e, Min) else "max"
        return f"{name}({', '.join(_pp(a, 0) for a in e.args)})"
    if isinstance(e, Piecewise):
        parts = []
        for c, b in e.branches:
            parts.append(f"{_pp(c.left, 0)} {c.op} {_pp(c.right, 0)}")
            parts.append(_pp(b, 0))
        parts.append(_pp(e.otherwise, 0))
        return f"pw({', '.join(parts)})"
    raise TypeError(f"not an expression node: {e!r}")


def pretty(e: Expr) -> str:
    """Render ``e`` in the DSL; ``parse(pretty(e))`` rebuilds the same tree."""
    return _pp_raw(e)


# --------------------------------------------------------------------------
# Parsing
# --------------------------------------------------------------------------

_TOKEN = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op><=|>=|==|[-+*/^(),<>])"
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    offset: int


def _tokenize(source: str) -> list[_Tok]:
    # byte offset of each character position
    byte_at = [0]
    for ch in source:
        byte_at.append(byte_at[-1] + len(ch.encode("utf-8")))
    toks = []
    pos = 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", byte_at[pos])
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, m.group(), byte_at[pos]))
        pos = m.end()
    toks.append(_Tok("end", "", byte_at[len(source)]))
    return toks


class _Parser:
    def __init__(self, source: str, variables: Sequence[str]):
        self.toks = _tokenize(source)
        self.i = 0
        self.variables = tuple(variables)
        for v in self.variables:
            if v in FUNCTIONS:
                raise ExprError(f"variable name {v!r} clashes with a function")

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        if self.tok.text != text or self.tok.kind == "end":
            found = "end of input" if self.tok.kind == "end" else repr(self.tok.text)
            raise ParseError(f"expected {text!r}, found {found}", self.tok.offset)
        return self.advance()

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            raise ParseError(f"unexpected {self.tok.text!r}", self.tok.offset)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            t = self.advance()
            e = _BINARY[t.text](e, self.term(), offset=t.offset)
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.tok.text in ("*", "/") and self.tok.kind == "op":
            t = self.advance()
            e = _BINARY[t.text](e, self.factor(), offset=t.offset)
        return e

    def factor(self) -> Expr:
        b = self.base()
        if self.tok.text == "^":
            t = self.advance()
            return Pow(b, self.factor(), offset=t.offset)
        return b

    def base(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Const(float(t.text), offset=t.offset)
        if t.text == "-":
            self.advance()
            return Neg(self.base(), offset=t.offset)
        if t.text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "ident":
            self.advance()
            if t.text in FUNCTIONS:
                if self.tok.text != "(":
                    raise ParseError(f"function {t.text!r} needs an argument list", self.tok.offset)
                return self.call(t)
            if t.text not in self.variables:
                raise ParseError(f"unknown identifier {t.text!r}", t.offset)
            if self.tok.text == "(":
                raise ParseError(f"{t.text!r} is not a function", self.tok.offset)
            return Var(t.text, offset=t.offset)
        found = "end of input" if t.kind == "end" else repr(t.text)
        raise ParseError(f"unexpected {found}", t.offset)

    def call(self, name: _Tok) -> Expr:
        self.expect("(")
        if name.text == "pw":
            return self.piecewise(name)
        args = [self.expr()]
        while self.tok.text == ",":
            self.advance()
            args.append(self.expr())
        self.expect(")")
        if name.text in _UNARY:
            if len(args) != 1:
                raise ParseError(f"{name.text} takes 1 argument, got {len(args)}", name.offset)
            return _UNARY[name.text](args[0], offset=name.offset)
        if len(args) < 2:
            raise ParseError(f"{name.text} takes at least 2 arguments, got {len(args)}", name.offset)
        cls = Min if name.text == "min" else Max
        return cls(tuple(args), offset=name.offset)

    def piecewise(self, name: _Tok) -> Expr:
        branches = []
        while True:
            left = self.expr()
            if self.tok.kind == "op" and self.tok.text in RELOPS:
                op = self.advance().text
                right = self.expr()
                self.expect(",")
                branches.append((Cond(op, left, right), self.expr()))
                if self.tok.text == ")":
                    raise ParseError("pw needs a final else-branch", self.tok.offset)
                self.expect(",")
                continue
            if not branches:
                raise ParseError("pw needs at least one condition", self.tok.offset)
            self.expect(")")
            return Piecewise(tuple(branches), left, offset=name.offset)


def parse(source: str, variables: Sequence[str] = ("x", "y")) -> Expr:
    """Parse DSL text into an AST whose free variables are among ``variables``."""
    return _Parser(source, variables).parse()


# --------------------------------------------------------------------------
# Evaluation
# --------------------------------------------------------------------------


class RealField:
    """Plain float64 arrays.  Kink bookkeeping is a no-op."""

    name = "real"

    def lift(self, values: np.ndarray):
        return np.asarray(values, dtype=float)

    def val(self, a) -> np.ndarray:
        return a

    def take(self, a, idx):
        return a[idx]

    def empty(self, n: int):
        return np.zeros(n)

    def put(self, dst, idx, src) -> None:
        dst[idx] = src

    def abs(self, a, scale):
        return np.abs(a)

    def sgn(self, a, scale):
        return np.sign(a)

    def sqrt(self, a, scale):
        return np.sqrt(a)

    def exp(self, a):
        return np.exp(a)

    def log(self, a):
        return np.log(a)

    def pow(self, a, b, const_exponent: bool, scale):
        return np.power(a, b)

    def choose(self, mask, a, b, disc, scale):
        return np.where(mask, a, b)

    def mark_kink(self, a, mask):
        return a

    def vanishing_power(self, out, base, c, scale):
        return out


REAL = RealField()


class _Evaluator:
    def __init__(self, field, n: int, scale: np.ndarray, kink_tol: float):
        self.F = field
        self.n = n
        self.scale = scale
        self.kink_tol = kink_tol
        self.bad = np.zeros(n, dtype=bool)
        self.bad_node: Expr | None = None
        self.bad_reason = ""

    def fail(self, node: Expr, reason: str, idx: np.ndarray, local_mask: np.ndarray) -> None:
        if local_mask.any():
            if self.bad_node is None:
                self.bad_node, self.bad_reason = node, reason
            self.bad[idx[local_mask]] = True

    def ev(self, e: Expr, env: Mapping[str, object], idx: np.ndarray):
        F = self.F
        if isinstance(e, Const):
            return F.lift(np.full(len(idx), e.value))
        if isinstance(e, Var):
            try:
                return env[e.name]
            except KeyError:
                raise UnboundVariable(e.name) from None
        if isinstance(e, Neg):
            return -self.ev(e.arg, env, idx)
        if isinstance(e, Add):
            return self.ev(e.left, env, idx) + self.ev(e.right, env, idx)
        if isinstance(e, Sub):
            return self.ev(e.left, env, idx) - self.ev(e.right, env, idx)
        if isinstance(e, Mul):
            return self.ev(e.left, env, idx) * self.ev(e.right, env, idx)
        if isinstance(e, Div):
            a = self.ev(e.left, env, idx)
            b = self.ev(e.right, env, idx)
            zero = F.val(b) == 0
            self.fail(e, "division by zero", idx, zero)
            if zero.any():
                b = b + F.lift(np.where(zero, np.nan, 0.0))
            return a / b
        if isinstance(e, Pow):
            return self.pow(e, env, idx)
        scale = self.scale[idx]
        if isinstance(e, Abs):
            return F.abs(self.ev(e.arg, env, idx), scale * self.kink_tol)
        if isinstance(e, Sgn):
            return F.sgn(self.ev(e.arg, env, idx), scale * self.kink_tol)
        if isinstance(e, Sqrt):
            a = self.ev(e.arg, env, idx)
            neg = F.val(a) < 0
            self.fail(e, "sqrt of a negative number", idx, neg)
            return F.sqrt(self._poison(a, neg), scale * self.kink_tol)
        if isinstance(e, Exp):
            return F.exp(self.ev(e.arg, env, idx))
        if isinstance(e, Log):
            a = self.ev(e.arg, env, idx)
            nonpos = F.val(a) <= 0
            self.fail(e, "log of a non-positive number", idx, nonpos)
            return F.log(self._poison(a, nonpos))
        if isinstance(e, (Min, Max)):
            acc = self.ev(e.args[0], env, idx)
            for arg in e.args[1:]:
                b = self.ev(arg, env, idx)
                disc = acc - b
                dv = F.val(disc)
                mask = dv <= 0 if isinstance(e, Min) else dv >= 0
                acc = F.choose(mask, acc, b, disc, scale * self.kink_tol)
            return acc
        if isinstance(e, Piecewise):
            return self.piecewise(e, env, idx)
        raise TypeError(f"not an expression node: {e!r}")

    def _poison(self, a, mask):
        if mask.any():
            return a + self.F.lift(np.where(mask, np.nan, 0.0))
        return a

    def pow(self, e: Pow, env, idx):
        F = self.F
        a = self.ev(e.base, env, idx)
        if not free_vars(e.exponent):
            c = float(evaluate(e.exponent, {}))
            if c == int(c) and abs(c) <= 64:
                k = int(c)
                if k < 0:
                    zero = F.val(a) == 0
                    self.fail(e, "zero to a negative power", idx, zero)
                    a = self._poison(a, zero)
                out = ipow(a, k, lambda n: F.lift(np.ones(n)), len(idx))
                if k > 2:
                    out = F.vanishing_power(out, a, k, self.scale[idx] * self.kink_tol)
                return out
            b = F.lift(np.full(len(idx), c))
            const = True
        else:
            b = self.ev(e.exponent, env, idx)
            const = False
            c = None
        av = F.val(a)
        bv = F.val(b)
        bad = av < 0
        if const and c == int(c):
            bad = np.zeros_like(bad)
        self.fail(e, "non-integer power of a negative number", idx, bad)
        zero_neg = (av == 0) & (bv < 0)
        self.fail(e, "zero to a negative power", idx, zero_neg)
        a = self._poison(a, bad | zero_neg)
        return F.pow(a, b, const, self.scale[idx] * self.kink_tol)

    def piecewise(self, e: Piecewise, env, idx):
        F = self.F
        n = len(idx)
        remaining = np.ones(n, dtype=bool)
        # points whose evaluated conditions sit on a branch boundary
        near = np.zeros(n, dtype=bool)
        out = F.empty(n)
        scale = self.scale[idx]
        for cond, branch in e.branches:
            if not remaining.any():
                break
            local = np.flatnonzero(remaining)
            sub_env = {k: F.take(v, local) for k, v in env.items()}
            lv = F.val(self.ev(cond.left, sub_env, idx[local]))
            rv = F.val(self.ev(cond.right, sub_env, idx[local]))
            hit = _compare(cond.op, lv, rv)
            near[local] |= np.abs(lv - rv) <= scale[local] * self.kink_tol
            if hit.any():
                sel = local[hit]
                sub = {k: F.take(v, sel) for k, v in env.items()}
                F.put(out, sel, F.mark_kink(self.ev(branch, sub, idx[sel]), near[sel]))
                remaining[sel] = False
        if remaining.any():
            sel = np.flatnonzero(remaining)
            sub = {k: F.take(v, sel) for k, v in env.items()}
            F.put(out, sel, F.mark_kink(self.ev(e.otherwise, sub, idx[sel]), near[sel]))
        return out


def _compare(op: str, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    return a == b


def ipow(a, k: int, one, n: int):
    """Integer power by repeated multiplication (same arithmetic order for every field)."""
    if k == 0:
        return one(n)
    m = abs(k)
    out = a
    for _ in range(m - 1):
        out = out * a
    if k < 0:
        return one(n) / out
    return out


def _broadcast_env(env: Mapping[str, object]) -> tuple[dict[str, np.ndarray], int, bool]:
    arrays = {k: np.atleast_1d(np.asarray(v, dtype=float)) for k, v in env.items()}
    if not arrays:
        return {}, 1, True
    shapes = np.broadcast_shapes(*(a.shape for a in arrays.values()))
    scalar = all(np.ndim(v) == 0 for v in env.values())
    flat = {k: np.broadcast_to(a, shapes).ravel().astype(float) for k, a in arrays.items()}
    return flat, int(np.prod(shapes)), scalar


def evaluate_field(e: Expr, env: Mapping[str, object], field, n: int, scale: np.ndarray,
                   kink_tol: float = KINK_TOL, errors: str = "raise"):
    """Evaluate ``e`` with bindings already lifted into ``field`` (batch size ``n``).

    With ``errors="raise"`` any domain violation raises :class:`DomainError`.
    With ``errors="mask"`` the result is returned together with a boolean mask
    of the points that hit a domain violation.
    """
    ev = _Evaluator(field, n, np.asarray(scale, dtype=float), kink_tol)
    out = ev.ev(e, env, np.arange(n))
    vals = field.val(out)
    if np.ndim(vals) == 0:
        out = field.lift(np.full(n, float(vals)))
        vals = field.val(out)
    nonfinite = ~np.isfinite(vals) & ~ev.bad
    if nonfinite.any():
        ev.fail(e, "non-finite result", np.arange(n), nonfinite)
    if errors == "mask":
        return out, ev.bad.copy()
    if ev.bad.any():
        i = int(np.flatnonzero(ev.bad)[0])
        point = {k: float(field.val(v)[i]) for k, v in env.items()}
        raise DomainError(ev.bad_node, ev.bad_reason, point, ev.bad.copy())
    return out


def point_scale(arrays: Iterable[np.ndarray], n: int) -> np.ndarray:
    scale = np.ones(n)
    for a in arrays:
        scale = np.maximum(scale, np.abs(a))
    return scale


def evaluate(e: Expr, env: Mapping[str, object], errors: str = "raise"):
    """Evaluate over plain reals.

    Bindings may be scalars or arrays (broadcast together).  Scalar bindings
    give a float back; array bindings give an array of the broadcast shape.
    """
    flat, n, scalar = _broadcast_env(env)
    missing = free_vars(e) - flat.keys()
    if missing:
        raise UnboundVariable(sorted(missing)[0])
    shape = np.broadcast_shapes(*(np.shape(v) for v in env.values())) if env else ()
    scale = point_scale(flat.values(), n)
    res = evaluate_field(e, flat, REAL, n, scale, errors=errors)
    if errors == "mask":
        vals, bad = res
        if scalar:
            return float(vals[0]), bool(bad[0])
        return vals.reshape(shape), bad.reshape(shape)
    if scalar:
        return float(res[0])
    return res.reshape(shape)


def is_number(v: float) -> bool:
    return isinstance(v, (int, float)) and math.isfinite(v)
