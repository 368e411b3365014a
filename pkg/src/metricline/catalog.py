"""Built-in candidate metrics with their closed-form mixed partials.

Every entry stores its DSL source, so ``metricline catalog --name X`` prints
text that parses back to the evaluated expression.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .candidate import LambdaSet, MetricCandidate
from .expr import Abs, ExprError, Sub, Var, _fmt_number, evaluate, parse, pretty, substitute


class CatalogError(ValueError):
    pass


@dataclass(frozen=True)
class ParamSpec:
    default: object
    constraint: str
    check: Callable[[object], bool] = field(compare=False, repr=False, default=lambda v: True)


NAMES = ("concave_ti", "p_relative", "relative", "chordal", "generalized_chordal")

PARAMS: dict[str, dict[str, ParamSpec]] = {
    "concave_ti": {"g": ParamSpec("sqrt(x)", "concave generator in x with g(0)=0, g>0 on (0,inf)")},
    "p_relative": {"p": ParamSpec(1.0, "p >= 1", lambda v: v >= 1)},
    "relative": {},
    "chordal": {},
    "generalized_chordal": {
        "alpha": ParamSpec(1.0, "alpha > 0", lambda v: v > 0),
        "beta": ParamSpec(1.0, "beta >= 0", lambda v: v >= 0),
        "p": ParamSpec(3.0, "p >= 1", lambda v: v >= 1),
    },
}

EXPECTED = {
    "concave_ti": "T-H4A",
    "p_relative": "T-combined",
    "relative": None,
    "chordal": "T-H4D",
    "generalized_chordal": "T-combined",
}


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    params: dict
    d: MetricCandidate
    closed_cross_partial: Callable | None
    nonsmooth_set: LambdaSet
    expected_theorem: str | None
    notes: tuple[str, ...] = ()

    @property
    def source(self) -> str:
        return self.d.source


def _num(v: float) -> str:
    return _fmt_number(float(v))


def _validate(name: str, params: dict | None) -> dict:
    if name not in PARAMS:
        raise CatalogError(f"unknown catalog entry {name!r}; choose from {', '.join(NAMES)}")
    schema = PARAMS[name]
    params = dict(params or {})
    unknown = set(params) - set(schema)
    if unknown:
        raise CatalogError(f"{name} takes no parameter {sorted(unknown)[0]!r}")
    out = {}
    for key, spec in schema.items():
        v = params.get(key, spec.default)
        if isinstance(spec.default, float):
            try:
                v = float(v)
            except (TypeError, ValueError):
                raise CatalogError(f"parameter {key} must be a number, got {v!r}") from None
            if not np.isfinite(v) or not spec.check(v):
                raise CatalogError(f"invalid parameter {key}={_num(v)}: need {spec.constraint}")
        out[key] = v
    return out


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------


def chordal_d12(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return 2 * np.abs(x - y) / ((1 + x * x) ** 1.5 * (1 + y * y) ** 1.5)


def p_relative_d12_printed(x, y, p):
    """The published three-case formula, which assumes x > y (applied to the ordered pair)."""
    x, y = np.maximum(x, y), np.minimum(x, y)
    ax, ay = np.abs(x), np.abs(y)
    N = ax**p + ay**p
    first = (np.sign(x) * ax ** (2 * p - 1) - np.sign(y) * ay ** (2 * p - 1)) / N ** (2 + 1 / p)
    second = p * np.sign(x * y) * (ax - ay) / N ** (2 + 1 / p) * np.abs(x * y) ** (p - 1)
    return first + second


def p_relative_d12(x, y, p):
    """Exact mixed partial of the p-relative metric off the diagonal and off xy = 0."""
    x, y = np.maximum(x, y), np.minimum(x, y)
    ax, ay = np.abs(x), np.abs(y)
    N = ax**p + ay**p
    num = (np.sign(x) * ax ** (2 * p - 1) - np.sign(y) * ay ** (2 * p - 1)
           + p * np.abs(x * y) ** (p - 1) * (np.sign(y) * ax - np.sign(x) * ay))
    return num / N ** (2 + 1 / p)


def reduced_gchordal_d12_printed(x, y, p):
    """Published formula for the reduced generalized chordal metric (valid for x < y)."""
    x, y = np.minimum(x, y), np.maximum(x, y)
    ax, ay = np.abs(x), np.abs(y)
    num = np.sign(y) * ay ** (p - 1) - np.sign(x) * ax ** (p - 1)
    return num / ((1 + ax**p) ** ((p + 1) / p) * (1 + ay**p) ** ((p + 1) / p))


def _gchordal_d12(alpha, beta, p):
    scaling, s, _ = _reduction(alpha, beta, p)

    def f(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return scaling * s * s * reduced_gchordal_d12_printed(s * x, s * y, p)

    return f


# ---------------------------------------------------------------------------
# entries
# ---------------------------------------------------------------------------


def p_relative_source(p: float) -> str:
    q = _num(p)
    return f"pw(abs(x) + abs(y) == 0, 0, abs(y - x)/(abs(x)^{q} + abs(y)^{q})^(1/{q}))"


def gchordal_source(alpha: float, beta: float, p: float) -> str:
    a, b, q = _num(alpha), _num(beta), _num(p)
    return f"abs(y - x)/(({a} + {b}*abs(x)^{q})^(1/{q})*({a} + {b}*abs(y)^{q})^(1/{q}))"


def _reduction(alpha, beta, p):
    s = (beta / alpha) ** (1 / p)
    scaling = (alpha * beta) ** (-1 / p)
    reduced = MetricCandidate.from_source(gchordal_source(1, 1, p), label=f"reduced_generalized_chordal(p={_num(p)})",
                                          lambda_set=LambdaSet(("xy=0",)))
    return scaling, s, reduced


@dataclass(frozen=True)
class Reduction:
    """d(x, y) = scaling * reduced(g(x), g(y)) with g(s) = factor * s."""

    scaling: float
    factor: float
    reduced: MetricCandidate
    degenerate: bool = False

    def g(self, s):
        return self.factor * np.asarray(s, dtype=float)


def reduce_generalized_chordal(alpha: float, beta: float, p: float) -> Reduction:
    """Linear change of variables turning the generalized chordal metric into alpha = beta = 1.

    With beta = 0 the metric is |y - x| / alpha^(2/p); that translation
    invariant form is returned with ``degenerate=True``.
    """
    _validate("generalized_chordal", {"alpha": alpha, "beta": beta, "p": p})
    if beta == 0:
        d = MetricCandidate.from_source("abs(y - x)", label="absolute_value")
        return Reduction(alpha ** (-2 / p), 1.0, d, degenerate=True)
    scaling, s, reduced = _reduction(alpha, beta, p)
    return Reduction(scaling, s, reduced)


def _concave_entry(g_src: str) -> CatalogEntry:
    try:
        g = parse(g_src, ["x"])
    except ExprError as exc:
        raise CatalogError(f"bad generator: {exc}") from exc
    try:
        g0 = evaluate(g, {"x": 0.0})
    except ExprError as exc:
        raise CatalogError(f"generator not defined at 0: {exc}") from exc
    if abs(g0) > 1e-12:
        raise CatalogError(f"generator must satisfy g(0)=0, got {g0!r}")
    u = np.logspace(-3, 3, 241)
    gu = evaluate(g, {"x": u})
    if np.any(gu <= 0):
        raise CatalogError("generator must be positive on (0, inf)")
    notes = []
    # second divided differences on a log grid
    d1 = np.diff(gu) / np.diff(u)
    d2 = np.diff(d1)
    concave = bool(np.all(d2 <= 1e-9 * (1 + np.abs(d1[:-1]))))
    if not concave:
        notes.append("generator failed the numerical concavity scan")
    expr2 = substitute(g, {"x": Abs(Sub(Var("y"), Var("x")))})
    d = MetricCandidate(expr2, LambdaSet(), None, f"concave_ti(g={g_src})", pretty(expr2))
    return CatalogEntry("concave_ti", {"g": g_src}, d, None, LambdaSet(), EXPECTED["concave_ti"], tuple(notes))


def get(name: str, params: dict | None = None) -> CatalogEntry:
    """Build a catalog entry; ``params`` values may be numbers or numeric strings."""
    p = _validate(name, params)
    if name == "concave_ti":
        return _concave_entry(str(p["g"]))
    if name == "p_relative":
        lam = LambdaSet(("xy=0",))
        src = p_relative_source(p["p"])
        d = MetricCandidate.from_source(src, label=f"p_relative(p={_num(p['p'])})", lambda_set=lam)
        pp = p["p"]
        return CatalogEntry(name, p, d, lambda x, y: p_relative_d12_printed(x, y, pp), lam, EXPECTED[name])
    if name == "relative":
        lam = LambdaSet(("xy=0", "|x|=|y|"))
        src = "pw(abs(x) + abs(y) == 0, 0, abs(y - x)/max(abs(x), abs(y)))"
        d = MetricCandidate.from_source(src, label="relative", lambda_set=lam)
        return CatalogEntry(name, p, d, None, lam, EXPECTED[name],
                            ("pointwise limit of p_relative as p -> inf; no sufficiency theorem applies directly",))
    if name == "chordal":
        d = MetricCandidate.from_source("2*abs(y - x)/(sqrt(1 + x^2)*sqrt(1 + y^2))", label="chordal")
        return CatalogEntry(name, p, d, chordal_d12, LambdaSet(), EXPECTED[name])
    lam = LambdaSet(("xy=0",))
    src = gchordal_source(p["alpha"], p["beta"], p["p"])
    label = f"generalized_chordal(alpha={_num(p['alpha'])}, beta={_num(p['beta'])}, p={_num(p['p'])})"
    d = MetricCandidate.from_source(src, label=label, lambda_set=lam)
    closed = _gchordal_d12(p["alpha"], p["beta"], p["p"]) if p["beta"] > 0 else None
    return CatalogEntry(name, p, d, closed, lam, EXPECTED[name])


def closed_form_cross_partial(entry: CatalogEntry, point, form: str = "printed") -> float:
    """Published closed form of d_12 at ``point`` (``form="exact"`` for the p-relative correction)."""
    x, y = float(point[0]), float(point[1])
    if x == y:
        raise CatalogError("point lies on the diagonal")
    if entry.nonsmooth_set and entry.nonsmooth_set.distance(x, y) == 0:
        raise CatalogError("point lies on the non-smooth set")
    if entry.name == "p_relative" and form == "exact":
        return float(p_relative_d12(x, y, entry.params["p"]))
    if entry.closed_cross_partial is None:
        raise CatalogError(f"{entry.name} has no closed-form cross partial")
    return float(entry.closed_cross_partial(x, y))


def describe(name: str) -> dict:
    entry = get(name)
    return {
        "name": name,
        "params": {k: {"default": s.default, "constraint": s.constraint} for k, s in PARAMS[name].items()},
        "formula": entry.source,
        "nonsmooth_set": entry.nonsmooth_set.describe(),
        "expected_theorem": entry.expected_theorem,
    }
