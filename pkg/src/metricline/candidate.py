"""Metric candidates, their known non-smooth sets and odd-power reparametrizations."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .expr import Const, Expr, Pow, Var, evaluate, free_vars, parse, pretty, substitute

LAMBDA_KINDS = {
    "xy=0": "x*y = 0",
    "|x|=|y|": "|x| = |y|",
}


@dataclass(frozen=True)
class LambdaSet:
    """A finite union of the curves ``{xy = 0}`` and ``{|x| = |y|}``."""

    kinds: tuple[str, ...] = ()

    def __post_init__(self):
        for k in self.kinds:
            if k not in LAMBDA_KINDS:
                raise ValueError(f"unknown non-smooth set {k!r}; known: {sorted(LAMBDA_KINDS)}")

    def __bool__(self) -> bool:
        return bool(self.kinds)

    def distance(self, x, y) -> np.ndarray:
        """Coordinate distance to the set (inf when empty)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.full(np.broadcast(x, y).shape, np.inf)
        for k in self.kinds:
            if k == "xy=0":
                out = np.minimum(out, np.minimum(np.abs(x), np.abs(y)))
            else:
                out = np.minimum(out, np.abs(np.abs(x) - np.abs(y)))
        return out

    def in_band(self, x, y, rel: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return self.distance(x, y) < rel * (1 + np.abs(x) + np.abs(y))

    def probes(self, magnitudes: np.ndarray, offset_rel: float) -> tuple[np.ndarray, np.ndarray]:
        """Points straddling the set on both sides, off the diagonal."""
        xs, ys = [], []
        mags = np.asarray(magnitudes, dtype=float)
        for k in self.kinds:
            for m in mags:
                for s in (1.0, -1.0):
                    for t in (0.7, 1.9):
                        other = s * t * m
                        eps = offset_rel * (1 + abs(other))
                        if k == "xy=0":
                            for e in (eps, -eps):
                                xs += [e, other]
                                ys += [other, e]
                        else:
                            base = other
                            for e in (eps, -eps):
                                xs += [base, base]
                                ys += [-(base + e), -(base - e)]
                                xs += [base + e, base - e]
                                ys += [-base, -base]
        x = np.array(xs)
        y = np.array(ys)
        keep = np.abs(x - y) > 1e-3 * (1 + np.abs(x) + np.abs(y))
        return x[keep], y[keep]

    def describe(self) -> list[str]:
        return [LAMBDA_KINDS[k] for k in self.kinds]


@dataclass(frozen=True)
class Reparametrization:
    """h(x) = x^(2n+1), a strictly increasing bijection of the line with h(0) = 0."""

    n: int
    rationale: str = ""

    def __post_init__(self):
        if self.n < 0 or int(self.n) != self.n:
            raise ValueError("reparametrization order must be a non-negative integer")

    @property
    def exponent(self) -> int:
        return 2 * self.n + 1

    def h(self, x):
        x = np.asarray(x, dtype=float)
        out = x
        for _ in range(self.exponent - 1):
            out = out * x
        return out

    def h_inv(self, u):
        u = np.asarray(u, dtype=float)
        return np.sign(u) * np.abs(u) ** (1.0 / self.exponent)

    def expr(self, name: str) -> Expr:
        if self.n == 0:
            return Var(name)
        return Pow(Var(name), Const(float(self.exponent)))


@dataclass(frozen=True)
class MetricCandidate:
    """An evaluatable d(x, y) together with what is known about where it is smooth."""

    expr2: Expr
    lambda_set: LambdaSet = field(default_factory=LambdaSet)
    reparam: Reparametrization | None = None
    label: str = ""
    source: str = ""

    def __post_init__(self):
        extra = free_vars(self.expr2) - {"x", "y"}
        if extra:
            raise ValueError(f"candidate uses variables outside {{x, y}}: {sorted(extra)}")

    @classmethod
    def from_source(cls, source: str, label: str = "", lambda_set: LambdaSet | None = None):
        e = parse(source, ["x", "y"])
        return cls(e, lambda_set or LambdaSet(), None, label or source, source)

    @property
    def expr(self) -> Expr:
        """The expression actually evaluated, i.e. d(h(x), h(y)) when reparametrized."""
        if self.reparam is None or self.reparam.n == 0:
            return self.expr2
        return substitute(self.expr2, {"x": self.reparam.expr("x"), "y": self.reparam.expr("y")})

    @property
    def text(self) -> str:
        return self.source or pretty(self.expr2)

    def with_reparam(self, r: Reparametrization | None) -> "MetricCandidate":
        return replace(self, reparam=r)

    def raw(self) -> "MetricCandidate":
        return replace(self, reparam=None)

    def __call__(self, x, y, errors: str = "raise"):
        return evaluate(self.expr, {"x": x, "y": y}, errors=errors)


def as_candidate(d) -> MetricCandidate:
    if isinstance(d, MetricCandidate):
        return d
    if isinstance(d, Expr):
        return MetricCandidate(d, label=pretty(d))
    if isinstance(d, str):
        return MetricCandidate.from_source(d)
    entry_d = getattr(d, "d", None)
    if isinstance(entry_d, MetricCandidate):
        return entry_d
    raise TypeError(f"cannot use {type(d).__name__} as a metric candidate")
