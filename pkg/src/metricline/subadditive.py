"""Translation invariant candidates d(x, y) = f(y - x).

Such a d is a metric exactly when f is even, subadditive, f(0) = 0 and
f > 0 away from 0.  A half-line generator g that is non-decreasing and
subadditive always qualifies through its even extension f(x) = g(|x|).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .config import CheckConfig
from .expr import Abs, Expr, ExprError, Piecewise, Var, children, evaluate, free_vars, parse, pretty, substitute
from .verdict import Verdict

EXA1 = "pw(abs(x) < 1, abs(x), abs(x) < 5/3, 2 - abs(x), 1/3)"
EXA2 = "pw(abs(x) < 1, abs(x), abs(x) < 4/3, 2 - abs(x), 2/3)"
FIXTURES = {"exa1": EXA1, "exa2": EXA2}

WHOLE = "whole-line"
HALF = "half-line"

THEOREM_TI = "T-TI-subadditive"
COROLLARY_TI = "T-TI-monotone"

_MAX_REPORTED = 50


class GeneratorError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorFunction:
    """f on the whole line or g on [0, inf), written in the variable x."""

    expr: Expr
    domain: str = WHOLE
    source: str = ""

    def __post_init__(self):
        if self.domain not in (WHOLE, HALF):
            raise GeneratorError(f"unknown domain {self.domain!r}")
        if not free_vars(self.expr) <= {"x"}:
            raise GeneratorError("a generator is a function of x only")
        try:
            f0 = evaluate(self.expr, {"x": 0.0})
        except ExprError as exc:
            raise GeneratorError(f"generator undefined at 0: {exc}") from exc
        if f0 != 0:
            raise GeneratorError(f"generator must vanish at 0, got {f0!r}")

    @classmethod
    def from_source(cls, source: str, domain: str = WHOLE) -> "GeneratorFunction":
        source = FIXTURES.get(source, source)
        return cls(parse(source, ["x"]), domain, source)

    def __call__(self, x, errors: str = "raise"):
        return evaluate(self.expr, {"x": x}, errors=errors)

    @property
    def text(self) -> str:
        return self.source or pretty(self.expr)

    def metric_source(self) -> str:
        """DSL text of the induced d(x, y) = f(y - x) (or g(|y - x|) on a half-line)."""
        arg = "abs(y - x)" if self.domain == HALF else "y - x"
        e = substitute(self.expr, {"x": parse(arg)})
        return pretty(e)


@dataclass(frozen=True)
class PairViolation:
    x: float
    y: float
    lhs: float
    rhs: float

    @property
    def gap(self) -> float:
        return self.lhs - self.rhs

    def triple(self) -> tuple[float, float, float]:
        """Points {0, -y, x} on which d(u, v) = f(v - u) breaks a triangle inequality.

        d(-y, x) = f(x + y) exceeds d(0, -y) + d(0, x) = f(-y) + f(x), which is
        f(y) + f(x) for even f.
        """
        return tuple(sorted({0.0, -self.y + 0.0, self.x}))

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "lhs": self.lhs, "rhs": self.rhs, "gap": self.gap}


def even_extension(g: GeneratorFunction) -> GeneratorFunction:
    """f(x) = g(|x|)."""
    e = substitute(g.expr, {"x": Abs(Var("x"))})
    return GeneratorFunction(e, WHOLE, pretty(e))


def breakpoints(e: Expr) -> list[float]:
    """Constants compared against an x-dependent side in piecewise conditions, with both signs."""
    out: set[float] = set()

    def walk(node):
        if isinstance(node, Piecewise):
            for cond, _ in node.branches:
                for a, b in ((cond.left, cond.right), (cond.right, cond.left)):
                    if not free_vars(a) and free_vars(b):
                        try:
                            c = float(evaluate(a, {}))
                        except ExprError:
                            continue
                        out.update((c, -c))
        for ch in children(node):
            walk(ch)

    walk(e)
    return sorted(v for v in out if np.isfinite(v))


@dataclass
class Grid1D:
    """Uniform lattice k*step, |k| <= n, plus extra points (breakpoints and their sums)."""

    step: float
    n: int
    extras: np.ndarray

    @classmethod
    def default(cls, config: CheckConfig | None = None, f: GeneratorFunction | None = None):
        config = config or CheckConfig()
        n = int(round(config.subadditive_range / config.subadditive_step))
        extras = np.zeros(0)
        if f is not None:
            b = np.array(breakpoints(f.expr))
            if b.size:
                sums = (b[:, None] + b[None, :]).ravel()
                extras = np.unique(np.concatenate([b, sums, -sums]))
                extras = extras[np.abs(extras) <= config.subadditive_range]
        return cls(config.subadditive_step, n, extras)

    @classmethod
    def from_points(cls, points) -> "Grid1D":
        return cls(1.0, 0, np.unique(np.asarray(points, dtype=float)))

    @property
    def lattice(self) -> np.ndarray:
        k = np.arange(-self.n, self.n + 1)
        inv = 1 / self.step
        # k/300 is correctly rounded, k*(1/300) is not
        if abs(inv - round(inv)) < 1e-9:
            return k / round(inv)
        return k * self.step

    @property
    def points(self) -> np.ndarray:
        extra = self.extras[~np.isin(self.extras, self.lattice)]
        return np.unique(np.concatenate([self.lattice, extra]))

    @property
    def limit(self) -> float:
        return max(self.n * self.step, float(np.max(np.abs(self.extras))) if self.extras.size else 0.0)


def _simplicity(v: float) -> int:
    return Fraction(v).limit_denominator(10**6).denominator


def _sort_key(v: PairViolation):
    return (-round(v.gap, 12), max(_simplicity(v.x), _simplicity(v.y)), abs(v.x) + abs(v.y), -v.x, -v.y)


def _violation_tol(rhs):
    return 1e-12 * (1 + np.abs(rhs))


class _Collector:
    """Counts violations and keeps the best few under the reporting order."""

    def __init__(self, keep: int):
        self.keep = keep
        self.found: list[PairViolation] = []
        self.count = 0

    def add(self, x, y, lhs, rhs, den):
        gap = lhs - rhs
        bad = np.flatnonzero(gap > _violation_tol(rhs))
        if not bad.size:
            return
        self.count += bad.size
        dd = den(bad)
        order = np.lexsort((-y[bad], -x[bad], np.abs(x[bad]) + np.abs(y[bad]), dd, -np.round(gap[bad], 12)))
        for i in bad[order[: self.keep]]:
            self.found.append(PairViolation(float(x[i]), float(y[i]), float(lhs[i]), float(rhs[i])))
        if len(self.found) > 4 * self.keep:
            self.found.sort(key=_sort_key)
            del self.found[self.keep:]

    def result(self, limit) -> list[PairViolation]:
        self.found.sort(key=_sort_key)
        return self.found[:limit] if limit else self.found


def _lattice_den(grid: "Grid1D"):
    inv = 1 / grid.step
    N = int(round(inv)) if abs(inv - round(inv)) < 1e-9 else None

    def den(k):
        if N is None:
            return np.array([_simplicity(v) for v in k * grid.step])
        return N // np.gcd(np.abs(k), N)

    return den


def check_subadditive(f: GeneratorFunction, grid: Grid1D | None = None, half_line: bool = False,
                      limit: int | None = _MAX_REPORTED, stats: dict | None = None) -> list[PairViolation]:
    """All ordered pairs of grid points whose sum stays in range, deepest violations first.

    On the lattice the sum of k*step and j*step is evaluated as (k+j)*step.
    Extra points are paired with every lattice and extra point directly.
    """
    grid = grid or Grid1D.default(f=f)
    keep = max(limit or 0, _MAX_REPORTED)
    col = _Collector(keep)
    n = grid.n
    lat = grid.lattice
    lat_den = _lattice_den(grid)
    lo = n if half_line else 0
    F = np.full(len(lat), np.nan)
    F[lo:] = f(lat[lo:])
    # k + j must stay inside the lattice
    J = np.arange(lo, 2 * n + 1)
    chunk = max(1, 2_000_000 // (2 * n + 1))
    for start in range(lo, 2 * n + 1, chunk):
        rows = np.arange(start, min(start + chunk, 2 * n + 1))
        S = rows[:, None] + J[None, :] - n
        r, c = np.nonzero((S >= lo) & (S <= 2 * n))
        ii, jj = rows[r], J[c]
        col.add(lat[ii], lat[jj], F[ii + jj - n], F[ii] + F[jj],
                lambda sel, ii=ii, jj=jj: np.maximum(lat_den(ii[sel] - n), lat_den(jj[sel] - n)))
    extras = grid.extras[~np.isin(grid.extras, lat)]
    if half_line:
        extras = extras[extras >= 0]
    if extras.size:
        pts = np.concatenate([lat[lo:], extras])
        X = np.repeat(extras, len(pts))
        Y = np.tile(pts, len(extras))
        s = X + Y
        ok = np.abs(s) <= grid.limit + 1e-12
        if half_line:
            ok &= s >= 0
        X, Y, s = X[ok], Y[ok], s[ok]
        lhs = f(s)
        rhs = f(X) + f(Y)

        def den(sel, X=X, Y=Y):
            return np.array([max(_simplicity(a), _simplicity(b)) for a, b in zip(X[sel], Y[sel])])

        col.add(X, Y, lhs, rhs, den)
        col.add(Y, X, lhs, rhs, lambda sel: den(sel))
    if stats is not None:
        stats["violations_total"] = col.count
    return col.result(limit)


def check_nondecreasing(g: GeneratorFunction, grid: Grid1D | None = None):
    """None when g is non-decreasing on the non-negative grid, else the largest drop (a, b) with a < b."""
    grid = grid or Grid1D.default(f=g)
    pts = grid.points
    pts = pts[pts >= 0]
    vals = g(pts)
    run_max = np.maximum.accumulate(vals)
    arg = np.zeros(len(vals), dtype=int)
    best = 0
    for i in range(len(vals)):
        if vals[i] > vals[best]:
            best = i
        arg[i] = best
    drop = run_max - vals
    bad = drop > _violation_tol(vals)
    if not bad.any():
        return None
    top = np.max(np.round(drop[bad], 12))
    i = int(np.flatnonzero(bad & (np.round(drop, 12) >= top))[0])
    return float(pts[arg[i]]), float(pts[i])


def check_positive(f: GeneratorFunction, grid: Grid1D, tol: float = 1e-12):
    pts = grid.points
    pts = pts[pts != 0]
    vals = f(pts)
    bad = vals <= tol
    if bad.any():
        i = int(np.flatnonzero(bad)[np.argmin(vals[bad])])
        return float(pts[i]), float(vals[i])
    return None


def check_even(f: GeneratorFunction, grid: Grid1D, tol: float = 1e-12):
    pts = grid.points
    pts = pts[pts > 0]
    a, b = f(pts), f(-pts)
    bad = np.abs(a - b) > tol * (1 + np.abs(a))
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        return float(pts[i]), float(a[i]), float(b[i])
    return None


def classify_translation_invariant(gen: GeneratorFunction, config: CheckConfig | None = None) -> Verdict:
    """Certify or refute d(x, y) = f(y - x) (or g(|y - x|) for half-line generators)."""
    config = config or CheckConfig()
    grid = Grid1D.default(config, gen)
    try:
        return _classify(gen, grid)
    except ExprError as exc:
        return Verdict.inconclusive([f"generator could not be evaluated on the grid: {exc}"])


def _classify(gen: GeneratorFunction, grid: Grid1D) -> Verdict:
    evidence = {"grid_step": grid.step, "grid_range": grid.n * grid.step, "extra_points": int(grid.extras.size)}
    if gen.domain == WHOLE:
        odd = check_even(gen, grid)
        if odd is not None:
            t, a, b = odd
            return Verdict.refuted({"kind": "symmetry", "points": [0.0, t], "magnitude": abs(a - b),
                                    "values": [a, b]}, evidence)
    half = gen
    f = gen if gen.domain == WHOLE else even_extension(gen)
    pos = check_positive(f, grid)
    if pos is not None:
        t, v = pos
        return Verdict.refuted({"kind": "positivity", "points": [0.0, t], "magnitude": -v}, evidence)
    drop = check_nondecreasing(half, grid)
    evidence["nondecreasing"] = drop is None
    if drop is not None:
        evidence["monotonicity_witness"] = list(drop)
    else:
        half_stats: dict = {}
        hv = check_subadditive(half, grid, half_line=True, stats=half_stats)
        evidence["half_line_violations"] = half_stats["violations_total"]
        if not hv:
            return Verdict.certified(COROLLARY_TI, evidence)
    stats: dict = {}
    viol = check_subadditive(f, grid, stats=stats)
    evidence["violations_total"] = stats["violations_total"]
    if viol:
        v = viol[0]
        evidence["pair_violations"] = [p.to_dict() for p in viol[:10]]
        return Verdict.refuted(
            {"kind": "triangle", "points": list(v.triple()), "magnitude": v.gap, "pair": v.to_dict()}, evidence)
    return Verdict.certified(THEOREM_TI, evidence)
