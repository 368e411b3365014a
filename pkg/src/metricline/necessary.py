"""Necessary conditions any metric (differentiable on each side of the diagonal) satisfies.

* |d2- d(x,y)| <= |d2- d(y,y)| and |d2+ d(x,y)| <= |d2+ d(y,y)|
* d1+ d(x,x) = d2+ d(x,x) > 0 (likewise for the minus direction)
* d1-(d1+ d)(x,x) <= d1-(d1+ d)(x,y)

where d1-(d1+ d)(x,y) = -lim (d(x+h,y) - 2 d(x,y) + d(x-h,y)) / h^2.
Estimates are compared in the extended reals: a one-sided slope that blows up
to +inf bounds everything.  Points where nothing converges are skipped and
counted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import one_sided_partial_batch, second_difference_batch
from .candidate import as_candidate
from .config import CheckConfig, grid2d
from .expr import evaluate

REFUTED = "refuted"
CONSISTENT = "consistent"


@dataclass
class NecessaryReport:
    first_order: list = field(default_factory=list)
    diagonal_positivity: list = field(default_factory=list)
    second_order: list = field(default_factory=list)
    skips: dict = field(default_factory=dict)
    points: dict = field(default_factory=dict)

    @property
    def verdict_contribution(self) -> str:
        if self.first_order or self.diagonal_positivity or self.second_order:
            return REFUTED
        return CONSISTENT

    def strongest(self) -> dict | None:
        for group in (self.first_order, self.diagonal_positivity, self.second_order):
            if group:
                return group[0]
        return None

    def to_dict(self) -> dict:
        return {
            "verdict_contribution": self.verdict_contribution,
            "first_order": self.first_order,
            "diagonal_positivity": self.diagonal_positivity,
            "second_order": self.second_order,
            "skips": dict(self.skips),
            "points": dict(self.points),
        }


def default_points(config: CheckConfig, d=None):
    """Tensor grid without the random cloud: the battery is per-point expensive."""
    x, y = grid2d(config, None, include_random=False)
    return x, y


def _blend(tol, ref):
    return tol * (1 + np.where(np.isfinite(ref), np.abs(ref), 0.0))


def check_first_order_bound(d, grid=None, config: CheckConfig | None = None, skips: dict | None = None):
    config = config or CheckConfig()
    e = as_candidate(d).expr
    x, y = grid if grid is not None else default_points(config)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = []
    skipped = 0
    for sign in ("+", "-"):
        off = one_sided_partial_batch(e, x, y, 2, sign, config).extended()
        diag = one_sided_partial_batch(e, y, y, 2, sign, config).extended()
        lhs, rhs = np.abs(off), np.abs(diag)
        known = ~np.isnan(lhs) & ~np.isnan(rhs)
        skipped += int(np.count_nonzero(~known))
        with np.errstate(invalid="ignore"):
            excess = np.where(known & np.isfinite(lhs), lhs - rhs, -np.inf)
            bad = known & (excess > _blend(config.tol_nec, rhs))
        for i in np.flatnonzero(bad):
            out.append({"x": float(x[i]), "y": float(y[i]), "direction": sign, "value": float(lhs[i]),
                        "bound": float(rhs[i]), "excess": float(excess[i])})
    out.sort(key=lambda w: (-w["excess"], w["x"], w["y"], w["direction"]))
    if skips is not None:
        skips["first_order"] = skipped
    return out


def check_diagonal_positivity(d, xs=None, config: CheckConfig | None = None, skips: dict | None = None):
    config = config or CheckConfig()
    e = as_candidate(d).expr
    xs = np.asarray(config.axis_values() if xs is None else xs, dtype=float)
    out = []
    skipped = 0
    est = {}
    for axis in (1, 2):
        for sign in ("+", "-"):
            est[axis, sign] = one_sided_partial_batch(e, xs, xs, axis, sign, config).extended()
    tol = config.tol_nec
    scale = np.maximum(1.0, np.abs(xs))
    d0 = evaluate(e, {"x": xs, "y": xs})
    for sign in ("+", "-"):
        v2 = est[2, sign]
        v1 = est[1, sign]
        # "positive" is judged against the secant slope over one scale unit
        step = scale if sign == "+" else -scale
        secant = np.abs(evaluate(e, {"x": xs, "y": xs + step}) - d0) / scale
        thr = tol * np.minimum(1.0, secant)
        known = ~np.isnan(v2)
        skipped += int(np.count_nonzero(~known))
        for i in np.flatnonzero(known & (v2 <= thr)):
            out.append({"x": float(xs[i]), "kind": "non-positive", "direction": sign,
                        "value": float(v2[i]), "excess": float(thr[i] - v2[i])})
        both = known & ~np.isnan(v1) & np.isfinite(v1) & np.isfinite(v2)
        with np.errstate(invalid="ignore"):
            gap = np.abs(v1 - v2)
        for i in np.flatnonzero(both & (gap > _blend(tol, v2))):
            out.append({"x": float(xs[i]), "kind": "asymmetric", "direction": sign,
                        "value": float(v1[i]), "bound": float(v2[i]), "excess": float(gap[i])})
    out.sort(key=lambda w: (-w["excess"], w["x"], w["kind"], w["direction"]))
    if skips is not None:
        skips["diagonal_positivity"] = skipped
    return out


def check_second_order(d, grid=None, config: CheckConfig | None = None, skips: dict | None = None):
    config = config or CheckConfig()
    e = as_candidate(d).expr
    x, y = grid if grid is not None else default_points(config)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ux, inv = np.unique(x, return_inverse=True)
    lhs = -second_difference_batch(e, ux, ux, config).extended()[inv]
    rhs = -second_difference_batch(e, x, y, config).extended()
    known = ~np.isnan(lhs) & ~np.isnan(rhs)
    with np.errstate(invalid="ignore"):
        excess = np.where(known & np.isfinite(lhs) & np.isfinite(rhs), lhs - rhs, -np.inf)
        excess = np.where(known & (lhs == np.inf) & (rhs < np.inf), np.inf, excess)
        excess = np.where(known & (rhs == -np.inf) & (lhs > -np.inf), np.inf, excess)
    bad = known & (excess > _blend(config.tol_nec2, rhs))
    out = [{"x": float(x[i]), "y": float(y[i]), "lhs": float(lhs[i]), "rhs": float(rhs[i]),
            "excess": float(excess[i])} for i in np.flatnonzero(bad)]
    out.sort(key=lambda w: (-w["excess"], w["x"], w["y"]))
    if skips is not None:
        skips["second_order"] = int(np.count_nonzero(~known))
    return out


def run_battery(d, config: CheckConfig | None = None, max_report: int = 20) -> NecessaryReport:
    config = config or CheckConfig()
    pts = default_points(config)
    rep = NecessaryReport()
    rep.first_order = check_first_order_bound(d, pts, config, rep.skips)[:max_report]
    rep.diagonal_positivity = check_diagonal_positivity(d, None, config, rep.skips)[:max_report]
    rep.second_order = check_second_order(d, pts, config, rep.skips)[:max_report]
    rep.points = {"off_diagonal": int(len(pts[0])), "diagonal": int(len(config.axis_values()))}
    return rep
