"""Sufficient conditions for d to be a metric on the real line, checked on samples.

H1  d(x, y) > 0 off the diagonal and d(x, x) = 0
H2  d(x, y) = d(y, x)
H3  d_12 d >= 0 off the diagonal (H3': off the diagonal and off a non-smooth set)
H4A d(., a) non-increasing left of a and non-decreasing right of a
H4B lim_{l -> +inf} [d(b,l) - d(a,l)] <= lim_{l -> -inf} [d(b,l) - d(a,l)] for a < b
H4C grad d -> 0 at infinity
H4D lim_{l -> -inf} d(c,l) = lim_{l -> +inf} d(c,l), finite

H1 + H2 + H3 + any H4 gives a metric.  When d has kinks off the diagonal, the
odd power h(x) = x^(2n+1) can make d(h(x), h(y)) twice differentiable; then
H3' for the composite plus H4A, H4B or H4D for d itself suffices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .autodiff import NOT_CONVERGED, cross_partial_batch, gradient_batch, hd_eval
from .candidate import LambdaSet, MetricCandidate, Reparametrization, as_candidate
from .config import CheckConfig, grid2d
from .expr import DomainError, ExprError, evaluate, is_structurally_symmetric
from .search import find_counterexample
from .verdict import Verdict

PASSED = "passed"
FAILED = "failed"
INCONCLUSIVE = "inconclusive"
SKIPPED = "skipped"

CONVERGED = "converged"
DIVERGING = "diverging"
OSCILLATING = "oscillating"
UNCONVERGED = "unconverged"

H4_ORDER = ("H4A", "H4D", "H4B", "H4C")

# probe abscissae for the one-dimensional H4 checks
_PROBES = (-100.0, -10.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 10.0, 100.0)


@dataclass
class CheckResult:
    name: str
    status: str
    evidence: dict = field(default_factory=dict)
    witness: dict | None = None

    @property
    def passed(self) -> bool:
        return self.status == PASSED

    def to_dict(self) -> dict:
        return {"status": self.status, "evidence": self.evidence, "witness": self.witness}


@dataclass(frozen=True)
class LimitEstimate:
    value: float
    direction: str
    magnitudes_used: tuple[float, ...]
    cauchy_residual: float
    status: str

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    def to_dict(self) -> dict:
        return {"value": self.value, "direction": self.direction, "magnitudes_used": list(self.magnitudes_used),
                "cauchy_residual": self.cauchy_residual, "status": self.status}


# ---------------------------------------------------------------------------
# limits
# ---------------------------------------------------------------------------


def _limit_rows(F: np.ndarray, mags: np.ndarray, tol: float):
    """Limit estimates for each row of F (values at increasing magnitudes).

    Tails of the form L + c1/l + c2/l^2 + ... are extrapolated with two
    Richardson steps in 1/l; convergence is judged on the extrapolated sequence.
    """
    F = np.atleast_2d(F)
    R = F
    with np.errstate(all="ignore"):
        for order in (1, 2):
            ratio = (mags[order:] / mags[:-order]) ** (1.0 / order) if order == 1 else \
                (mags[2:] / mags[1:-1]) ** 2
            R = (ratio * R[:, 1:] - R[:, :-1]) / (ratio - 1)
    with np.errstate(invalid="ignore"):
        res = np.abs(R[:, -1] - R[:, -2])
        ref = np.maximum(1.0, np.abs(R[:, -1]))
    value = R[:, -1]
    status = np.full(len(F), UNCONVERGED, dtype=object)
    finite = np.all(np.isfinite(F), axis=1)
    ok = finite & (res <= tol * ref)
    status[ok] = CONVERGED
    dF = np.diff(F, axis=1)
    growing = finite & (np.abs(F[:, -1]) > 10 * np.maximum(1.0, np.abs(F[:, 0]))) & \
        (np.all(dF > 0, axis=1) | np.all(dF < 0, axis=1))
    status[~ok & (growing | ~finite)] = DIVERGING
    sign_changes = np.sum(np.diff(np.sign(dF), axis=1) != 0, axis=1) if dF.shape[1] > 1 else np.zeros(len(F))
    status[~ok & ~growing & finite & (sign_changes >= 2)] = OSCILLATING
    return value, res, status


def estimate_limit(f1, direction: str = "+", config: CheckConfig | None = None) -> LimitEstimate:
    """Limit of a one-variable function as its argument tends to +inf or -inf.

    ``f1`` maps an array of abscissae to values.  It is sampled at the
    configured magnitudes; the reported value is the Richardson-extrapolated
    tail, whose last step is the Cauchy residual.
    """
    config = config or CheckConfig()
    mags = np.asarray(config.limit_magnitudes, dtype=float)
    sign = 1.0 if direction == "+" else -1.0
    with np.errstate(all="ignore"):
        F = np.asarray(f1(sign * mags), dtype=float)
    value, res, status = _limit_rows(F[None, :], mags, config.tol_limit)
    return LimitEstimate(float(value[0]), direction, tuple(float(m) for m in mags), float(res[0]), str(status[0]))


def _limits_of(e, c, direction, config):
    """Vectorized lim d(c_i, l) for an array of c.

    The magnitudes are stretched by the largest |c| so that the tail is
    sampled well past every probe; all rows share the same abscissae.
    """
    mags = np.asarray(config.limit_magnitudes, dtype=float)
    sign = 1.0 if direction == "+" else -1.0
    c = np.asarray(c, dtype=float)[:, None]
    stretch = max(1.0, float(np.max(np.abs(c))))
    F = evaluate(e, {"x": c, "y": sign * stretch * mags[None, :]})
    return F, mags


# ---------------------------------------------------------------------------
# H1, H2
# ---------------------------------------------------------------------------


def _h1_points(config: CheckConfig):
    x, y = grid2d(config, None)
    return x, y


def check_H1(d, config: CheckConfig | None = None) -> CheckResult:
    config = config or CheckConfig()
    e = as_candidate(d).raw().expr
    a = np.concatenate([config.axis_values(), config.random_points(200, salt=1)[0]])
    dd = evaluate(e, {"x": a, "y": a})
    bad = np.abs(dd) > config.tol_pos
    if bad.any():
        i = int(np.argmax(np.abs(dd)))
        return CheckResult("H1", FAILED, {"diagonal_points": int(len(a))},
                           {"kind": "positivity", "points": [float(a[i]), float(a[i])], "value": float(dd[i]),
                            "magnitude": float(abs(dd[i]))})
    x, y = _h1_points(config)
    v = evaluate(e, {"x": x, "y": y})
    bad = v <= config.tol_pos
    ev = {"diagonal_points": int(len(a)), "off_diagonal_points": int(len(x)),
          "min_off_diagonal": float(np.min(v)) if len(v) else None}
    if bad.any():
        i = int(np.flatnonzero(bad)[np.argmin(v[bad])])
        return CheckResult("H1", FAILED, ev, {"kind": "positivity", "points": [float(x[i]), float(y[i])],
                                              "value": float(v[i]), "magnitude": float(config.tol_pos - v[i])})
    return CheckResult("H1", PASSED, ev)


def check_H2(d, config: CheckConfig | None = None) -> CheckResult:
    config = config or CheckConfig()
    e = as_candidate(d).raw().expr
    if is_structurally_symmetric(e):
        return CheckResult("H2", PASSED, {"method": "structural"})
    x, y = grid2d(config, None)
    a = evaluate(e, {"x": x, "y": y})
    b = evaluate(e, {"x": y, "y": x})
    gap = np.abs(a - b)
    bad = gap > config.tol_sym * (1 + np.abs(a))
    ev = {"method": "numerical", "points": int(len(x)), "max_gap": float(np.max(gap)) if len(gap) else 0.0}
    if bad.any():
        i = int(np.flatnonzero(bad)[np.argmax(gap[bad])])
        return CheckResult("H2", FAILED, ev, {"kind": "symmetry", "points": [float(x[i]), float(y[i])],
                                              "values": [float(a[i]), float(b[i])], "magnitude": float(gap[i])})
    return CheckResult("H2", PASSED, ev)


# ---------------------------------------------------------------------------
# H3
# ---------------------------------------------------------------------------


def _h3_grid(cand: MetricCandidate, config: CheckConfig):
    """Physical grid (off the bands), pulled back through h when reparametrized."""
    x, y = grid2d(config, cand.lambda_set)
    if cand.reparam is not None and cand.reparam.n > 0:
        return cand.reparam.h_inv(x), cand.reparam.h_inv(y), x, y
    return x, y, x, y


def check_H3(d, config: CheckConfig | None = None) -> CheckResult:
    """Sign of the mixed partial on the sampled grid (of d, or of d(h(x), h(y)))."""
    return _check_H3(d, config)[0]


def _check_H3(d, config: CheckConfig | None = None):
    config = config or CheckConfig()
    cand = as_candidate(d)
    e = cand.expr
    u, v, px, py = _h3_grid(cand, config)
    est, kink = cross_partial_batch(e, u, v, config)
    dval = np.abs(evaluate(e, {"x": u, "y": v}))
    thr = -config.tol_sign * (1 + dval)
    ok = est.ok
    skips = int(np.count_nonzero(~ok))
    neg = ok & (est.value < thr)
    ev = {
        "points_checked": int(len(u)),
        "min_cross_partial": float(np.min(est.value[ok])) if ok.any() else None,
        "exclusion_band": config.diag_band,
        "lambda_band": config.lambda_band if cand.lambda_set else None,
        "nonsmooth_set": cand.lambda_set.describe(),
        "kink_points": int(np.count_nonzero(kink)),
        "fd_points": int(np.count_nonzero(est.status != "exact-AD")),
        "skipped": skips,
        "reparam_n": cand.reparam.n if cand.reparam else None,
    }
    kink_pts = [(float(px[i]), float(py[i])) for i in np.flatnonzero(kink)[:200]]
    if neg.any():
        i = int(np.flatnonzero(neg)[np.argmin(est.value[neg])])
        return CheckResult("H3", FAILED, ev, {"kind": "cross_partial", "points": [float(px[i]), float(py[i])],
                                              "value": float(est.value[i])}), kink_pts
    if skips > config.skip_limit * len(u):
        ev["reason"] = "too many non-converged estimates"
        return CheckResult("H3", INCONCLUSIVE, ev), kink_pts
    # tighten the diagonal band while the estimates stay clean
    band, wit = _shrink_band(cand, config)
    ev["smallest_band"] = band
    if wit is not None:
        return CheckResult("H3", FAILED, ev, wit), kink_pts
    return CheckResult("H3", PASSED, ev), kink_pts


def _shrink_band(cand: MetricCandidate, config: CheckConfig):
    e = cand.expr
    a = config.axis_values()
    best = config.diag_band
    for factor in (1e-1, 1e-2, 1e-3):
        delta = config.diag_band * factor
        x = np.concatenate([a, a])
        y = np.concatenate([a + delta * (1 + 2 * np.abs(a)), a - delta * (1 + 2 * np.abs(a))])
        if cand.lambda_set:
            keep = ~cand.lambda_set.in_band(x, y, config.lambda_band)
            x, y = x[keep], y[keep]
        if cand.reparam is not None and cand.reparam.n > 0:
            u, v = cand.reparam.h_inv(x), cand.reparam.h_inv(y)
        else:
            u, v = x, y
        try:
            est, _ = cross_partial_batch(e, u, v, config)
            dval = np.abs(evaluate(e, {"x": u, "y": v}))
        except ExprError:
            break
        if not np.all(est.ok) or not np.all(np.isfinite(est.value)):
            break
        neg = est.value < -config.tol_sign * (1 + dval)
        if neg.any():
            i = int(np.flatnonzero(neg)[np.argmin(est.value[neg])])
            return best, {"kind": "cross_partial", "points": [float(x[i]), float(y[i])], "value": float(est.value[i])}
        best = delta
    return best, None


# ---------------------------------------------------------------------------
# reparametrization
# ---------------------------------------------------------------------------


def _on_set_probes(lam: LambdaSet, kink_points, mags=(0.1, 0.7, 1.9, 10.0, 100.0)):
    """Points on the non-smooth set with a transversal direction for each."""
    pts = []
    for m in mags:
        for s in (1.0, -1.0):
            if "xy=0" in lam.kinds:
                pts.append((0.0, s * m, (1.0, 0.0)))
                pts.append((s * m, 0.0, (0.0, 1.0)))
            if "|x|=|y|" in lam.kinds:
                pts.append((s * m, -s * m, (1.0, 0.0)))
                pts.append((s * m, -s * m, (0.0, 1.0)))
    for x, y in kink_points:
        pts.append((x, y, (1.0, 0.0)))
        pts.append((x, y, (0.0, 1.0)))
    out = [(x, y, n) for x, y, n in pts if abs(x - y) > 1e-3 * (1 + abs(x) + abs(y))]
    return out


def _derivs(e, u, v):
    """Stacked (d_1, d_2, d_11, d_22, d_12) and the kink mask."""
    h12 = hd_eval(e, u, v)
    h11 = hd_eval(e, u, v, seed_x=(1.0, 1.0), seed_y=(0.0, 0.0))
    h22 = hd_eval(e, u, v, seed_x=(0.0, 0.0), seed_y=(1.0, 1.0))
    Q = np.stack([h12.dx, h12.dy, h11.dxy, h22.dxy, h12.dxy])
    return Q, h12.kink | h11.kink | h22.kink


def _reparam_ok(cand: MetricCandidate, r: Reparametrization, probes) -> tuple[bool, str]:
    e = cand.with_reparam(r).expr
    px = np.array([p[0] for p in probes])
    py = np.array([p[1] for p in probes])
    nx = np.array([p[2][0] for p in probes])
    ny = np.array([p[2][1] for p in probes])
    u, v = r.h_inv(px), r.h_inv(py)
    try:
        Q0, kink = _derivs(e, u, v)
    except ExprError as exc:
        return False, f"evaluation failed: {exc}"
    if kink.any():
        return False, f"kink flagged at {int(np.count_nonzero(kink))} probes on the non-smooth set"
    if not np.all(np.isfinite(Q0)):
        return False, "non-finite derivatives on the non-smooth set"
    scale = np.maximum(1.0, np.maximum(np.abs(u), np.abs(v)))
    prev = None
    for eps_rel in (1e-2, 1e-4, 1e-6):
        eps = eps_rel * scale
        try:
            Qp, _ = _derivs(e, u + eps * nx, v + eps * ny)
            Qm, _ = _derivs(e, u - eps * nx, v - eps * ny)
        except ExprError as exc:
            return False, f"evaluation failed: {exc}"
        if not (np.all(np.isfinite(Qp)) and np.all(np.isfinite(Qm))):
            return False, "non-finite derivatives next to the non-smooth set"
        mag = np.maximum(np.abs(Qp), np.abs(Qm))
        if prev is not None and np.any(mag > 3 * (1 + prev)):
            return False, "second derivatives grow towards the non-smooth set"
        prev = mag
    if np.any(np.abs(Qp - Qm) > 1e-3 * (1 + mag)):
        return False, "derivatives jump across the non-smooth set"
    return True, "no kink, finite and continuous derivatives up to second order across the non-smooth set"


def choose_reparametrization(d, config: CheckConfig | None = None, kink_points=()) -> Reparametrization | None:
    """Smallest n <= max_n for which d(h(x), h(y)), h(x) = x^(2n+1), is C^2 across the non-smooth set."""
    config = config or CheckConfig()
    cand = as_candidate(d).raw()
    probes = _on_set_probes(cand.lambda_set, kink_points)
    if not probes:
        return Reparametrization(0, "no non-smooth set off the diagonal")
    reasons = []
    for n in range(config.max_n + 1):
        r = Reparametrization(n)
        ok, why = _reparam_ok(cand, r, probes)
        if ok:
            return Reparametrization(n, f"smallest n <= {config.max_n}: {why}")
        reasons.append(f"n={n}: {why}")
    return None


def reparam_diagnostics(d, config: CheckConfig | None = None, kink_points=()) -> list[str]:
    config = config or CheckConfig()
    cand = as_candidate(d).raw()
    probes = _on_set_probes(cand.lambda_set, kink_points)
    return [f"n={n}: {_reparam_ok(cand, Reparametrization(n), probes)[1]}" for n in range(config.max_n + 1)]


# ---------------------------------------------------------------------------
# H4 variants
# ---------------------------------------------------------------------------


def _profile_abscissae(a: float) -> np.ndarray:
    offs = 10.0 ** np.arange(-3, 6.01, 0.125)
    return np.unique(np.concatenate([a - offs[::-1], a + offs]))


def check_H4A(d, config: CheckConfig | None = None) -> CheckResult:
    """t -> d(t, a) falls up to a and rises after it, for each probe a."""
    config = config or CheckConfig()
    e = as_candidate(d).raw().expr
    worst = None
    for a in _PROBES:
        t = _profile_abscissae(a)
        v = evaluate(e, {"x": t, "y": a})
        left, right = t < a, t > a
        tol = config.tol_sign * (1 + np.abs(v))
        for mask, sign in ((left, -1.0), (right, 1.0)):
            tt, vv, tl = t[mask], v[mask], tol[mask]
            # left of a values must not increase; right of a they must not decrease
            step = sign * np.diff(vv)
            bad = step < -tl[1:]
            if bad.any():
                i = int(np.argmin(step))
                wit = {"kind": "H4A", "a": a, "points": [float(tt[i]), float(tt[i + 1])],
                       "values": [float(vv[i]), float(vv[i + 1])], "magnitude": float(-step[i])}
                if worst is None or wit["magnitude"] > worst["magnitude"]:
                    worst = wit
    ev = {"probes": list(_PROBES)}
    if worst is not None:
        return CheckResult("H4A", FAILED, ev, worst)
    return CheckResult("H4A", PASSED, ev)


def check_H4D(d, config: CheckConfig | None = None) -> CheckResult:
    config = config or CheckConfig()
    e = as_candidate(d).raw().expr
    c = np.array(_PROBES)
    Fp, mags = _limits_of(e, c, "+", config)
    Fm, _ = _limits_of(e, c, "-", config)
    Lp, rp, sp = _limit_rows(Fp, mags, config.tol_limit)
    Lm, rm, sm = _limit_rows(Fm, mags, config.tol_limit)
    table = [{"c": float(c[i]), "plus": float(Lp[i]), "minus": float(Lm[i]), "status_plus": sp[i],
              "status_minus": sm[i]} for i in range(len(c))]
    ev = {"limits": table}
    unconv = [i for i in range(len(c)) if sp[i] != CONVERGED or sm[i] != CONVERGED]
    if unconv:
        i = unconv[0]
        return CheckResult("H4D", FAILED, ev, {"kind": "H4D", "c": float(c[i]),
                                               "reason": f"limits {sp[i]}/{sm[i]}"})
    gap = np.abs(Lp - Lm)
    bad = gap > config.tol_limit * np.maximum(1.0, np.maximum(np.abs(Lp), np.abs(Lm)))
    if bad.any():
        i = int(np.argmax(np.where(bad, gap, -1)))
        return CheckResult("H4D", FAILED, ev, {"kind": "H4D", "c": float(c[i]), "plus": float(Lp[i]),
                                               "minus": float(Lm[i]), "magnitude": float(gap[i])})
    return CheckResult("H4D", PASSED, ev)


def check_H4B(d, config: CheckConfig | None = None) -> CheckResult:
    config = config or CheckConfig()
    e = as_candidate(d).raw().expr
    c = np.array(_PROBES)
    Fp, mags = _limits_of(e, c, "+", config)
    Fm, _ = _limits_of(e, c, "-", config)
    pairs = [(i, j) for i, j in itertools.combinations(range(len(c)), 2)]
    I = np.array([p[0] for p in pairs])
    J = np.array([p[1] for p in pairs])
    # c is sorted, so c[I] < c[J]: a = c[I], b = c[J]
    Lp, rp, sp = _limit_rows(Fp[J] - Fp[I], mags, config.tol_limit)
    Lm, rm, sm = _limit_rows(Fm[J] - Fm[I], mags, config.tol_limit)
    ev = {"pairs": int(len(pairs))}
    conv = (sp == CONVERGED) & (sm == CONVERGED)
    if not conv.all():
        k = int(np.flatnonzero(~conv)[0])
        ev["unconverged_pairs"] = int(np.count_nonzero(~conv))
        return CheckResult("H4B", FAILED, ev, {"kind": "H4B", "a": float(c[I[k]]), "b": float(c[J[k]]),
                                               "reason": f"limits {sp[k]}/{sm[k]}"})
    excess = Lp - Lm
    bad = excess > config.tol_limit * np.maximum(1.0, np.maximum(np.abs(Lp), np.abs(Lm)))
    ev["max_excess"] = float(np.max(excess))
    if bad.any():
        k = int(np.argmax(np.where(bad, excess, -np.inf)))
        return CheckResult("H4B", FAILED, ev, {"kind": "H4B", "a": float(c[I[k]]), "b": float(c[J[k]]),
                                               "plus": float(Lp[k]), "minus": float(Lm[k]),
                                               "magnitude": float(excess[k])})
    return CheckResult("H4B", PASSED, ev)


def _ring(R: float, axis: np.ndarray, n: int = 64):
    """Points with max(|x|, |y|) in {R, 1.5R, 2R}: uniform along each side plus the log axis."""
    xs, ys = [], []
    t = np.linspace(-1, 1, n)
    for r in (R, 1.5 * R, 2 * R):
        u = np.unique(np.concatenate([r * t, axis[np.abs(axis) < r]]))
        n = len(u)
        for side in range(4):
            if side == 0:
                xs.append(np.full(n, r)), ys.append(u)
            elif side == 1:
                xs.append(np.full(n, -r)), ys.append(u)
            elif side == 2:
                xs.append(u), ys.append(np.full(n, r))
            else:
                xs.append(u), ys.append(np.full(n, -r))
    return np.concatenate(xs), np.concatenate(ys)


def check_H4C(d, config: CheckConfig | None = None) -> CheckResult:
    config = config or CheckConfig()
    cand = as_candidate(d).raw()
    e = cand.expr
    maxima = []
    worst = None
    for R in config.grad_radii:
        x, y = _ring(R, config.axis_values())
        keep = np.abs(x - y) >= config.diag_band * (1 + np.abs(x) + np.abs(y))
        if cand.lambda_set:
            keep &= ~cand.lambda_set.in_band(x, y, config.lambda_band)
        x, y = x[keep], y[keep]
        g1, g2 = gradient_batch(e, x, y, config)
        if not (g1.ok.all() and g2.ok.all()):
            return CheckResult("H4C", INCONCLUSIVE, {"radii": list(config.grad_radii)},
                               {"kind": "H4C", "reason": "gradient estimates did not converge", "radius": R})
        norm = np.hypot(g1.value, g2.value)
        i = int(np.argmax(norm))
        maxima.append(float(norm[i]))
        worst = (float(x[i]), float(y[i]))
    ev = {"radii": list(config.grad_radii), "max_norm": maxima}
    decreasing = all(b < a for a, b in zip(maxima, maxima[1:]))
    if decreasing and maxima[-1] <= config.tol_grad:
        return CheckResult("H4C", PASSED, ev)
    return CheckResult("H4C", FAILED, ev, {"kind": "H4C", "points": list(worst), "norm": maxima[-1],
                                           "reason": "gradient does not vanish at infinity"})


_H4 = {"H4A": check_H4A, "H4B": check_H4B, "H4C": check_H4C, "H4D": check_H4D}


# ---------------------------------------------------------------------------
# G-functions
# ---------------------------------------------------------------------------


def _partial_along(e, axis, fixed, fixed_is_x):
    def f(s):
        if fixed_is_x:
            g1, g2 = gradient_batch(e, [fixed], [s])
        else:
            g1, g2 = gradient_batch(e, [s], [fixed])
        g = g1 if axis == 1 else g2
        return float(g.value[0])

    return f


def _breaks(cand: MetricCandidate, lo: float, hi: float, other: float):
    pts = []
    if "xy=0" in cand.lambda_set.kinds:
        pts.append(0.0)
    if "|x|=|y|" in cand.lambda_set.kinds:
        pts += [other, -other]
    return sorted(p for p in pts if lo < p < hi)


def _quad(f, a, b, points):
    val, err = integrate.quad(f, a, b, points=points or None, epsabs=1e-8, epsrel=1e-10, limit=200)
    return val


def g_horizontal(d, y: float, z: float, lam: float) -> float:
    """G_H(lam) = integral over s in [y, z] of d_1 d(s, lam)."""
    if not y < z:
        raise ValueError("need y < z")
    if y < lam < z:
        raise ValueError("segment crosses the diagonal")
    cand = as_candidate(d).raw()
    return _quad(_partial_along(cand.expr, 1, lam, False), y, z, _breaks(cand, y, z, lam))


def g_vertical(d, x: float, y: float, lam: float) -> float:
    """G_V(lam) = integral over s in [x, y] of d_2 d(lam, s)."""
    if not x < y:
        raise ValueError("need x < y")
    if x < lam < y:
        raise ValueError("segment crosses the diagonal")
    cand = as_candidate(d).raw()
    return _quad(_partial_along(cand.expr, 2, lam, True), x, y, _breaks(cand, x, y, lam))


def check_G_monotonicity(d, triple, lambdas, tol: float = 1e-7) -> dict:
    """Sampled G_H on (-inf, y] and [z, inf) should be non-decreasing; lists inversions."""
    x, y, z = (float(t) for t in triple)
    if not x < y < z:
        raise ValueError("need x < y < z")
    lams = sorted(float(l) for l in lambdas)
    if any(y < l < z for l in lams):
        raise ValueError("lambdas must lie in (-inf, y] or [z, inf)")
    inversions = []
    values = {}
    for group in ([l for l in lams if l <= y], [l for l in lams if l >= z]):
        g = [g_horizontal(d, y, z, l) for l in group]
        for l, v in zip(group, g):
            values[l] = v
        for (l1, g1), (l2, g2) in zip(zip(group, g), zip(group[1:], g[1:])):
            if g2 < g1 - tol * (1 + abs(g1)):
                inversions.append({"lambda": [l1, l2], "G": [g1, g2]})
    return {"ok": not inversions, "inversions": inversions, "values": values}


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------


def _domain_probe(cand: MetricCandidate, config: CheckConfig):
    x, y = grid2d(config, None)
    a = config.axis_values()
    evaluate(cand.raw().expr, {"x": np.concatenate([x, a]), "y": np.concatenate([y, a])})


def certify(d, config: CheckConfig | None = None, search: bool = True) -> Verdict:
    """Run H1, H2, H3 (possibly reparametrized) and the H4 variants; fall back to search."""
    config = config or CheckConfig()
    cand = as_candidate(d).raw()
    checks: dict[str, dict] = {}
    try:
        _domain_probe(cand, config)
    except DomainError as exc:
        return Verdict.inconclusive([f"domain error: {exc}"], {"domain_error": {"message": str(exc),
                                                                                 "point": exc.point}})
    h1 = check_H1(cand, config)
    checks["H1"] = h1.to_dict()
    if not h1.passed:
        return Verdict.refuted(h1.witness, {"checks": checks})
    h2 = check_H2(cand, config)
    checks["H2"] = h2.to_dict()
    if not h2.passed:
        return Verdict.refuted(h2.witness, {"checks": checks})

    diagnostics = []
    h3, kinks = _check_H3(cand, config)
    checks["H3"] = h3.to_dict()
    reparam = None
    combined = bool(cand.lambda_set) or bool(kinks)
    if h3.passed and combined:
        reparam = choose_reparametrization(cand, config, kinks)
        if reparam is None:
            h3 = CheckResult("H3", INCONCLUSIVE, h3.evidence, None)
            h3.evidence["reason"] = "no reparametrization removes the kinks off the diagonal"
            diagnostics += reparam_diagnostics(cand, config, kinks)
            checks["H3"] = h3.to_dict()
        elif reparam.n > 0:
            h3 = check_H3(cand.with_reparam(reparam), config)
            checks["H3"] = h3.to_dict()
        if reparam is not None:
            checks["H3"]["evidence"]["reparametrization"] = {"n": reparam.n, "rationale": reparam.rationale}
    elif not h3.passed and h3.status == FAILED:
        diagnostics.append(f"H3 fails at {h3.witness['points']} (d_12 = {h3.witness['value']:.6g})")
    if h3.status == INCONCLUSIVE and "reason" in h3.evidence:
        diagnostics.append(f"H3 inconclusive: {h3.evidence['reason']}")

    if h3.passed:
        for name in H4_ORDER:
            if name == "H4C" and combined:
                checks[name] = CheckResult(name, SKIPPED, {"reason": "not combinable with H3'"}).to_dict()
                continue
            res = _H4[name](cand, config)
            checks[name] = res.to_dict()
            if res.passed:
                theorem = "T-combined" if combined else f"T-{name}"
                evidence = {"checks": checks, "h4": name}
                if combined:
                    evidence["reparametrization"] = {"n": reparam.n, "rationale": reparam.rationale}
                return Verdict.certified(theorem, evidence)
        diagnostics.append("no H4 variant holds on the probes")

    evidence = {"checks": checks}
    if search:
        v = find_counterexample(cand, config)
        if v is not None:
            return Verdict.refuted(v.to_dict(), evidence, diagnostics)
        diagnostics.append("counterexample search found no violation")
    return Verdict.inconclusive(diagnostics, evidence)
