"""Triangle-inequality margins, the exhaustive oracle and the counterexample search.

For x < y < z the three margins are::

    m1 = d(x,y) + d(y,z) - d(x,z)
    m2 = d(x,z) + d(y,z) - d(x,y)
    m3 = d(x,y) + d(x,z) - d(y,z)

A metric has all three non-negative.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .candidate import as_candidate
from .config import CheckConfig
from .expr import evaluate

ORDER_GAP = 1e-6
STEP_FLOOR = 1e-9


@dataclass(frozen=True)
class TripleMargin:
    x: float
    y: float
    z: float
    m1: float
    m2: float
    m3: float

    def __post_init__(self):
        if not self.x < self.y < self.z:
            raise ValueError("a triple needs x < y < z")

    @property
    def m_min(self) -> float:
        return min(self.m1, self.m2, self.m3)

    @property
    def worst(self) -> int:
        ms = (self.m1, self.m2, self.m3)
        return ms.index(min(ms)) + 1


@dataclass(frozen=True)
class Violation:
    kind: str  # "triangle", "symmetry" or "positivity"
    witness: tuple[float, ...]
    magnitude: float
    which: int = 0  # 1..3 for triangle violations
    values: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "points": list(self.witness), "magnitude": self.magnitude}
        if self.kind == "triangle":
            out["inequality"] = self.which
        if self.values:
            out["values"] = dict(self.values)
        return out


def _margins(e, X, Y, Z):
    """Vectorized m1, m2, m3 and a mask of points where d could not be evaluated."""
    dxy, b1 = evaluate(e, {"x": X, "y": Y}, errors="mask")
    dyz, b2 = evaluate(e, {"x": Y, "y": Z}, errors="mask")
    dxz, b3 = evaluate(e, {"x": X, "y": Z}, errors="mask")
    m1 = dxy + dyz - dxz
    m2 = dxz + dyz - dxy
    m3 = dxy + dxz - dyz
    bad = b1 | b2 | b3 | ~np.isfinite(m1) | ~np.isfinite(m2) | ~np.isfinite(m3)
    scale = np.maximum(np.maximum(np.abs(dxy), np.abs(dyz)), np.abs(dxz))
    return m1, m2, m3, bad, scale


def triangle_margin(d, triple) -> TripleMargin:
    x, y, z = (float(t) for t in triple)
    if not x < y < z:
        raise ValueError("a triple needs x < y < z")
    e = as_candidate(d).expr
    dxy = evaluate(e, {"x": x, "y": y})
    dyz = evaluate(e, {"x": y, "y": z})
    dxz = evaluate(e, {"x": x, "y": z})
    return TripleMargin(x, y, z, dxy + dyz - dxz, dxz + dyz - dxy, dxy + dxz - dyz)


def _violation_from_margin(tm: TripleMargin) -> Violation:
    return Violation("triangle", (float(tm.x), float(tm.y), float(tm.z)), -tm.m_min, tm.worst,
                     {"m1": tm.m1, "m2": tm.m2, "m3": tm.m3})


def brute_force_oracle(d, grid, tol: float = 1e-12, max_report: int = 100) -> list[Violation]:
    """Every ordered triple of ``grid`` plus symmetry and positivity on all pairs.

    A margin counts as violated when it is below ``-tol * (1 + max |d|)`` over
    the grid.  Results are sorted by magnitude, then by witness.
    """
    e = as_candidate(d).expr
    P = np.unique(np.asarray(grid, dtype=float))
    n = len(P)
    D, bad = evaluate(e, {"x": P[:, None], "y": P[None, :]}, errors="mask")
    D = np.where(bad, np.nan, D)
    scale = 1 + np.nanmax(np.abs(D)) if np.isfinite(D).any() else 1.0
    thr = tol * scale
    out: list[Violation] = []
    diag = np.abs(np.diag(D))
    for i in np.flatnonzero(diag > thr):
        out.append(Violation("positivity", (float(P[i]), float(P[i])), float(diag[i]), values={"d": float(D[i, i])}))
    iu, ju = np.triu_indices(n, 1)
    off = D[iu, ju]
    offl = D[ju, iu]
    for k in np.flatnonzero(np.minimum(off, offl) <= thr):
        i, j = iu[k], ju[k]
        v = min(D[i, j], D[j, i])
        out.append(Violation("positivity", (float(P[i]), float(P[j])), float(thr - v), values={"d": float(v)}))
    asym = np.abs(off - offl)
    for k in np.flatnonzero(asym > thr):
        i, j = iu[k], ju[k]
        out.append(Violation("symmetry", (float(P[i]), float(P[j])), float(asym[k]),
                             values={"d_xy": float(D[i, j]), "d_yx": float(D[j, i])}))
    # triangles over i < j < k, one i at a time
    J, K = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    upper = J < K
    trip = []
    for i in range(n - 2):
        sel = upper & (J > i)
        j, k = J[sel], K[sel]
        dij, djk, dik = D[i, j], D[j, k], D[i, k]
        ms = np.stack([dij + djk - dik, dik + djk - dij, dij + dik - djk])
        mmin = np.min(ms, axis=0)
        hit = np.flatnonzero(mmin < -thr)
        for h in hit:
            w = int(np.argmin(ms[:, h]))
            trip.append(Violation("triangle", (float(P[i]), float(P[j[h]]), float(P[k[h]])), float(-mmin[h]), w + 1,
                                  {"m1": float(ms[0, h]), "m2": float(ms[1, h]), "m3": float(ms[2, h])}))
        if max_report and len(trip) > 20 * max_report:
            trip.sort(key=_vkey)
            del trip[max_report:]
    out += trip
    out.sort(key=_vkey)
    return out[:max_report] if max_report else out


def _vkey(v: Violation):
    return (-v.magnitude, v.kind, v.witness)


def search_points(config: CheckConfig) -> np.ndarray:
    """Seed grid: the log-symmetric axis plus a uniform block around the origin."""
    uni = np.linspace(-3, 3, config.search_grid + 1)
    return np.unique(np.concatenate([config.axis_values(), uni]))


def _refine(e, T, tol_step, window: float, max_iter: int = 400):
    """Coordinate pattern search on m_min, all seeds at once, inside [-window, window]."""
    T = T.copy()
    scale = np.maximum(1.0, np.max(np.abs(T), axis=1))
    step = 0.25 * scale
    m1, m2, m3, bad, _ = _margins(e, T[:, 0], T[:, 1], T[:, 2])
    val = np.where(bad, np.inf, np.minimum(np.minimum(m1, m2), m3))
    active = step >= tol_step * scale
    moves = [(c, s) for c in range(3) for s in (1.0, -1.0)]
    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        trials = []
        for c, s in moves:
            Tt = T[idx].copy()
            Tt[:, c] += s * step[idx]
            gap = ORDER_GAP * scale[idx]
            lo = Tt[:, c - 1] + gap if c > 0 else np.full(len(idx), -window)
            hi = Tt[:, c + 1] - gap if c < 2 else np.full(len(idx), window)
            Tt[:, c] = np.clip(Tt[:, c], lo, hi)
            ok = lo <= hi
            trials.append((Tt, ok))
        stack = np.concatenate([t for t, _ in trials])
        okall = np.concatenate([o for _, o in trials])
        m1, m2, m3, bad, _ = _margins(e, stack[:, 0], stack[:, 1], stack[:, 2])
        tv = np.where(bad | ~okall, np.inf, np.minimum(np.minimum(m1, m2), m3)).reshape(len(moves), len(idx))
        best = np.argmin(tv, axis=0)
        bv = tv[best, np.arange(len(idx))]
        improve = bv < val[idx]
        for r in np.flatnonzero(improve):
            i = idx[r]
            T[i] = trials[best[r]][0][r]
            val[i] = bv[r]
        shrink = idx[~improve]
        step[shrink] *= 0.5
        active = step >= tol_step * scale
    return T, val


def find_counterexample(d, config: CheckConfig | None = None) -> Violation | None:
    """Deepest triangle violation found by seeded pattern search, or None."""
    config = config or CheckConfig()
    e = as_candidate(d).expr
    P = search_points(config)
    n = len(P)
    i, j, k = np.array(list(itertools.combinations(range(n), 3))).T
    X, Y, Z = P[i], P[j], P[k]
    m1, m2, m3, bad, scale = _margins(e, X, Y, Z)
    mmin = np.where(bad, np.inf, np.minimum(np.minimum(m1, m2), m3))
    finite = np.isfinite(mmin)
    seeds = []
    if finite.any():
        cut = np.quantile(mmin[finite], 0.1)
        low = np.flatnonzero(finite & (mmin <= cut))
        low = low[np.lexsort((low, mmin[low]))][:400]
        seeds.append(np.stack([X[low], Y[low], Z[low]], axis=1))
    rng = config.rng(salt=11)
    r = config.search_random
    if r:
        lo, hi = config.grid_t_min, config.grid_t_max
        half = r // 2
        logs = np.sign(rng.uniform(-1, 1, (half, 3))) * 10.0 ** rng.uniform(lo, hi, (half, 3))
        uni = rng.uniform(-3, 3, (r - half, 3))
        R = np.sort(np.concatenate([logs, uni]), axis=1)
        good = (np.diff(R, axis=1) > ORDER_GAP * np.maximum(1, np.abs(R[:, 1:]))).all(axis=1)
        seeds.append(R[good])
    if not seeds:
        return None
    S = np.concatenate(seeds)
    T, val = _refine(e, S, STEP_FLOOR, 10.0 ** config.grid_t_max)
    dscale = 1 + np.nanmax(np.where(np.isfinite(scale), scale, np.nan)) if np.isfinite(scale).any() else 1.0
    thr = config.tol_violation * dscale
    cand = np.flatnonzero(val < -thr)
    if not cand.size:
        return None
    # deepest first, then lexicographic witness for determinism
    order = np.lexsort((T[cand, 2], T[cand, 1], T[cand, 0], val[cand]))
    for c in cand[order]:
        tm = triangle_margin(e, T[c])
        if tm.m_min < -thr:
            return _violation_from_margin(tm)
    return None

