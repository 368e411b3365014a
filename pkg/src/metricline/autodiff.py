"""First and mixed second partials of candidates.

Smooth points go through hyper-dual numbers, which give exact (to rounding)
values of the first partials and of the mixed partial.  Where a kink is
detected, or for the one-sided directional derivatives, difference quotients
on a geometric ladder with one Richardson step are used instead.

The one-sided derivative along v is::

    d_v^+ d(x, y) = lim_{h -> 0+} (d((x, y) + h v) - d(x, y)) / h

and ``one_sided_partial(d, p, axis=2, direction="-")`` is this operator with
v = (0, -1).  Off the diagonal it equals ``-d_2 d``; for ``|y - x|`` at the
origin it is ``+1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .candidate import MetricCandidate, as_candidate
from .expr import Expr, evaluate, evaluate_field, point_scale

EXACT = "exact-AD"
CONVERGED = "converged-FD"
NOT_CONVERGED = "not-converged"

# a discriminator counts as a kink only if it actually moves with the seeds
_FIRST_ORDER_FACTOR = 1e3


def _full(a, shape):
    a = np.asarray(a, dtype=float)
    return a if a.shape == shape else np.broadcast_to(a, shape).copy()


class HyperDual:
    """v + dx e1 + dy e2 + dxy e1 e2 with e1^2 = e2^2 = 0.

    Components are numpy arrays (or floats).  ``kink`` marks elements whose
    derivative parts passed through a non-differentiable point.
    """

    __slots__ = ("v", "dx", "dy", "dxy", "kink")
    __array_priority__ = 100

    def __init__(self, v, dx=0.0, dy=0.0, dxy=0.0, kink=None):
        self.v = np.asarray(v, dtype=float)
        shape = self.v.shape
        self.dx = _full(dx, shape)
        self.dy = _full(dy, shape)
        self.dxy = _full(dxy, shape)
        self.kink = np.zeros(shape, dtype=bool) if kink is None else np.broadcast_to(kink, shape).copy()

    @classmethod
    def const(cls, v):
        return cls(v)

    def __repr__(self) -> str:
        return f"HyperDual(v={self.v}, dx={self.dx}, dy={self.dy}, dxy={self.dxy})"

    @staticmethod
    def _wrap(o):
        return o if isinstance(o, HyperDual) else HyperDual(o)

    def __neg__(self):
        return HyperDual(-self.v, -self.dx, -self.dy, -self.dxy, self.kink)

    def __add__(self, o):
        o = self._wrap(o)
        return HyperDual(self.v + o.v, self.dx + o.dx, self.dy + o.dy, self.dxy + o.dxy, self.kink | o.kink)

    __radd__ = __add__

    def __sub__(self, o):
        o = self._wrap(o)
        return HyperDual(self.v - o.v, self.dx - o.dx, self.dy - o.dy, self.dxy - o.dxy, self.kink | o.kink)

    def __rsub__(self, o):
        return self._wrap(o) - self

    def __mul__(self, o):
        o = self._wrap(o)
        # the two cross terms are summed first so swapping seeds is bit-exact
        dxy = self.v * o.dxy + (self.dx * o.dy + self.dy * o.dx) + self.dxy * o.v
        return HyperDual(self.v * o.v, self.v * o.dx + self.dx * o.v, self.v * o.dy + self.dy * o.v, dxy,
                         self.kink | o.kink)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = self._wrap(o)
        # q = a / b solved from a = q b
        with np.errstate(divide="ignore", invalid="ignore"):
            qv = self.v / o.v
            qx = (self.dx - qv * o.dx) / o.v
            qy = (self.dy - qv * o.dy) / o.v
            qxy = (self.dxy - (qx * o.dy + qy * o.dx) - qv * o.dxy) / o.v
        return HyperDual(qv, qx, qy, qxy, self.kink | o.kink)

    def __rtruediv__(self, o):
        return self._wrap(o) / self

    def chain(self, f, f1, f2):
        """Apply a scalar function given its value and first two derivatives at v."""
        with np.errstate(invalid="ignore"):
            dxy = f1 * self.dxy + f2 * (self.dx * self.dy)
        return HyperDual(f, f1 * self.dx, f1 * self.dy, dxy, self.kink)

    def first_order(self) -> np.ndarray:
        return np.abs(self.dx) + np.abs(self.dy)

    def __getitem__(self, idx):
        return HyperDual(self.v[idx], self.dx[idx], self.dy[idx], self.dxy[idx], self.kink[idx])


class HyperDualField:
    name = "hyperdual"

    def lift(self, values):
        return HyperDual(np.asarray(values, dtype=float))

    def val(self, a):
        return a.v if isinstance(a, HyperDual) else np.asarray(a, dtype=float)

    def take(self, a, idx):
        return a[idx]

    def empty(self, n):
        return HyperDual(np.zeros(n))

    def put(self, dst, idx, src):
        dst.v[idx] = src.v
        dst.dx[idx] = src.dx
        dst.dy[idx] = src.dy
        dst.dxy[idx] = src.dxy
        dst.kink[idx] = src.kink

    def mark_kink(self, a, mask):
        out = HyperDual(a.v, a.dx, a.dy, a.dxy, a.kink | mask)
        return out

    def _moving_zero(self, a, tol):
        return (np.abs(a.v) <= tol) & (a.first_order() > _FIRST_ORDER_FACTOR * tol)

    def abs(self, a, tol):
        s = np.where(a.v < 0, -1.0, 1.0)
        out = HyperDual(np.abs(a.v), s * a.dx, s * a.dy, s * a.dxy, a.kink)
        return self.mark_kink(out, self._moving_zero(a, tol))

    def sgn(self, a, tol):
        out = HyperDual(np.sign(a.v), 0.0, 0.0, 0.0, a.kink)
        return self.mark_kink(out, np.abs(a.v) <= tol)

    def sqrt(self, a, tol):
        s = np.sqrt(a.v)
        with np.errstate(divide="ignore", invalid="ignore"):
            f1 = 0.5 / s
            f2 = -0.25 / (s * a.v)
        out = self._chain_safe(a, s, f1, f2)
        return self.mark_kink(out, (a.v <= tol) & (a.first_order() > 0))

    def exp(self, a):
        e = np.exp(a.v)
        return a.chain(e, e, e)

    def log(self, a):
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / a.v
        return a.chain(np.log(a.v), inv, -inv * inv)

    def pow(self, a, b, const_exponent, tol):
        if const_exponent:
            c = b.v
            val = np.power(a.v, c)
            with np.errstate(divide="ignore", invalid="ignore"):
                f1 = c * np.power(a.v, c - 1)
                f2 = c * (c - 1) * np.power(a.v, c - 2)
            out = self._chain_safe(a, val, f1, f2)
            out = self.mark_kink(out, (a.v == 0) & (a.first_order() > 0))
            return self.vanishing_power(out, a, c, tol)
        # a^b = exp(b log a) for a > 0
        val = np.power(a.v, b.v)
        with np.errstate(divide="ignore", invalid="ignore"):
            la = HyperDual(np.log(a.v), a.dx / a.v, a.dy / a.v,
                           (a.dxy - (a.dx * a.dy) / a.v) / a.v, a.kink)
        t = b * la
        out = HyperDual(val, val * t.dx, val * t.dy, val * (t.dxy + t.dx * t.dy), a.kink | b.kink)
        zero = a.v == 0
        if zero.any():
            out.dx[zero] = 0.0
            out.dy[zero] = 0.0
            out.dxy[zero] = 0.0
            out.kink |= zero & ((a.first_order() > 0) | (b.first_order() > 0))
        return out

    def vanishing_power(self, out, base, c, tol):
        """|g|^c with c > 2 is twice differentiable where g vanishes, whatever kink g has there."""
        clear = (np.abs(base.v) <= tol) & (np.asarray(c) > 2)
        if np.any(clear):
            out = HyperDual(out.v, out.dx, out.dy, out.dxy, out.kink & ~clear)
        return out

    def _chain_safe(self, a, f, f1, f2):
        # derivative slots whose seeds vanish stay 0 even where f1/f2 blow up
        with np.errstate(invalid="ignore", over="ignore"):
            dx = np.where(a.dx == 0, 0.0, f1 * a.dx)
            dy = np.where(a.dy == 0, 0.0, f1 * a.dy)
            t1 = np.where(a.dxy == 0, 0.0, f1 * a.dxy)
            cross = a.dx * a.dy
            t2 = np.where(cross == 0, 0.0, f2 * cross)
        return HyperDual(f, dx, dy, t1 + t2, a.kink)

    def choose(self, mask, a, b, disc, tol):
        out = HyperDual(np.where(mask, a.v, b.v), np.where(mask, a.dx, b.dx), np.where(mask, a.dy, b.dy),
                        np.where(mask, a.dxy, b.dxy), np.where(mask, a.kink, b.kink))
        return self.mark_kink(out, self._moving_zero(disc, tol))


HYPERDUAL = HyperDualField()


def _expr_of(d) -> Expr:
    if isinstance(d, Expr):
        return d
    return as_candidate(d).expr


def hd_eval(d, x, y, seed_x=(1.0, 0.0), seed_y=(0.0, 1.0), errors: str = "raise"):
    """Evaluate on hyper-duals x + seed_x[0] e1 + seed_x[1] e2 (likewise y).

    With default seeds ``dxy`` of the result is the mixed partial.
    Seeding both units on x (``seed_x=(1, 1), seed_y=(0, 0)``) gives d_11.
    """
    e = _expr_of(d)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    x, y = np.broadcast_arrays(x, y)
    x, y = x.ravel().copy(), y.ravel().copy()
    n = len(x)
    env = {
        "x": HyperDual(x, np.full(n, seed_x[0]), np.full(n, seed_x[1]), np.zeros(n)),
        "y": HyperDual(y, np.full(n, seed_y[0]), np.full(n, seed_y[1]), np.zeros(n)),
    }
    scale = point_scale([x, y], n)
    return evaluate_field(e, env, HYPERDUAL, n, scale, errors=errors)


@dataclass(frozen=True)
class DerivativeEstimate:
    value: float
    status: str
    residual: float = 0.0
    steps_used: int = 0

    @property
    def ok(self) -> bool:
        return self.status != NOT_CONVERGED


@dataclass(frozen=True)
class GradientEstimate:
    d1: DerivativeEstimate
    d2: DerivativeEstimate

    @property
    def norm(self) -> float:
        return float(np.hypot(self.d1.value, self.d2.value))


@dataclass
class BatchEstimate:
    """Vectorized counterpart of DerivativeEstimate.

    ``trend`` is +inf / -inf where the raw quotients blow up monotonically as
    the step shrinks (a derivative that is infinite in the extended reals) and
    0 elsewhere.
    """

    value: np.ndarray
    status: np.ndarray
    residual: np.ndarray
    steps_used: np.ndarray
    trend: np.ndarray | None = None

    def extended(self) -> np.ndarray:
        """Converged values, +-inf for detected blow-ups, nan otherwise."""
        out = np.where(self.ok, self.value, np.nan)
        if self.trend is not None:
            out = np.where(~self.ok & (self.trend != 0), self.trend, out)
        return out

    def __len__(self):
        return len(self.value)

    def __getitem__(self, i) -> DerivativeEstimate:
        return DerivativeEstimate(float(self.value[i]), str(self.status[i]), float(self.residual[i]),
                                  int(self.steps_used[i]))

    @property
    def ok(self) -> np.ndarray:
        return self.status != NOT_CONVERGED


def _select_converged(R: np.ndarray, tol: float, first_k: int):
    """Pick the most stable Richardson estimate along each row of R (rows = points)."""
    n, m = R.shape
    with np.errstate(invalid="ignore"):
        diff = np.abs(np.diff(R, axis=1))
        rel = diff / np.maximum(1.0, np.abs(R[:, 1:]))
    rel = np.where(np.isfinite(rel), rel, np.inf)
    j = np.argmin(rel, axis=1)
    best = rel[np.arange(n), j]
    value = R[np.arange(n), j + 1]
    residual = diff[np.arange(n), j]
    status = np.where(best <= tol, CONVERGED, NOT_CONVERGED).astype(object)
    return value, status, residual, (j + 2 + first_k).astype(int)


def _trend(D: np.ndarray, levels: int = 8, growth: float = 4.0) -> np.ndarray:
    """Detect quotients diverging to +-inf along the finest ``levels`` rungs."""
    tail = D[:, -levels:]
    with np.errstate(invalid="ignore", divide="ignore"):
        up = np.all(np.diff(tail, axis=1) > 0, axis=1) & (tail[:, -1] > 0) & (tail[:, -1] >= growth * np.abs(tail[:, 0]))
        down = np.all(np.diff(tail, axis=1) < 0, axis=1) & (tail[:, -1] < 0) & (-tail[:, -1] >= growth * np.abs(tail[:, 0]))
    return np.where(up, np.inf, np.where(down, -np.inf, 0.0))


def _ladder(config, x, y):
    from .config import CheckConfig

    cfg = config or CheckConfig()
    k = np.arange(cfg.fd_k0 - 1, cfg.fd_k1 + 1)
    scale = point_scale([x, y], len(x))
    return cfg, k, scale[:, None] * 2.0 ** (-k[None, :])


def one_sided_partial_batch(d, x, y, axis: int, direction: str, config=None) -> BatchEstimate:
    """Vectorized one-sided axis derivative; see the module docstring for the sign convention."""
    e = _expr_of(d)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    cfg, k, H = _ladder(config, x, y)
    sign = 1.0 if direction == "+" else -1.0
    vx, vy = (sign, 0.0) if axis == 1 else (0.0, sign)
    X = x[:, None] + vx * H
    Y = y[:, None] + vy * H
    base = evaluate(e, {"x": x, "y": y})
    vals = evaluate(e, {"x": X, "y": Y})
    D = (vals - base[:, None]) / H
    R = 2 * D[:, 1:] - D[:, :-1]
    value, status, residual, steps = _select_converged(R, cfg.tol_fd, cfg.fd_k0)
    return BatchEstimate(value, status, residual, steps, _trend(D))


def one_sided_partial(d, point, axis: int, direction: str, config=None) -> DerivativeEstimate:
    """One-sided derivative along ``v = +-e_axis`` by the difference-quotient ladder."""
    if axis not in (1, 2) or direction not in ("+", "-"):
        raise ValueError("axis must be 1 or 2 and direction '+' or '-'")
    return one_sided_partial_batch(d, [point[0]], [point[1]], axis, direction, config)[0]


def fd_cross_partial_batch(d, x, y, config=None) -> BatchEstimate:
    """Four-point central stencil on a shrinking ladder, Richardson factor 4."""
    from .config import CheckConfig

    cfg = config or CheckConfig()
    e = _expr_of(d)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    scale = point_scale([x, y], len(x))
    # keep the stencil well away from the diagonal
    top = np.minimum(scale, np.abs(x - y) / 4)
    k = np.arange(0, 17)
    H = top[:, None] * 2.0 ** (-k[None, :])
    X, Y = x[:, None], y[:, None]
    f = lambda a, b: evaluate(e, {"x": a, "y": b})
    D = (f(X + H, Y + H) - f(X + H, Y - H) - f(X - H, Y + H) + f(X - H, Y - H)) / (4 * H * H)
    R = (4 * D[:, 1:] - D[:, :-1]) / 3
    value, status, residual, steps = _select_converged(R, cfg.tol_fd * 10, 0)
    return BatchEstimate(value, status, residual, steps)


def _fd_gradient_batch(e, x, y, axis, config=None) -> BatchEstimate:
    scale = point_scale([x, y], len(x))
    top = np.minimum(scale, np.abs(x - y) / 4) * 2.0 ** -2
    k = np.arange(0, 24)
    H = top[:, None] * 2.0 ** (-k[None, :])
    X, Y = x[:, None], y[:, None]
    if axis == 1:
        D = (evaluate(e, {"x": X + H, "y": Y}) - evaluate(e, {"x": X - H, "y": Y})) / (2 * H)
    else:
        D = (evaluate(e, {"x": X, "y": Y + H}) - evaluate(e, {"x": X, "y": Y - H})) / (2 * H)
    R = (4 * D[:, 1:] - D[:, :-1]) / 3
    from .config import CheckConfig

    tol = (config or CheckConfig()).tol_fd
    value, status, residual, steps = _select_converged(R, tol, 0)
    return BatchEstimate(value, status, residual, steps)


def cross_partial_batch(d, x, y, config=None) -> tuple[BatchEstimate, np.ndarray]:
    """Mixed partial at many points.  Returns the estimates and the kink mask.

    Points where the hyper-dual pass saw a kink, or produced a non-finite
    value, are redone with finite differences.
    """
    e = _expr_of(d)
    x = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    y = np.atleast_1d(np.asarray(y, dtype=float)).ravel()
    hd = hd_eval(e, x, y)
    kink = hd.kink.copy()
    value = hd.dxy.copy()
    status = np.full(len(x), EXACT, dtype=object)
    residual = np.zeros(len(x))
    steps = np.zeros(len(x), dtype=int)
    redo = kink | ~np.isfinite(value)
    if redo.any():
        fd = fd_cross_partial_batch(e, x[redo], y[redo], config)
        value[redo] = fd.value
        status[redo] = fd.status
        residual[redo] = fd.residual
        steps[redo] = fd.steps_used
    return BatchEstimate(value, status, residual, steps), kink


def cross_partial(d, point, config=None) -> DerivativeEstimate:
    """Mixed second partial d_12 at an off-diagonal point."""
    est, _ = cross_partial_batch(d, [point[0]], [point[1]], config)
    return est[0]


def gradient_batch(d, x, y, config=None) -> tuple[BatchEstimate, BatchEstimate]:
    e = _expr_of(d)
    x = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    y = np.atleast_1d(np.asarray(y, dtype=float)).ravel()
    hd = hd_eval(e, x, y)
    out = []
    for axis, comp in ((1, hd.dx), (2, hd.dy)):
        value = comp.copy()
        status = np.full(len(x), EXACT, dtype=object)
        residual = np.zeros(len(x))
        steps = np.zeros(len(x), dtype=int)
        redo = hd.kink | ~np.isfinite(value)
        if redo.any():
            fd = _fd_gradient_batch(e, x[redo], y[redo], axis, config)
            value[redo] = fd.value
            status[redo] = fd.status
            residual[redo] = fd.residual
            steps[redo] = fd.steps_used
        out.append(BatchEstimate(value, status, residual, steps))
    return out[0], out[1]


def gradient(d, point, config=None) -> GradientEstimate:
    g1, g2 = gradient_batch(d, [point[0]], [point[1]], config)
    return GradientEstimate(g1[0], g2[0])


def second_partials(d, x, y):
    """(d_11, d_22, d_12, kink mask) from three hyper-dual passes."""
    e = _expr_of(d)
    h11 = hd_eval(e, x, y, seed_x=(1.0, 1.0), seed_y=(0.0, 0.0))
    h22 = hd_eval(e, x, y, seed_x=(0.0, 0.0), seed_y=(1.0, 1.0))
    h12 = hd_eval(e, x, y)
    return h11.dxy, h22.dxy, h12.dxy, h11.kink | h22.kink | h12.kink


def second_difference_batch(d, x, y, config=None, tol: float = 1e-6) -> BatchEstimate:
    """lim (d(x+h, y) - 2 d(x, y) + d(x-h, y)) / h^2 on a ladder, Richardson factor 4.

    Off the diagonal the step stays below |x - y| / 4.  At diagonal points the
    quotient usually blows up like 1/h; that shows in ``trend``.
    """
    e = _expr_of(d)
    x = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    y = np.atleast_1d(np.asarray(y, dtype=float)).ravel()
    scale = point_scale([x, y], len(x))
    top = np.where(x == y, scale, np.minimum(scale, np.abs(x - y) / 4)) / 4
    k = np.arange(0, 15)
    H = top[:, None] * 2.0 ** (-k[None, :])
    X, Y = x[:, None], y[:, None]
    mid = evaluate(e, {"x": x, "y": y})[:, None]
    D = (evaluate(e, {"x": X + H, "y": Y}) - 2 * mid + evaluate(e, {"x": X - H, "y": Y})) / (H * H)
    R = (4 * D[:, 1:] - D[:, :-1]) / 3
    value, status, residual, steps = _select_converged(R, tol, 0)
    return BatchEstimate(value, status, residual, steps, _trend(D, levels=6, growth=3.0))
