"""Check configuration and the flat ``key = value`` config file format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy.stats import qmc


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CheckConfig:
    # probe grid: 0 and +-10^t for t in [grid_t_min, grid_t_max] step grid_t_step
    grid_t_min: float = -2.0
    grid_t_max: float = 3.0
    grid_t_step: float = 0.5
    n_random: int = 2000
    diag_band: float = 1e-3
    lambda_band: float = 1e-3
    tol_sign: float = 1e-9
    tol_sym: float = 1e-10
    tol_pos: float = 1e-12
    tol_limit: float = 1e-6
    tol_fd: float = 1e-7
    tol_nec: float = 1e-5
    tol_nec2: float = 1e-3
    tol_grad: float = 1e-3
    tol_violation: float = 1e-12
    limit_magnitudes: tuple[float, ...] = (1e3, 1e4, 1e5, 1e6)
    grad_radii: tuple[float, ...] = (1e2, 1e3, 1e4)
    rng_seed: int = 0
    max_n: int = 3
    fd_k0: int = 8
    fd_k1: int = 28
    skip_limit: float = 0.05
    search_random: int = 200
    search_grid: int = 40
    oracle_grid: int = 60
    subadditive_step: float = 1.0 / 300
    subadditive_range: float = 5.0
    nec_grid: int = 12
    threads: int = 0

    def __post_init__(self):
        if self.diag_band <= 0 or self.lambda_band <= 0:
            raise ConfigError("band widths must be positive")
        mags = list(self.limit_magnitudes)
        if len(mags) < 2 or any(b <= a for a, b in zip(mags, mags[1:])):
            raise ConfigError("limit_magnitudes must be increasing with at least two entries")
        if self.max_n < 0:
            raise ConfigError("max_n must be non-negative")
        if not 0 < self.fd_k0 < self.fd_k1:
            raise ConfigError("need 0 < fd_k0 < fd_k1")

    def replace(self, **changes) -> "CheckConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    def magnitudes(self) -> np.ndarray:
        n = int(round((self.grid_t_max - self.grid_t_min) / self.grid_t_step)) + 1
        return 10.0 ** (self.grid_t_min + self.grid_t_step * np.arange(n))

    def axis_values(self) -> np.ndarray:
        m = self.magnitudes()
        return np.concatenate([-m[::-1], [0.0], m])

    def rng(self, salt: int = 0) -> np.random.Generator:
        return np.random.default_rng([self.rng_seed, salt])

    def random_points(self, n: int | None = None, salt: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """Scrambled Halton points mapped to signed log-uniform magnitudes."""
        n = self.n_random if n is None else n
        if n == 0:
            return np.zeros(0), np.zeros(0)
        sampler = qmc.Halton(d=4, scramble=True, seed=np.random.default_rng([self.rng_seed, salt, 7]))
        u = sampler.random(n)
        lo, hi = self.grid_t_min, self.grid_t_max
        x = np.where(u[:, 0] < 0.5, -1.0, 1.0) * 10.0 ** (lo + (hi - lo) * u[:, 1])
        y = np.where(u[:, 2] < 0.5, -1.0, 1.0) * 10.0 ** (lo + (hi - lo) * u[:, 3])
        return x, y


def grid2d(config: CheckConfig, lambda_set=None, include_random: bool = True):
    """Tensor grid plus quasi-random points, minus the diagonal band and Lambda bands."""
    a = config.axis_values()
    gx, gy = np.meshgrid(a, a, indexing="ij")
    x, y = gx.ravel(), gy.ravel()
    if include_random:
        rx, ry = config.random_points()
        x = np.concatenate([x, rx])
        y = np.concatenate([y, ry])
    keep = np.abs(x - y) >= config.diag_band * (1 + np.abs(x) + np.abs(y))
    if lambda_set:
        keep &= ~lambda_set.in_band(x, y, config.lambda_band)
    return x[keep], y[keep]


def _coerce(f: dataclasses.Field, raw: str):
    default = f.default
    try:
        if isinstance(default, bool):
            return raw.strip().lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            return tuple(float(p) for p in raw.split(",") if p.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value for {f.name}: {raw!r}") from exc
    return raw


def parse_overrides(pairs: dict[str, str], base: CheckConfig | None = None) -> CheckConfig:
    base = base or CheckConfig()
    known = {f.name: f for f in fields(CheckConfig)}
    changes = {}
    for key, raw in pairs.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        changes[key] = _coerce(known[key], raw)
    return base.replace(**changes)


def load_config(path: str | Path, base: CheckConfig | None = None) -> CheckConfig:
    pairs = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = line.split("=", 1)
        pairs[key.strip()] = value.strip()
    return parse_overrides(pairs, base)
