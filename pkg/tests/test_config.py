import numpy as np
import pytest

from metricline.candidate import LambdaSet
from metricline.config import CheckConfig, ConfigError, grid2d, load_config, parse_overrides


def test_defaults():
    cfg = CheckConfig()
    assert (cfg.tol_fd, cfg.tol_limit, cfg.tol_nec, cfg.tol_nec2) == (1e-7, 1e-6, 1e-5, 1e-3)
    assert cfg.limit_magnitudes[-1] == 1e6


def test_axis_values_are_symmetric():
    a = CheckConfig().axis_values()
    assert 0.0 in a
    assert np.allclose(np.sort(-a), a)
    assert a.max() == 1000.0


def test_random_points_are_seeded():
    a = CheckConfig().random_points(50)
    b = CheckConfig().random_points(50)
    c = CheckConfig(rng_seed=1).random_points(50)
    assert np.array_equal(a[0], b[0]) and not np.array_equal(a[0], c[0])


def test_grid_excludes_bands():
    cfg = CheckConfig()
    x, y = grid2d(cfg, LambdaSet(("xy=0",)))
    assert np.all(np.abs(x - y) > cfg.diag_band * (1 + np.abs(x) + np.abs(y)) * 0.999)
    assert not np.any(LambdaSet(("xy=0",)).in_band(x, y, cfg.lambda_band))


def test_overrides_and_file(tmp_path):
    cfg = parse_overrides({"tol_fd": "1e-6", "limit_magnitudes": "1e2, 1e3, 1e4"})
    assert cfg.tol_fd == 1e-6 and cfg.limit_magnitudes == (100.0, 1000.0, 10000.0)
    path = tmp_path / "c.cfg"
    path.write_text("# comment\nrng_seed = 4\n\nmax_n = 2\n", encoding="utf-8")
    cfg = load_config(path)
    assert (cfg.rng_seed, cfg.max_n) == (4, 2)


@pytest.mark.parametrize("text", ["bogus = 1\n", "rng_seed = x\n", "no equals sign\n",
                                  "limit_magnitudes = 1e3\n"])
def test_bad_config(tmp_path, text):
    path = tmp_path / "c.cfg"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(path)
