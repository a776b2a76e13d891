import numpy as np
import pytest
from scipy.stats import norm

from arbp import baseline


def test_grid_endpoints_and_size():
    grid = baseline.bandwidth_grid()
    assert len(grid) == 80
    assert grid[0] == pytest.approx(0.1)
    assert grid[-1] == pytest.approx(100.0)
    # log-equidistant: constant ratio between neighbors
    ratios = grid[1:] / grid[:-1]
    assert np.allclose(ratios, ratios[0])


def test_single_point_density_is_the_kernel():
    h = 0.7
    x0 = np.array([[1.0, -2.0]])
    z = np.array([[1.5, -1.0]])
    got = baseline.kde_log_density(x0, z, h)[0]
    want = norm.logpdf(1.5, loc=1.0, scale=h) + norm.logpdf(-1.0, loc=-2.0, scale=h)
    assert got == pytest.approx(want, abs=1e-12)


def test_kde_density_normalizes():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((30, 1))
    grid = np.linspace(-10, 10, 4001)
    dens = np.exp(baseline.kde_log_density(X, grid[:, None], 0.5))
    assert np.trapezoid(dens, grid) == pytest.approx(1.0, abs=1e-6)


def test_standard_normal_nll_close_to_entropy():
    # differential entropy of N(0,1) is 0.5 log(2 pi e) = 1.4189...
    rng = np.random.default_rng(1)
    X = rng.standard_normal((500, 1))
    Z = rng.standard_normal((500, 1))
    nll = baseline.kde_baseline(X, Z, seed=0)
    assert nll == pytest.approx(0.5 * np.log(2 * np.pi * np.e), abs=0.1)


def test_select_bandwidth_on_grid():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((100, 2))
    h = baseline.select_bandwidth(X, seed=0)
    assert h in baseline.bandwidth_grid()


def test_loo_fallback_for_tiny_samples(caplog):
    import logging

    X = np.array([[0.0], [1.0], [2.0]])
    with caplog.at_level(logging.INFO, logger="arbp.baseline"):
        h = baseline.select_bandwidth(X, seed=0)
    assert h > 0
    assert any("leave-one-out" in rec.message for rec in caplog.records)


def test_select_bandwidth_needs_two_points():
    with pytest.raises(ValueError):
        baseline.select_bandwidth(np.zeros((1, 1)))
