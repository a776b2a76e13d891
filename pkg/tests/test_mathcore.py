import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.stats import multivariate_normal, norm

from arbp import mathcore as mc

unit = st.floats(min_value=1e-5, max_value=1.0 - 1e-5)
corr = st.floats(min_value=-0.99, max_value=0.99)


def test_alpha_values():
    # a_i = (2 - 1/i) / (i + 1)
    assert mc.alpha(1) == pytest.approx(0.5)
    assert mc.alpha(2) == pytest.approx(0.5)
    assert mc.alpha(3) == pytest.approx(5.0 / 12.0)
    i = np.arange(1, 2000)
    a = mc.alpha(i)
    assert np.all(np.diff(a[1:]) < 0)
    assert a[-1] < 2e-3  # ~ 2/i decay


def test_alpha_rejects_nonpositive_index():
    with pytest.raises(ValueError):
        mc.alpha(0)


def test_clamp_unit_bounds():
    x = np.array([-1.0, 0.0, 0.5, 1.0, 2.0])
    c = mc.clamp_unit(x)
    assert c.min() == mc.EPS_U and c.max() == 1.0 - mc.EPS_U
    assert c[2] == 0.5


def test_clamp_rho():
    assert mc.clamp_rho(0.99999) == mc.RHO_MAX
    assert mc.clamp_rho(-0.99999) == -mc.RHO_MAX
    assert mc.clamp_rho(0.5) == 0.5


def test_std_normal_roundtrip():
    u = np.linspace(1e-6, 1 - 1e-6, 101)
    assert np.allclose(mc.std_normal_cdf(mc.std_normal_quantile(u)), u, atol=1e-12)


def test_std_normal_quantile_domain():
    with pytest.raises(ValueError):
        mc.std_normal_quantile(0.0)
    with pytest.raises(ValueError):
        mc.std_normal_quantile(1.0)


def test_copula_density_against_bivariate_normal():
    # c(u, v; rho) = phi2(a, b; rho) / (phi(a) phi(b)) with a, b the quantiles
    rng = np.random.default_rng(0)
    for _ in range(20):
        u, v = rng.uniform(0.05, 0.95, 2)
        rho = rng.uniform(-0.9, 0.9)
        a, b = norm.ppf(u), norm.ppf(v)
        ref = multivariate_normal.pdf(
            [a, b], cov=[[1.0, rho], [rho, 1.0]]
        ) / (norm.pdf(a) * norm.pdf(b))
        assert mc.copula_density(u, v, rho) == pytest.approx(ref, rel=1e-10)


def test_copula_density_closed_form_at_median():
    # a = b = 0: c = 1/sqrt(1 - rho^2)
    assert mc.copula_density(0.5, 0.5, 0.8) == pytest.approx(1.0 / 0.6, rel=1e-12)


def test_copula_density_independence():
    assert mc.copula_density(0.3, 0.7, 0.0) == pytest.approx(1.0)


def test_conditional_cdf_is_integral_of_density():
    rng = np.random.default_rng(1)
    for _ in range(10):
        u, v = rng.uniform(0.1, 0.9, 2)
        rho = rng.uniform(-0.8, 0.8)
        ref, err = quad(lambda t: mc.copula_density(t, v, rho), 1e-9, u, limit=200)
        assert mc.copula_conditional_cdf(u, v, rho) == pytest.approx(ref, abs=1e-7)


def test_conditional_cdf_uniform_marginal():
    # integrating H over v recovers u (uniform marginals of the copula)
    u = 0.37
    for rho in (0.2, 0.9, -0.6):
        val, _ = quad(lambda v: mc.copula_conditional_cdf(u, v, rho), 1e-9, 1 - 1e-9,
                      limit=200)
        assert val == pytest.approx(u, abs=1e-7)


@given(u=unit, v=unit, rho=corr)
@settings(max_examples=200, deadline=None)
def test_log_copula_density_consistency(u, v, rho):
    lc = mc.log_copula_density(u, v, rho)
    assert np.isfinite(lc)
    assert np.exp(lc) == pytest.approx(mc.copula_density(u, v, rho), rel=1e-10)


@given(v=unit, rho=corr)
@settings(max_examples=100, deadline=None)
def test_conditional_cdf_monotone_in_u(v, rho):
    u = np.linspace(0.01, 0.99, 25)
    H = mc.copula_conditional_cdf(u, v, rho)
    assert np.all(np.diff(H) >= 0)
    assert np.all((H >= 0) & (H <= 1))


@given(u=unit, v=unit)
@settings(max_examples=100, deadline=None)
def test_copula_symmetry(u, v):
    for rho in (0.5, -0.5):
        assert mc.copula_density(u, v, rho) == pytest.approx(
            mc.copula_density(v, u, rho), rel=1e-12
        )


def test_numeric_fault_carries_step():
    err = mc.NumericFault("boom", step=7)
    assert err.step == 7
    assert isinstance(err, RuntimeError)
