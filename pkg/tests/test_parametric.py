import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from riskgen.dgp import simulate_garch_dgp, reference_garch_params
from riskgen.errors import DegenerateSeries, NonStationary, RankDeficient, TooShort
from riskgen.parametric import (NS_LAMBDA, Ar1Params, Garch11Params, VasicekParams, ar1_to_vasicek, curvature_peak,
                                factors_from_curves, filter_state, fit_ar1, fit_garch11, fit_ns_factors, fit_vasicek,
                                garch_loglik, ns_design, ns_loadings, ns_vasicek_paths, parse_tenor, simulate_ar1,
                                simulate_garch11, simulate_ns_vasicek, simulate_vasicek, vasicek_step)
from riskgen.parametric.garch import MAX_PERSISTENCE

from conftest import make_panel

FRED_YEARS = np.array([0.25, 0.5, 1, 2, 3, 5, 10, 20, 30], float)


def _ar_path(phi0, phi1, sigma, n, seed):
    rng = np.random.default_rng(seed)
    x = np.empty(n)
    x[0] = phi0 / (1 - phi1)
    for t in range(1, n):
        x[t] = phi0 + phi1 * x[t - 1] + sigma * rng.standard_normal()
    return x


# --- AR(1) -------------------------------------------------------------------


def test_ar1_white_noise_and_recovery(rng):
    assert abs(fit_ar1(rng.standard_normal(7500)).phi1) < 0.03
    assert abs(fit_ar1(_ar_path(0.1, 0.5, 1.0, 7500, 3)).phi1 - 0.5) < 0.03


def test_ar1_errors():
    with pytest.raises(DegenerateSeries):
        fit_ar1(np.full(100, 2.0))
    with pytest.raises(TooShort):
        fit_ar1(np.arange(10.0))


def test_ar1_residual_divisor():
    x = _ar_path(0.0, 0.3, 1.0, 200, 9)
    p = fit_ar1(x)
    resid = x[1:] - p.phi0 - p.phi1 * x[:-1]
    assert abs(p.sigma - np.sqrt(resid @ resid / (resid.size - 2))) < 1e-14


def test_simulate_ar1_noise_free_and_moments():
    path = simulate_ar1(Ar1Params(0.0, 0.5, 0.0), 1.0, 4, 1, seed=0).paths[0, :, 0]
    np.testing.assert_allclose(path, [0.5, 0.25, 0.125, 0.0625])
    one = simulate_ar1(Ar1Params(0.2, 0.5, 0.3), 0.4, 1, 10_000, seed=1).paths[:, 0, 0]
    assert abs(one.std(ddof=1) / 0.3 - 1) < 0.02
    long = simulate_ar1(Ar1Params(0.2, 0.5, 0.3), 0.0, 400, 2000, seed=2).paths[:, -1, 0]
    sd_stat = 0.3 / np.sqrt(1 - 0.25)
    assert abs(long.mean() - 0.4) < 3 * sd_stat / np.sqrt(long.size)


@given(st.integers(0, 2**31))
def test_ar1_simulation_is_seeded(seed):
    p = Ar1Params(0.1, 0.7, 0.2)
    np.testing.assert_array_equal(simulate_ar1(p, 0.0, 5, 7, seed).paths, simulate_ar1(p, 0.0, 5, 7, seed).paths)


# --- Vasicek ------------------------------------------------------------------


def test_vasicek_mapping_arithmetic():
    v = ar1_to_vasicek(0.01, 0.5, 0.1, delta=1.0)
    assert v.kappa == 0.5 and abs(v.theta - 0.02) < 1e-15


def test_vasicek_step_and_noise_free_decay():
    kappa = np.log(2.0)
    assert abs(vasicek_step(0.04, kappa, 0.02, 0.3, 1.0, 0.0) - 0.03) < 1e-15
    path = simulate_vasicek(VasicekParams(kappa, 0.02, 0.0, 1.0), 0.04, 20, 1, seed=0).paths[0, :, 0]
    np.testing.assert_allclose(path - 0.02, 0.02 * 0.5 ** np.arange(1, 21), atol=1e-16)


def test_vasicek_fit_recovers_long_run_level():
    true = VasicekParams(0.45, 0.02, 0.15)
    path = simulate_vasicek(true, 0.02, 251 * 30, 1, seed=11).paths[0, :, 0]
    fit = fit_vasicek(path)
    # sampling error of the long-run mean over 30 years of an OU path with these parameters
    se = true.sigma / (true.kappa * np.sqrt(30.0))
    assert abs(fit.theta - 0.02) < 3 * se


def test_vasicek_rejects_unit_root_and_explosive(rng):
    t = np.arange(2000.0)
    trend = 1e-4 * t**2 + 0.01 * rng.standard_normal(2000)
    explosive = 1.001 ** np.arange(2000) + 0.01 * rng.standard_normal(2000)
    for series in (trend, explosive):
        with pytest.raises(NonStationary):
            fit_vasicek(series)
    with pytest.raises(NonStationary):
        ar1_to_vasicek(0.0, 1.0, 0.1, 1 / 251)


def test_vasicek_one_step_reproduces_ar1_moments():
    x = _ar_path(0.002, 0.97, 0.01, 3000, 5)
    ar = fit_ar1(x)
    v = fit_vasicek(x, delta=1 / 251, mapping="exact")
    r = 0.05
    mean = vasicek_step(r, v.kappa, v.theta, v.sigma, v.delta, 0.0)
    sd = vasicek_step(r, v.kappa, v.theta, v.sigma, v.delta, 1.0) - mean
    assert abs(mean - (ar.phi0 + ar.phi1 * r)) < 1e-10
    assert abs(sd - ar.sigma) < 1e-10


# --- GARCH --------------------------------------------------------------------


@pytest.fixture(scope="module")
def garch_path():
    return simulate_garch_dgp(reference_garch_params(), 251 * 30, seed=1)[1].values[:, 0]


@pytest.fixture(scope="module")
def garch_fit(garch_path):
    return fit_garch11(garch_path)


def test_garch_recovers_table_parameters(garch_fit):
    assert abs(garch_fit.alpha - 0.1742) < 0.05
    assert abs(garch_fit.beta - 0.8158) < 0.05
    assert garch_fit.persistence <= MAX_PERSISTENCE
    assert abs(garch_fit.phi1 - 0.5) < 0.05


def test_garch_fit_beats_true_parameters(garch_path, garch_fit):
    true = Garch11Params(0.0, 0.5, 9e-6, 0.1742, 0.8158)
    assert garch_fit.loglik >= garch_loglik(true, garch_path) - 1e-6


def test_garch_terminal_state_matches_filter(garch_path, garch_fit):
    eps, s2 = filter_state(garch_fit, garch_path, s0=None)
    assert garch_fit.x_last == garch_path[-1]
    assert abs(garch_fit.eps_last - eps[-1]) < 1e-12


def test_garch_on_iid_noise():
    x = np.random.default_rng(8).normal(0, 0.01, 5000)
    fit = fit_garch11(x)
    assert fit.alpha < 0.03
    assert abs(fit.unconditional_variance / x.var() - 1) < 0.05


def test_garch_t_degrees_of_freedom():
    x = simulate_garch_dgp(reference_garch_params("t", 5.0), 251 * 30, seed=1)[1].values[:, 0]
    fit = fit_garch11(x, "t")
    assert 3.5 <= fit.nu <= 8


def test_garch_too_short():
    with pytest.raises(TooShort):
        fit_garch11(np.random.default_rng(0).normal(size=150))


def test_garch_simulation_moments():
    flat = Garch11Params(0.0, 0.2, 4e-4, 0.0, 0.0, x_last=0.01, eps_last=0.0, sigma2_last=4e-4)
    one = simulate_garch11(flat, 1, 100_000, seed=1).paths[:, 0, 0]
    assert abs(one.std() / 0.02 - 1) < 0.02
    p = Garch11Params(0.0, 0.3, 1e-5, 0.12, 0.85, x_last=0.02, eps_last=0.03, sigma2_last=5e-4)
    one = simulate_garch11(p, 1, 100_000, seed=2).paths[:, 0, 0]
    assert abs(one.std() / np.sqrt(p.next_variance) - 1) < 0.02


def test_garch_variance_converges_to_unconditional():
    p = Garch11Params(0.0, 0.0, 1e-5, 0.1, 0.8, eps_last=0.05, sigma2_last=2e-3)
    paths = simulate_garch11(p, 200, 20_000, seed=3).paths[:, :, 0]
    v = paths.var(axis=0)
    assert abs(v[-1] / p.unconditional_variance - 1) < 0.05
    assert abs(v[0] / p.next_variance - 1) < 0.05


def test_garch_t_simulation_is_seeded():
    p = Garch11Params(0.0, 0.1, 1e-5, 0.1, 0.85, dist="t", nu=6.0, sigma2_last=2e-4)
    a = simulate_garch11(p, 10, 50, seed=4).paths
    np.testing.assert_array_equal(a, simulate_garch11(p, 10, 50, seed=4).paths)


# --- Nelson-Siegel --------------------------------------------------------------


def test_loading_limits_and_shape():
    f0, f1, f2 = ns_loadings(np.array([1e-9, 1e4]), NS_LAMBDA)
    assert abs(f1[0] - 1) < 1e-8 and abs(f2[0]) < 1e-8
    assert f1[1] < 1e-3 and abs(f2[1]) < 1e-3
    np.testing.assert_array_equal(f0, 1.0)
    tau = np.linspace(0.01, 30, 3000)
    _, f1, f2 = ns_loadings(tau, NS_LAMBDA)
    assert np.all(np.diff(f1) < 0)
    peak = np.argmax(f2)
    assert np.all(np.diff(f2[: peak + 1]) > 0) and np.all(np.diff(f2[peak:]) < 0)


def test_curvature_peak_location():
    assert abs(curvature_peak(NS_LAMBDA) - 2.5) < 0.1


def test_fred_grid_rank():
    assert np.linalg.matrix_rank(ns_design(FRED_YEARS)) == 3
    with pytest.raises(RankDeficient):
        factors_from_curves(np.ones((4, 2)), np.array([1.0, 10.0]))


@given(st.integers(0, 2**31))
def test_noiseless_factor_round_trip(seed):
    betas = np.random.default_rng(seed).normal([5, -1, 1], 1, size=(20, 3))
    curves = betas @ ns_design(FRED_YEARS).T
    np.testing.assert_allclose(factors_from_curves(curves, FRED_YEARS), betas, atol=1e-10)


def test_flat_curve_is_level_only():
    b = factors_from_curves(np.full((1, 9), 5.0), FRED_YEARS)[0]
    np.testing.assert_allclose(b, [5.0, 0.0, 0.0], atol=1e-10)


@pytest.mark.parametrize("label,years", [("3m", 0.25), ("6MO", 0.5), ("DGS3MO", 0.25), ("DGS10", 10.0),
                                         ("10y", 10.0), ("1YR", 1.0)])
def test_parse_tenor(label, years):
    assert abs(parse_tenor(label) - years) < 1e-12


def _ns_panel(seed=0, n=1500):
    rng = np.random.default_rng(seed)
    b = np.empty((n, 3))
    b[0] = [4.0, -1.0, 0.5]
    for t in range(1, n):
        b[t] = b[t - 1] + 0.02 * (np.array([4.0, -1.0, 0.5]) - b[t - 1]) + rng.normal(0, [0.05, 0.06, 0.1])
    labels = ("DGS3MO", "DGS6MO", "DGS1", "DGS2", "DGS3", "DGS5", "DGS10", "DGS20", "DGS30")
    return make_panel(b @ ns_design(FRED_YEARS).T, labels), b


def test_fit_ns_factors_and_simulation():
    panel, b = _ns_panel()
    f = fit_ns_factors(panel)
    np.testing.assert_allclose(f.betas, b, atol=1e-10)
    cube = simulate_ns_vasicek(f, panel.tenors, 10, 4000, seed=1).paths
    assert cube.shape == (4000, 10, 9)
    day1 = cube[:, 0, :]
    c = np.corrcoef(day1.T)
    assert min(c[j, j + 1] for j in range(8)) > 0.9


def test_reconstruction_identity_and_zero_vol():
    panel, _ = _ns_panel(1)
    f = fit_ns_factors(panel)
    X = f.loadings
    z = np.random.default_rng(2).normal(size=(5, 6, 3))
    start = f.betas[-1]
    changes = ns_vasicek_paths(f.dynamics, start, X, z)
    # start curve plus cumulated changes equals the factor path mapped through the loadings
    b = start.copy()
    for k in range(6):
        b = np.array([vasicek_step(b[j], p.kappa, p.theta, p.sigma, p.delta, z[0, k, j])
                      for j, p in enumerate(f.dynamics)])
        level = start @ X.T + changes[0, : k + 1].sum(axis=0)
        np.testing.assert_allclose(level, b @ X.T, atol=1e-12)
    still = tuple(VasicekParams(p.kappa, p.theta, 0.0, p.delta) for p in f.dynamics)
    frozen = ns_vasicek_paths(still, start, X, z)
    np.testing.assert_allclose(frozen, np.broadcast_to(frozen[0], frozen.shape), atol=1e-15)
