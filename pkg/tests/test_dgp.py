import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from riskgen.dgp import (CIR_1, CIR_2, GARCH_3M, CirParams, GarchDgpParams, GarchSeriesParams, correlate_noise,
                         simulate_cir_euler, simulate_garch_dgp, reference_garch_params)
from riskgen.errors import BadParameter

N30 = 251 * 30


def test_copula_edge_cases(rng):
    z = rng.normal(size=(100, 2))
    np.testing.assert_array_equal(correlate_noise(z, 0.0), z)
    one = correlate_noise(z, 1.0)
    np.testing.assert_allclose(one[:, 1], one[:, 0])
    with pytest.raises(BadParameter):
        correlate_noise(z, 1.5)


def test_copula_correlation_large_sample(rng):
    z = correlate_noise(rng.normal(size=(1_000_000, 2)), 0.7)
    assert abs(np.corrcoef(z.T)[0, 1] - 0.7) < 0.003


def test_reference_parameter_identities():
    assert abs(GARCH_3M.alpha + GARCH_3M.beta - 0.99) < 1e-12
    assert abs(GARCH_3M.unconditional_variance - 9.0e-4) < 1e-12
    assert abs(np.sqrt(GARCH_3M.unconditional_variance) - 0.030) < 1e-12


def test_garch_path_features():
    panel, rets = simulate_garch_dgp(reference_garch_params(), N30, seed=1)
    x = rets.values[:, 0]
    assert abs(np.corrcoef(x[1:], x[:-1])[0, 1] - 0.5) < 0.03
    x2 = x * x
    assert np.corrcoef(x2[1:], x2[:-1])[0, 1] > 0.05
    np.testing.assert_allclose(np.diff(panel.values, axis=0), rets.values, atol=1e-12)
    assert panel.tenors == ("3m", "1y")


def test_garch_t_innovations_standardized():
    _, _, vol = simulate_garch_dgp(reference_garch_params("t", 5.0), 50_000, seed=3, return_vol=True)
    _, rets = simulate_garch_dgp(reference_garch_params("t", 5.0), 50_000, seed=3)
    x = rets.values
    z = (x[1:] - np.array([0.5, -0.5]) * x[:-1]) / vol[1:]
    assert abs(z.var(axis=0) - 1).max() < 0.06


def test_garch_degenerates_to_constant_vol_ar1():
    flat = GarchSeriesParams(phi1=0.3, omega=4e-4, alpha=0.0, beta=0.0)
    params = GarchDgpParams((flat, flat), rho=0.0)
    _, rets, vol = simulate_garch_dgp(params, 20_000, seed=5, return_vol=True)
    np.testing.assert_allclose(vol, 0.02)
    x = rets.values[:, 0]
    resid = x[1:] - 0.3 * x[:-1]
    assert abs(resid.std() - 0.02) < 0.02 * 3 / np.sqrt(2 * resid.size)


@given(st.integers(0, 2**31))
def test_same_seed_same_path(seed):
    a = simulate_garch_dgp(reference_garch_params(), 300, seed)[1].values
    b = simulate_garch_dgp(reference_garch_params(), 300, seed)[1].values
    np.testing.assert_array_equal(a, b)


def test_invalid_garch_params():
    bad = GarchSeriesParams(0.1, 1e-5, 0.5, 0.6)
    with pytest.raises(BadParameter):
        simulate_garch_dgp(GarchDgpParams((bad, bad)), 10, 0)


def test_cir_noise_free_mean_reversion():
    p = CirParams(kappa=0.45, theta=0.02, sigma=0.0, r0=0.08)
    q = CirParams(kappa=0.45, theta=0.02, sigma=0.0, r0=0.001)
    lv = simulate_cir_euler((p, q), 0.0, 20_000, seed=0).values
    assert np.all(np.diff(lv[:, 0]) <= 0) and np.all(np.diff(lv[:, 1]) >= 0)
    assert np.allclose(lv[-1], 0.02, atol=1e-4)


def test_cir_long_run_mean_and_positivity():
    lv = simulate_cir_euler((CIR_1, CIR_2), 0.6, 1_000_000, seed=2).values
    assert lv.min() >= 0
    r = lv[:, 0]
    # stationary stdev of CIR is sigma*sqrt(theta/(2 kappa)); autocorrelation inflates the standard error
    kappa, delta = CIR_1.kappa, CIR_1.delta
    sd = CIR_1.sigma * np.sqrt(CIR_1.theta / (2 * kappa))
    n_eff = r.size * (1 - np.exp(-kappa * delta)) / (1 + np.exp(-kappa * delta))
    assert abs(r.mean() - 0.02) < 3 * sd / np.sqrt(n_eff)


def test_cir_driving_noise_correlation():
    lv = simulate_cir_euler((CIR_1, CIR_2), 0.6, 1_000_000, seed=4).values
    ok = np.all(lv[:-1] > 1e-4, axis=1)
    prev, step = lv[:-1][ok], np.diff(lv, axis=0)[ok]
    drift = np.array([CIR_1.kappa, CIR_2.kappa]) * (np.array([CIR_1.theta, CIR_2.theta]) - prev) / 251
    shocks = (step - drift) / np.sqrt(prev)
    assert abs(np.corrcoef(shocks.T)[0, 1] - 0.6) < 0.02
