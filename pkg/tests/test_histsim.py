import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from riskgen.dgp import simulate_garch_dgp, reference_garch_params
from riskgen.errors import InsufficientHistory, MisalignedVols
from riskgen.histsim import (VolSeries, devolatize, ewma_volatility, fhs_paths, fhs_paths_many, phs_paths,
                             phs_paths_many)


def _labelled(T, d=2):
    """Returns whose value encodes (row, column) so replayed entries reveal their source."""
    rows = np.arange(T, dtype=float)[:, None]
    return rows * 10 + np.arange(d)[None, :]


def test_phs_table_cells():
    x = _labelled(400)
    t0 = 300
    cube = phs_paths(x, t0, horizon=2).paths
    assert cube.shape == (251, 2, 2)
    np.testing.assert_array_equal(cube[0, 1], x[t0 - 1])  # scenario 1, day t0+2
    np.testing.assert_array_equal(cube[2, 0], x[t0 - 2])  # scenario 3, day t0+1


def test_phs_one_day_is_reversed_history(rng):
    x = rng.normal(size=(600, 3))
    cube = phs_paths(x, 400, horizon=1).paths[:, 0, :]
    np.testing.assert_array_equal(cube, x[150:401][::-1])


def test_phs_needs_history():
    x = _labelled(300)
    with pytest.raises(InsufficientHistory):
        phs_paths(x, 250, horizon=2)
    phs_paths(x, 251, horizon=2)


@given(st.integers(0, 10_000), st.integers(1, 12))
def test_phs_entries_are_same_day_rows(seed, horizon):
    x = np.random.default_rng(seed).normal(size=(500, 3))
    t0 = 250 + horizon + seed % 200
    cube = phs_paths(x, t0, horizon).paths
    flat = cube.reshape(-1, 3)
    # every scenario row is a whole historical row: tenors move together
    lookup = {tuple(r) for r in x}
    assert all(tuple(r) in lookup for r in flat)


def test_vectorised_matches_single(rng):
    x = rng.normal(size=(700, 2))
    t0s = np.array([300, 450, 699])
    many = phs_paths_many(x, t0s, 10)
    for a, t0 in enumerate(t0s):
        np.testing.assert_array_equal(many[a], phs_paths(x, t0, 10).paths)
    vols = ewma_volatility(x)
    xhat = devolatize(x, vols)
    fmany = fhs_paths_many(xhat, vols, t0s, 10)
    for a, t0 in enumerate(t0s):
        np.testing.assert_allclose(fmany[a], fhs_paths(x, vols, t0, 10).paths, rtol=0, atol=0)


def test_ewma_fixed_point_and_frozen_limit():
    c = 0.013
    x = np.tile([c, -c], 200)[:, None]
    v = ewma_volatility(x).values[:, 0]
    assert abs(v[-1] - c) < 1e-14
    rng = np.random.default_rng(1)
    y = rng.normal(size=(300, 1))
    seed_vol = np.sqrt(np.mean(y[:30] ** 2))
    frozen = ewma_volatility(y, decay=1 - 1e-12).values[:, 0]
    assert np.max(np.abs(frozen - seed_vol)) < 1e-9


def test_ewma_tracks_garch_vol():
    _, rets, vol = simulate_garch_dgp(reference_garch_params(), 251 * 30, seed=1, return_vol=True)
    est = ewma_volatility(rets).values
    for j in range(2):
        assert np.corrcoef(est[:, j], vol[:, j])[0, 1] > 0.9


def test_devolatized_garch_returns_are_near_unit():
    _, rets = simulate_garch_dgp(reference_garch_params(), 251 * 30, seed=2)
    xhat = devolatize(rets, ewma_volatility(rets))
    sd = xhat[30:].std(axis=0, ddof=1)
    assert np.all((sd > 0.9) & (sd < 1.1))


def test_fhs_revol_and_layout():
    T = 400
    xhat_target = _labelled(T, 1)
    vols = VolSeries(np.arange(T), np.ones((T, 1)), np.array([0.02]))
    cube = fhs_paths(xhat_target, vols, T - 1, horizon=3).paths
    # scenario 2, day t0+2: devol return of t0-2 times the flat forecast vol
    assert cube[1, 1, 0] == xhat_target[T - 3, 0] * 0.02
    one = VolSeries(np.arange(T), np.ones((T, 1)), np.array([1.0]))
    unit = fhs_paths(np.ones((T, 1)), one, T - 1, horizon=1).paths
    np.testing.assert_array_equal(unit, 1.0)


def test_fhs_with_unit_vols_equals_phs(rng):
    x = rng.normal(size=(500, 2))
    ones = VolSeries(np.arange(500), np.ones((500, 2)), np.ones(2))
    np.testing.assert_array_equal(fhs_paths(x, ones, 400, 5).paths, phs_paths(x, 400, 5).paths)


def test_fhs_misaligned_vols(rng):
    x = rng.normal(size=(500, 2))
    vols = ewma_volatility(x[:-1])
    with pytest.raises(MisalignedVols):
        fhs_paths(x, vols, 400, 2)
