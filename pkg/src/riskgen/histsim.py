"""Plain and filtered historical simulation scenario engines."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import YEAR_DAYS, ReturnPanel
from .errors import InsufficientHistory, MisalignedVols

VOL_FLOOR = 1e-8


@dataclass(frozen=True)
class ScenarioCube:
    """Generated returns ``paths[n_paths, horizon, d]`` for one condition date."""

    paths: np.ndarray
    anchor_date: object = None
    horizon: int = None

    def __post_init__(self):
        paths = np.asarray(self.paths, dtype=float)
        if paths.ndim == 2:
            paths = paths[:, :, None]
        if paths.ndim != 3 or paths.shape[0] < 1:
            raise ValueError(f"scenario cube must be [n_paths, horizon, d], got {paths.shape}")
        object.__setattr__(self, "paths", paths)
        object.__setattr__(self, "horizon", paths.shape[1])

    @property
    def n_paths(self) -> int:
        return self.paths.shape[0]


@dataclass(frozen=True)
class VolSeries:
    """Per-date volatility ``values[t]`` (known at t-1) plus the one-step forecast past the end."""

    dates: np.ndarray
    values: np.ndarray
    next_value: np.ndarray

    def forecast_at(self, t0_index):
        """Volatility forecast for date t0+1 made at t0 (array input allowed)."""
        full = np.vstack([self.values, self.next_value[None, :]])
        return full[np.asarray(t0_index) + 1]


def _returns_array(returns):
    return returns.values if isinstance(returns, ReturnPanel) else np.atleast_2d(np.asarray(returns, float).T).T


def _check_history(t0, horizon, window, T):
    first = np.min(t0) - (window - 1) - (horizon - 1)
    if first < 0 or np.max(t0) >= T:
        raise InsufficientHistory(
            f"anchor {int(np.min(t0))} needs {window + horizon - 1} rows of history"
        )


def scenario_index(t0, horizon: int, window: int = YEAR_DAYS) -> np.ndarray:
    """Row indices ``t0 - i - k + 1`` for scenario i and day k; shape [..., window, horizon]."""
    i = np.arange(window)[:, None]
    k = np.arange(1, horizon + 1)[None, :]
    return np.asarray(t0)[..., None, None] - i - k + 1


def phs_paths(returns, t0_index: int, horizon: int, window: int = YEAR_DAYS) -> ScenarioCube:
    """Replay history backwards: scenario i on day t0+k takes the return of date t0-i-k+1."""
    x = _returns_array(returns)
    _check_history(t0_index, horizon, window, x.shape[0])
    anchor = returns.dates[t0_index] if isinstance(returns, ReturnPanel) else t0_index
    return ScenarioCube(x[scenario_index(t0_index, horizon, window)], anchor)


def phs_paths_many(x: np.ndarray, t0s, horizon: int, window: int = YEAR_DAYS) -> np.ndarray:
    """Vectorised PHS for several anchors: [n_dates, window, horizon, d]."""
    _check_history(t0s, horizon, window, x.shape[0])
    return x[scenario_index(np.asarray(t0s), horizon, window)]


def ewma_volatility(returns, decay: float = 0.94, burn_in: int = 30) -> VolSeries:
    """RiskMetrics recursion ``s2_t = decay*s2_{t-1} + (1-decay)*x_{t-1}^2``.

    Seeded with the mean square of the first ``burn_in`` returns.
    """
    if not 0 < decay < 1:
        raise ValueError("decay must lie in (0, 1)")
    x = _returns_array(returns)
    T = x.shape[0]
    if T < 2:
        raise ValueError("EWMA needs at least two rows")
    var = np.empty((T + 1, x.shape[1]))
    var[0] = np.mean(x[: min(burn_in, T)] ** 2, axis=0)
    sq = x * x
    for t in range(1, T + 1):
        var[t] = decay * var[t - 1] + (1.0 - decay) * sq[t - 1]
    vol = np.maximum(np.sqrt(var), VOL_FLOOR)
    dates = returns.dates if isinstance(returns, ReturnPanel) else np.arange(T)
    return VolSeries(dates, vol[:T], vol[T])


def devolatize(returns, vols: VolSeries) -> np.ndarray:
    x = _returns_array(returns)
    if vols.values.shape != x.shape:
        raise MisalignedVols(f"vols {vols.values.shape} vs returns {x.shape}")
    return x / vols.values


def fhs_paths(returns, vols: VolSeries, t0_index: int, horizon: int, window: int = YEAR_DAYS) -> ScenarioCube:
    """Devolatized history replayed backwards, rescaled by the forecast vol made at t0.

    The multi-day forecast is flat at the one-step EWMA forecast.
    """
    xhat = devolatize(returns, vols)
    _check_history(t0_index, horizon, window, xhat.shape[0])
    sig = vols.forecast_at(t0_index)
    anchor = returns.dates[t0_index] if isinstance(returns, ReturnPanel) else t0_index
    return ScenarioCube(xhat[scenario_index(t0_index, horizon, window)] * sig, anchor)


def fhs_paths_many(xhat: np.ndarray, vols: VolSeries, t0s, horizon: int, window: int = YEAR_DAYS) -> np.ndarray:
    t0s = np.asarray(t0s)
    _check_history(t0s, horizon, window, xhat.shape[0])
    sig = vols.forecast_at(t0s)[:, None, None, :]
    return xhat[scenario_index(t0s, horizon, window)] * sig
