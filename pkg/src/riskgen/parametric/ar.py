"""AR(1) calibration by OLS and Monte-Carlo simulation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateSeries, TooShort
from ..histsim import ScenarioCube

MIN_AR_LENGTH = 30


@dataclass(frozen=True)
class Ar1Params:
    phi0: float
    phi1: float
    sigma: float
    n_obs: int = 0

    @property
    def stationary_mean(self) -> float:
        return self.phi0 / (1.0 - self.phi1)


def ols_ar1(x: np.ndarray):
    """OLS of x_t on (1, x_{t-1}). Returns (phi0, phi1, residuals)."""
    y, lag = x[1:], x[:-1]
    lag_c = lag - lag.mean()
    sxx = lag_c @ lag_c
    if not sxx > 0:
        raise DegenerateSeries("lagged series has zero variance")
    phi1 = (lag_c @ (y - y.mean())) / sxx
    phi0 = y.mean() - phi1 * lag.mean()
    return phi0, phi1, y - phi0 - phi1 * lag


def fit_ar1(series) -> Ar1Params:
    x = np.asarray(series, dtype=float).ravel()
    if x.size < MIN_AR_LENGTH:
        raise TooShort(f"AR(1) fit needs >= {MIN_AR_LENGTH} points, got {x.size}")
    if np.ptp(x) == 0:
        raise DegenerateSeries("constant series")
    phi0, phi1, resid = ols_ar1(x)
    n = resid.size
    sigma = float(np.sqrt(resid @ resid / (n - 2)))
    if not sigma > 0:
        raise DegenerateSeries("zero residual variance")
    return Ar1Params(float(phi0), float(phi1), sigma, n)


def simulate_ar1(params: Ar1Params, x0: float, horizon: int, n_paths: int, seed) -> ScenarioCube:
    """Paths of ``x_{t+1} = phi0 + phi1 x_t + sigma z``, single tenor: [n_paths, horizon, 1]."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n_paths, horizon))
    out = np.empty((n_paths, horizon))
    prev = np.full(n_paths, float(x0))
    for k in range(horizon):
        prev = params.phi0 + params.phi1 * prev + params.sigma * z[:, k]
        out[:, k] = prev
    return ScenarioCube(out[:, :, None])
