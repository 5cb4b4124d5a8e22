"""Ground-truth simulators: bivariate AR(1)+GARCH(1,1) returns and correlated CIR levels."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import YEAR_DAYS, RatePanel, ReturnPanel
from .errors import BadParameter


def business_dates(n: int, start: str = "1990-01-02") -> np.ndarray:
    return np.busday_offset(np.datetime64(start, "D"), np.arange(n), roll="forward")


def correlate_noise(z, rho: float) -> np.ndarray:
    """Gaussian copula for two columns: ``z2 <- rho*z1 + sqrt(1-rho^2)*z2``."""
    if not abs(rho) <= 1:
        raise BadParameter(f"|rho| must be <= 1, got {rho}")
    z = np.array(z, dtype=float, copy=True)
    if z.shape[-1] != 2:
        raise ValueError("correlate_noise expects two columns")
    z[..., 1] = rho * z[..., 0] + np.sqrt(1.0 - rho * rho) * z[..., 1]
    return z


def standardized_t(rng, nu, normals) -> np.ndarray:
    """Unit-variance Student-t draws built on (possibly correlated) normals.

    Each column gets its own chi-square mixing variable, so cross-column correlation of
    the normals carries over with a small attenuation.
    """
    normals = np.asarray(normals, dtype=float)
    nu = np.broadcast_to(np.asarray(nu, dtype=float), normals.shape[-1:])
    if np.any(nu <= 2):
        raise BadParameter("t innovations need nu > 2 for a finite variance")
    w = rng.chisquare(nu, size=normals.shape)
    return normals / np.sqrt(w / nu) * np.sqrt((nu - 2.0) / nu)


@dataclass(frozen=True)
class GarchSeriesParams:
    phi1: float
    omega: float
    alpha: float
    beta: float

    @property
    def unconditional_variance(self) -> float:
        return self.omega / (1.0 - self.alpha - self.beta)

    def validate(self):
        if not self.omega > 0:
            raise BadParameter("omega must be > 0")
        if self.alpha < 0 or self.beta < 0:
            raise BadParameter("alpha and beta must be >= 0")
        if not self.alpha + self.beta < 1:
            raise BadParameter("alpha + beta must be < 1")


@dataclass(frozen=True)
class GarchDgpParams:
    series: tuple
    rho: float = 0.7
    innovation: str = "normal"
    nu: float = 5.0
    r0: float = 2.0
    labels: tuple = ("3m", "1y")

    def validate(self):
        if len(self.series) != 2:
            raise BadParameter("the GARCH DGP is bivariate")
        for s in self.series:
            s.validate()
        if not abs(self.rho) <= 1:
            raise BadParameter("|rho| must be <= 1")
        if self.innovation not in ("normal", "t"):
            raise BadParameter(f"unknown innovation {self.innovation!r}")
        if self.innovation == "t" and not self.nu > 2:
            raise BadParameter("nu must be > 2")


GARCH_3M = GarchSeriesParams(phi1=0.5, omega=0.000009, alpha=0.1742, beta=0.8158)
GARCH_1Y = GarchSeriesParams(phi1=-0.5, omega=0.000012, alpha=0.0724, beta=0.9176)


def reference_garch_params(innovation: str = "normal", nu: float = 5.0) -> GarchDgpParams:
    return GarchDgpParams((GARCH_3M, GARCH_1Y), rho=0.70, innovation=innovation, nu=nu)


def simulate_garch_dgp(params: GarchDgpParams, n_days: int, seed: int, return_vol: bool = False):
    """Simulate ``x_{t+1} = phi1 x_t + sigma_{t+1} z_{t+1}`` per series; levels are cumulative sums.

    The variance recursion starts at the unconditional variance. Returns
    ``(RatePanel, ReturnPanel)`` and, with ``return_vol``, the true conditional vol [n_days x 2].
    """
    params.validate()
    if n_days < 1:
        raise BadParameter("n_days must be >= 1")
    rng = np.random.default_rng(seed)
    z = correlate_noise(rng.standard_normal((n_days, 2)), params.rho)
    if params.innovation == "t":
        z = standardized_t(rng, params.nu, z)

    phi = np.array([s.phi1 for s in params.series])
    omega = np.array([s.omega for s in params.series])
    alpha = np.array([s.alpha for s in params.series])
    beta = np.array([s.beta for s in params.series])

    x = np.empty((n_days, 2))
    vol = np.empty((n_days, 2))
    var = omega / (1.0 - alpha - beta)
    eps_prev2 = var.copy()
    x_prev = np.zeros(2)
    for t in range(n_days):
        var = omega + alpha * eps_prev2 + beta * var
        sig = np.sqrt(var)
        eps = sig * z[t]
        x[t] = phi * x_prev + eps
        vol[t] = sig
        eps_prev2 = eps * eps
        x_prev = x[t]

    dates = business_dates(n_days + 1)
    levels = params.r0 + np.vstack([np.zeros((1, 2)), np.cumsum(x, axis=0)])
    panel = RatePanel(dates, params.labels, levels)
    rets = ReturnPanel(dates[1:], params.labels, x)
    if return_vol:
        return panel, rets, vol
    return panel, rets


def true_garch_scenarios(params: GarchDgpParams, returns, vol, horizon: int = 10):
    """Oracle forecaster: the generating process itself, started from its true state at each anchor.

    ``returns`` and ``vol`` are the [n_days x 2] outputs of ``simulate_garch_dgp``. The
    result follows the backtest scenario contract ``(t0s, n_paths, seed) -> [n, n_paths, H, 2]``.
    """
    params.validate()
    x = np.asarray(getattr(returns, "values", returns), dtype=float)
    vol = np.asarray(vol, dtype=float)
    phi = np.array([s.phi1 for s in params.series])
    omega = np.array([s.omega for s in params.series])
    alpha = np.array([s.alpha for s in params.series])
    beta = np.array([s.beta for s in params.series])
    x_prev = np.vstack([np.zeros((1, 2)), x[:-1]])
    eps = x - phi * x_prev

    def scenarios(t0s, n_paths, seed):
        t0s = np.asarray(t0s, dtype=int)
        rng = np.random.default_rng(seed)
        z = correlate_noise(rng.standard_normal((t0s.size, n_paths, horizon, 2)), params.rho)
        if params.innovation == "t":
            z = standardized_t(rng, params.nu, z)
        out = np.empty_like(z)
        xl = np.broadcast_to(x[t0s][:, None, :], (t0s.size, n_paths, 2)).copy()
        e2 = np.broadcast_to(eps[t0s][:, None, :] ** 2, xl.shape).copy()
        s2 = np.broadcast_to(vol[t0s][:, None, :] ** 2, xl.shape).copy()
        for k in range(horizon):
            s2 = omega + alpha * e2 + beta * s2
            e = np.sqrt(s2) * z[:, :, k, :]
            xl = phi * xl + e
            out[:, :, k, :] = xl
            e2 = e * e
        return out

    return scenarios


@dataclass(frozen=True)
class CirParams:
    kappa: float
    theta: float
    sigma: float
    r0: float
    delta: float = 1.0 / YEAR_DAYS

    def validate(self):
        if not (self.kappa > 0 and self.theta > 0 and self.r0 > 0 and self.delta > 0):
            raise BadParameter("CIR needs kappa, theta, r0, delta > 0")
        if self.sigma < 0:
            raise BadParameter("CIR sigma must be >= 0")


CIR_1 = CirParams(kappa=0.45, theta=0.02, sigma=0.15, r0=0.02)
CIR_2 = CirParams(kappa=0.20, theta=0.03, sigma=0.10, r0=0.03)


def simulate_cir_euler(params, rho: float, n_days: int, seed: int, labels=("r1", "r2"), scale: float = 1.0):
    """Full-truncation Euler scheme for a pair of correlated CIR processes.

    The auxiliary state may dip below zero; drift and diffusion see its positive part,
    and the emitted levels are that positive part (times ``scale``).
    """
    params = tuple(params)
    for p in params:
        p.validate()
    if len(params) != 2:
        raise BadParameter("simulate_cir_euler expects a parameter pair")
    rng = np.random.default_rng(seed)
    z = correlate_noise(rng.standard_normal((n_days, 2)), rho)
    kappa = np.array([p.kappa for p in params])
    theta = np.array([p.theta for p in params])
    sigma = np.array([p.sigma for p in params])
    delta = np.array([p.delta for p in params])
    r = np.array([p.r0 for p in params], dtype=float)
    out = np.empty((n_days + 1, 2))
    out[0] = r
    sq = np.sqrt(delta)
    for t in range(n_days):
        rp = np.maximum(r, 0.0)
        r = r + kappa * (theta - rp) * delta + sigma * np.sqrt(rp) * sq * z[t]
        out[t + 1] = np.maximum(r, 0.0)
    return RatePanel(business_dates(n_days + 1), labels, out * scale)
