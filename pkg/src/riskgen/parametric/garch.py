"""AR(1)+GARCH(1,1) with normal or standardized Student-t innovations.

Estimation is joint maximum likelihood: a coarse (alpha, beta) grid with variance
targeting picks the start, Nelder-Mead refines it in an unconstrained parametrisation
that keeps omega > 0, alpha, beta >= 0 and alpha + beta <= 0.999.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter
from scipy.special import expit, gammaln, logit

from ..dgp import standardized_t
from ..errors import BadParameter, OptimizerFailure, TooShort
from ..histsim import ScenarioCube
from .ar import ols_ar1

MIN_GARCH_LENGTH = 200
MAX_PERSISTENCE = 0.999
NU_LO, NU_HI = 2.5, 100.0


@dataclass(frozen=True)
class Garch11Params:
    phi0: float
    phi1: float
    omega: float
    alpha: float
    beta: float
    dist: str = "normal"
    nu: float = np.inf
    x_last: float = 0.0
    eps_last: float = 0.0
    sigma2_last: float = np.nan
    loglik: float = np.nan
    converged: bool = True

    @property
    def persistence(self) -> float:
        return self.alpha + self.beta

    @property
    def unconditional_variance(self) -> float:
        return self.omega / (1.0 - self.persistence)

    @property
    def next_variance(self) -> float:
        return self.omega + self.alpha * self.eps_last**2 + self.beta * self.sigma2_last

    def validate(self):
        if not self.omega > 0 or self.alpha < 0 or self.beta < 0 or not self.persistence < 1:
            raise BadParameter("GARCH needs omega > 0, alpha, beta >= 0, alpha + beta < 1")
        if self.dist == "t" and not self.nu > 2:
            raise BadParameter("nu must be > 2")


def variance_filter(eps, omega, alpha, beta, s0) -> np.ndarray:
    """``s2[0] = s0``, ``s2[t] = omega + alpha*eps[t-1]^2 + beta*s2[t-1]``."""
    u = omega + alpha * eps[:-1] ** 2
    rest = lfilter([1.0], [1.0, -beta], u, zi=np.array([beta * s0]))[0]
    return np.concatenate([[s0], rest])


def _nll(eps, s2, dist, nu):
    if dist == "normal":
        return 0.5 * np.sum(np.log(2.0 * np.pi) + np.log(s2) + eps**2 / s2)
    c = gammaln((nu + 1) / 2) - gammaln(nu / 2) - 0.5 * np.log(np.pi * (nu - 2))
    return -np.sum(c - 0.5 * np.log(s2) - (nu + 1) / 2 * np.log1p(eps**2 / (s2 * (nu - 2))))


def _residuals(x, phi0, phi1):
    return x[1:] - phi0 - phi1 * x[:-1]


def garch_loglik(params: Garch11Params, series, backcast=None) -> float:
    """Log-likelihood of the series under fixed parameters (same conditioning as the fit)."""
    x = np.asarray(series, dtype=float).ravel()
    eps = _residuals(x, params.phi0, params.phi1)
    s0 = np.mean(eps**2) if backcast is None else backcast
    s2 = variance_filter(eps, params.omega, params.alpha, params.beta, s0)
    return -float(_nll(eps, s2, params.dist, params.nu))


def _unpack(theta, dist):
    phi0, phi1, log_omega, b, c = theta[:5]
    s = MAX_PERSISTENCE * expit(b)
    alpha = s * expit(c)
    beta = s - alpha
    nu = NU_LO + (NU_HI - NU_LO) * expit(theta[5]) if dist == "t" else np.inf
    return phi0, phi1, np.exp(log_omega), alpha, beta, nu


def _pack(phi0, phi1, omega, alpha, beta, nu, dist):
    s = np.clip((alpha + beta) / MAX_PERSISTENCE, 1e-6, 1 - 1e-6)
    share = np.clip(alpha / max(alpha + beta, 1e-12), 1e-6, 1 - 1e-6)
    theta = [phi0, phi1, np.log(omega), logit(s), logit(share)]
    if dist == "t":
        theta.append(logit(np.clip((nu - NU_LO) / (NU_HI - NU_LO), 1e-6, 1 - 1e-6)))
    return np.array(theta, dtype=float)


def fit_garch11(returns, dist: str = "normal") -> Garch11Params:
    x = np.asarray(returns, dtype=float).ravel()
    if x.size < MIN_GARCH_LENGTH:
        raise TooShort(f"GARCH fit needs >= {MIN_GARCH_LENGTH} points, got {x.size}")
    if dist not in ("normal", "t"):
        raise ValueError(f"unknown innovation distribution {dist!r}")
    phi0_ols, phi1_ols, resid = ols_ar1(x)
    s0 = float(np.mean(resid**2))
    if not s0 > 0:
        raise OptimizerFailure("zero residual variance")

    def objective(theta):
        phi0, phi1, omega, alpha, beta, nu = _unpack(theta, dist)
        eps = _residuals(x, phi0, phi1)
        s2 = variance_filter(eps, omega, alpha, beta, s0)
        if not np.all(s2 > 0):
            return 1e300
        val = _nll(eps, s2, dist, nu)
        return val if np.isfinite(val) else 1e300

    best, best_val = None, np.inf
    nus = (5.0, 10.0, 30.0) if dist == "t" else (np.inf,)
    for pers in (0.8, 0.9, 0.95, 0.98, 0.99, 0.995):
        for alpha in (0.02, 0.05, 0.1, 0.15, 0.2, 0.3):
            if alpha >= pers:
                continue
            for nu in nus:
                theta = _pack(phi0_ols, phi1_ols, s0 * (1 - pers), alpha, pers - alpha, nu, dist)
                val = objective(theta)
                if val < best_val:
                    best, best_val = theta, val

    res = None
    for _ in range(3):
        res = minimize(
            objective, best, method="Nelder-Mead",
            options={"maxiter": 6000, "maxfev": 12000, "xatol": 1e-8, "fatol": 1e-10, "adaptive": True},
        )
        improved = res.fun < best_val - 1e-9
        if res.fun <= best_val:
            best, best_val = res.x, res.fun
        if not improved:
            break
    if not np.isfinite(best_val) or best_val >= 1e300:
        raise OptimizerFailure("GARCH likelihood is not finite at any trial point", best=best)

    phi0, phi1, omega, alpha, beta, nu = _unpack(best, dist)
    eps = _residuals(x, phi0, phi1)
    s2 = variance_filter(eps, omega, alpha, beta, s0)
    converged = bool(res.success)
    if not converged:
        warnings.warn(f"GARCH optimizer did not converge: {res.message}", RuntimeWarning, stacklevel=2)
    return Garch11Params(
        float(phi0), float(phi1), float(omega), float(alpha), float(beta), dist, float(nu),
        x_last=float(x[-1]), eps_last=float(eps[-1]), sigma2_last=float(s2[-1]),
        loglik=-float(best_val), converged=converged,
    )


def filter_state(params: Garch11Params, series, s0=None):
    """Run the variance recursion over ``series`` with fixed parameters.

    Returns ``(eps, s2)`` aligned with ``series[1:]``; ``s2[t]`` is the conditional
    variance of ``eps[t]``. The start defaults to the unconditional variance.
    """
    x = np.asarray(series, dtype=float).ravel()
    eps = _residuals(x, params.phi0, params.phi1)
    s0 = params.unconditional_variance if s0 is None else s0
    return eps, variance_filter(eps, params.omega, params.alpha, params.beta, s0)


def with_state(params: Garch11Params, x_last, eps_last, sigma2_last) -> Garch11Params:
    return replace(params, x_last=float(x_last), eps_last=float(eps_last), sigma2_last=float(sigma2_last))


def garch_paths(phi0, phi1, omega, alpha, beta, x_last, eps_last, s2_last, z) -> np.ndarray:
    """Forward recursion over the last axis of standardized innovations ``z``.

    Parameter/state arguments broadcast against ``z[..., 0]``.
    """
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    x, e2, s2 = x_last, np.square(eps_last), s2_last
    for k in range(z.shape[-1]):
        s2 = omega + alpha * e2 + beta * s2
        eps = np.sqrt(s2) * z[..., k]
        x = phi0 + phi1 * x + eps
        out[..., k] = x
        e2 = eps * eps
    return out


def draw_innovations(rng, shape, dist, nu) -> np.ndarray:
    z = rng.standard_normal(shape)
    if dist == "t":
        z = standardized_t(rng, nu, z[..., None])[..., 0] if np.ndim(nu) == 0 else standardized_t(rng, nu, z)
    return z


def simulate_garch11(params: Garch11Params, horizon: int, n_paths: int, seed) -> ScenarioCube:
    params.validate()
    rng = np.random.default_rng(seed)
    z = draw_innovations(rng, (n_paths, horizon), params.dist, params.nu)
    paths = garch_paths(
        params.phi0, params.phi1, params.omega, params.alpha, params.beta,
        params.x_last, params.eps_last, params.sigma2_last, z,
    )
    return ScenarioCube(paths[:, :, None])
