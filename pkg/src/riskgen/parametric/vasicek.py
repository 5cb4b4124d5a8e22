"""Vasicek short-rate model: AR(1)-based calibration and exact-discretisation simulation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import YEAR_DAYS
from ..errors import NonStationary
from ..histsim import ScenarioCube
from .ar import fit_ar1

UNIT_ROOT_TOL = 1e-10


@dataclass(frozen=True)
class VasicekParams:
    kappa: float
    theta: float
    sigma: float
    delta: float = 1.0 / YEAR_DAYS

    @property
    def stationary_variance(self) -> float:
        return self.sigma**2 / (2.0 * self.kappa)


def ar1_to_vasicek(phi0, phi1, sigma_eps, delta, mapping="euler") -> VasicekParams:
    """Map AR(1) coefficients on levels to Vasicek parameters.

    ``euler``: kappa*delta = 1-phi1, sigma*sqrt(delta) = sigma_eps.
    ``exact``: phi1 = exp(-kappa*delta) and the exact one-step variance, so that
    simulating one step reproduces the AR(1) conditional moments.
    """
    if phi1 >= 1.0 - UNIT_ROOT_TOL:
        raise NonStationary(f"phi1 = {phi1:.6f} >= 1: unit root or explosive, no mean reversion")
    theta = phi0 / (1.0 - phi1)
    if mapping == "euler":
        return VasicekParams((1.0 - phi1) / delta, theta, sigma_eps / np.sqrt(delta), delta)
    if mapping == "exact":
        if phi1 <= 0:
            raise NonStationary("exact mapping needs 0 < phi1 < 1")
        kappa = -np.log(phi1) / delta
        sigma = sigma_eps * np.sqrt(2.0 * kappa / (1.0 - phi1**2))
        return VasicekParams(kappa, theta, sigma, delta)
    raise ValueError(f"unknown mapping {mapping!r}")


def fit_vasicek(levels, delta: float = 1.0 / YEAR_DAYS, mapping: str = "euler") -> VasicekParams:
    ar = fit_ar1(levels)
    return ar1_to_vasicek(ar.phi0, ar.phi1, ar.sigma, delta, mapping)


def vasicek_step(r, kappa, theta, sigma, delta, z):
    a = np.exp(-kappa * delta)
    sd = sigma * np.sqrt(-np.expm1(-2.0 * kappa * delta) / (2.0 * kappa))
    return r * a + theta * (1.0 - a) + sd * z


def simulate_vasicek(params: VasicekParams, r0: float, horizon: int, n_paths: int, seed) -> ScenarioCube:
    """Level paths from the exact Gaussian transition, [n_paths, horizon, 1]."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n_paths, horizon))
    out = np.empty((n_paths, horizon))
    r = np.full(n_paths, float(r0))
    for k in range(horizon):
        r = vasicek_step(r, params.kappa, params.theta, params.sigma, params.delta, z[:, k])
        out[:, k] = r
    return ScenarioCube(out[:, :, None])
