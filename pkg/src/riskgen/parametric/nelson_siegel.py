"""Three-factor Nelson-Siegel curve with independent Vasicek dynamics per factor."""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from ..data import YEAR_DAYS, RatePanel
from ..errors import RankDeficient
from ..histsim import ScenarioCube
from .ar import ols_ar1
from .vasicek import fit_vasicek, vasicek_step

NS_LAMBDA = 1.368

_TENOR_RE = re.compile(r"^(?:DGS)?\s*(\d+(?:\.\d+)?)\s*(MO|M|Y|YR|W|D)?$", re.IGNORECASE)
_UNIT_YEARS = {"d": 1.0 / YEAR_DAYS, "w": 5.0 / YEAR_DAYS, "m": 1.0 / 12, "mo": 1.0 / 12, "y": 1.0, "yr": 1.0}


def parse_tenor(label) -> float:
    """Tenor label to years: ``3m``, ``6mo``, ``10y``, FRED-style ``DGS3MO`` / ``DGS10``."""
    if isinstance(label, (int, float, np.floating)):
        return float(label)
    m = _TENOR_RE.match(str(label).strip())
    if not m:
        raise ValueError(f"cannot read a maturity from tenor label {label!r}")
    unit = (m.group(2) or "y").lower()
    return float(m.group(1)) * _UNIT_YEARS[unit]


def ns_loadings(tau, lam: float = NS_LAMBDA):
    """Level, slope and curvature loadings ``(f0, f1, f2)`` at maturities ``tau`` (years)."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0) or not lam > 0:
        raise ValueError("need tau >= 0 and lambda > 0")
    u = tau / lam
    small = u < 1e-6
    safe = np.where(small, 1.0, u)
    # -expm1(-u)/u keeps precision near zero; below 1e-6 the series is used directly
    f1 = np.where(small, 1.0 - u / 2.0 + u * u / 6.0, -np.expm1(-safe) / safe)
    f2 = np.where(small, u / 2.0 - u * u / 3.0, f1 - np.exp(-safe))
    return np.ones_like(tau), f1, f2


def ns_design(tenors_years, lam: float = NS_LAMBDA) -> np.ndarray:
    return np.column_stack(ns_loadings(tenors_years, lam))


def curvature_peak(lam: float = NS_LAMBDA) -> float:
    """Maturity where the curvature loading is maximal (solved numerically)."""
    from scipy.optimize import minimize_scalar

    res = minimize_scalar(lambda t: -ns_loadings(t, lam)[2], bounds=(1e-3, 50 * lam), method="bounded",
                          options={"xatol": 1e-10})
    return float(res.x)


@dataclass(frozen=True)
class NsFactors:
    lam: float
    tenors: tuple
    tenors_years: np.ndarray
    betas: np.ndarray
    dynamics: tuple
    resid_corr: np.ndarray

    @property
    def loadings(self) -> np.ndarray:
        return ns_design(self.tenors_years, self.lam)

    def curve(self, betas=None) -> np.ndarray:
        b = self.betas if betas is None else np.asarray(betas, float)
        return b @ self.loadings.T


def factors_from_curves(values, tenors_years, lam: float = NS_LAMBDA) -> np.ndarray:
    """Per-date OLS of curves [T x d] on the loadings; returns betas [T x 3]."""
    X = ns_design(tenors_years, lam)
    if X.shape[0] < 3 or np.linalg.matrix_rank(X) < 3:
        raise RankDeficient(f"loading matrix for {X.shape[0]} tenors has rank < 3")
    coef, *_ = np.linalg.lstsq(X, np.asarray(values, float).T, rcond=None)
    return coef.T


def fit_ns_factors(panel: RatePanel, lam: float = NS_LAMBDA, delta: float = 1.0 / YEAR_DAYS) -> NsFactors:
    years = np.array([parse_tenor(t) for t in panel.tenors])
    betas = factors_from_curves(panel.values, years, lam)
    dyn, resid = [], []
    for j in range(3):
        dyn.append(fit_vasicek(betas[:, j], delta))
        resid.append(ols_ar1(betas[:, j])[2])
    corr = np.corrcoef(np.array(resid))
    return NsFactors(lam, tuple(panel.tenors), years, betas, tuple(dyn), corr)


def _chol(corr):
    c = np.asarray(corr, float)
    for jitter in (0.0, 1e-12, 1e-9, 1e-6):
        try:
            return np.linalg.cholesky(c + jitter * np.eye(c.shape[0]))
        except np.linalg.LinAlgError:
            continue
    return np.eye(c.shape[0])


def ns_vasicek_paths(dynamics, start_betas, loadings, z) -> np.ndarray:
    """Factor paths from ``start_betas[..., 3]`` with correlated shocks ``z[..., horizon, 3]``.

    Returns curve changes ``[..., horizon, d]``; day one is measured against the fitted
    curve at the start.
    """
    start = np.asarray(start_betas, float)
    b = np.broadcast_to(start, z.shape[:-2] + (3,)).copy()
    out = np.empty(z.shape[:-1] + (3,))
    for k in range(z.shape[-2]):
        for j, p in enumerate(dynamics):
            b[..., j] = vasicek_step(b[..., j], p.kappa, p.theta, p.sigma, p.delta, z[..., k, j])
        out[..., k, :] = b
    levels = out @ loadings.T
    prev = np.concatenate([np.broadcast_to((start @ loadings.T)[..., None, :], levels[..., :1, :].shape),
                           levels[..., :-1, :]], axis=-2)
    return levels - prev


def simulate_ns_vasicek(factors: NsFactors, tenors, horizon: int, n_paths: int, seed,
                        start_betas=None) -> ScenarioCube:
    """Curve-change scenarios; factors start from the last fitted date unless given."""
    years = np.array([parse_tenor(t) for t in tenors])
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n_paths, horizon, 3)) @ _chol(factors.resid_corr).T
    start = factors.betas[-1] if start_betas is None else start_betas
    return ScenarioCube(ns_vasicek_paths(factors.dynamics, start, ns_design(years, factors.lam), z))

