"""Similarity metrics between real and synthetic return windows."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import ndtr

from .errors import DegenerateColumn, DegeneratePairs, EmptySample, LengthMismatch, RankDeficient, TooFewPairs

KS_TERMS = 100
DY_CELL = 5


# ---------------------------------------------------------------------------
# window moments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentSample:
    """Per-window statistics along the q axis, arrays [S x d]."""

    mean: np.ndarray
    stdev: np.ndarray
    skew: np.ndarray
    kurtosis: np.ndarray

    def get(self, statistic: str) -> np.ndarray:
        return getattr(self, statistic)


def moments(windows) -> MomentSample:
    w = np.asarray(windows, dtype=float)
    if w.ndim == 2:
        w = w[:, :, None]
    mu = w.mean(axis=1)
    sd = w.std(axis=1, ddof=1) if w.shape[1] > 1 else np.zeros_like(mu)
    c = w - mu[:, None, :]
    m2 = np.mean(c**2, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        skew = np.where(m2 > 0, np.mean(c**3, axis=1) / m2**1.5, 0.0)
        kurt = np.where(m2 > 0, np.mean(c**4, axis=1) / m2**2 - 3.0, 0.0)
    return MomentSample(mu, sd, skew, kurt)


def window_moments(real_targets, synth_windows):
    """Moment samples for the real test targets and one synthetic window per test date."""
    real_targets = np.asarray(real_targets, float)
    synth_windows = np.asarray(synth_windows, float)
    if real_targets.shape != synth_windows.shape:
        raise LengthMismatch(f"real {real_targets.shape} vs synthetic {synth_windows.shape}")
    return moments(real_targets), moments(synth_windows)


# ---------------------------------------------------------------------------
# one-dimensional distances
# ---------------------------------------------------------------------------


def _sample(x, name="sample") -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        raise EmptySample(f"{name} is empty")
    return x


def _cdf_gaps(a, b):
    """Sorted merged support and both empirical CDFs evaluated on it (right-continuous)."""
    sa, sb = np.sort(a), np.sort(b)
    grid = np.concatenate([sa, sb])
    grid.sort()
    fa = np.searchsorted(sa, grid, side="right") / sa.size
    fb = np.searchsorted(sb, grid, side="right") / sb.size
    return grid, fa, fb


def emd_1d(a, b) -> float:
    """Wasserstein-1 distance as the exact integral of |F_a - F_b|."""
    a, b = _sample(a, "a"), _sample(b, "b")
    grid, fa, fb = _cdf_gaps(a, b)
    return float(np.sum(np.abs(fa[:-1] - fb[:-1]) * np.diff(grid)))


def dy_metric(real, synth, cell_size: int = DY_CELL) -> float:
    """Sum of absolute log-probability gaps over quantile cells of the real sample.

    Cells hold ``cell_size`` real points each (the last absorbs the remainder); both
    cell probabilities get ``1/(10 max(n_r, n_g))`` added before the logs.
    """
    r, g = _sample(real, "real"), _sample(synth, "synth")
    if r.size < 2 * cell_size:
        raise EmptySample(f"DY needs at least {2 * cell_size} real points, got {r.size}")
    sr = np.sort(r)
    n_cells = r.size // cell_size
    edges = sr[cell_size * np.arange(1, n_cells)]
    pr = np.bincount(np.searchsorted(edges, r, side="right"), minlength=n_cells) / r.size
    pg = np.bincount(np.searchsorted(edges, g, side="right"), minlength=n_cells) / g.size
    eps = 1.0 / (10.0 * max(r.size, g.size))
    return float(np.sum(np.abs(np.log(pr + eps) - np.log(pg + eps))))


def kolmogorov_sf(lam) -> np.ndarray:
    """Survival function of the limiting Kolmogorov distribution, P(K > lam).

    Uses the alternating series for lam >= 1.18 and the theta-function form below it;
    each truncated at ``KS_TERMS`` terms.
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    out = np.ones_like(lam)
    j = np.arange(1, KS_TERMS + 1)[:, None]
    big = lam >= 1.18
    if big.any():
        x = lam[big][None, :]
        out[big] = 2.0 * np.sum((-1.0) ** (j - 1) * np.exp(-2.0 * j * j * x * x), axis=0)
    small = (~big) & (lam > 0)
    if small.any():
        x = lam[small][None, :]
        cdf = np.sqrt(2.0 * np.pi) / x[0] * np.sum(np.exp(-((2 * j - 1) ** 2) * np.pi**2 / (8.0 * x * x)), axis=0)
        out[small] = 1.0 - cdf
    return np.clip(out, 0.0, 1.0)


def ks_two_sample(a, b):
    """``(D, p_value)`` with the asymptotic p-value at effective size n_a n_b / (n_a + n_b)."""
    a, b = _sample(a, "a"), _sample(b, "b")
    _, fa, fb = _cdf_gaps(a, b)
    d = float(np.max(np.abs(fa - fb)))
    ne = a.size * b.size / (a.size + b.size)
    return d, float(kolmogorov_sf(np.sqrt(ne) * d)[0])


# ---------------------------------------------------------------------------
# distribution distance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DistanceRow:
    statistic: str
    tenor: str
    emd: float
    dy: float
    ks: float
    ks_pval: float

    @property
    def one_minus_p(self) -> float:
        return 1.0 - self.ks_pval


@dataclass(frozen=True)
class DistanceReport:
    rows: tuple

    def to_csv(self, path, model=None):
        write_distance_csv([(model, self)], path)


def compare_samples(statistic, tenor, real, synth) -> DistanceRow:
    d, p = ks_two_sample(real, synth)
    return DistanceRow(statistic, str(tenor), emd_1d(real, synth), dy_metric(real, synth), d, p)


def distance_report(real: MomentSample, synth: MomentSample, tenors, statistics=("mean", "stdev")) -> DistanceReport:
    rows = []
    for stat in statistics:
        r, g = real.get(stat), synth.get(stat)
        for j, tenor in enumerate(tenors):
            rows.append(compare_samples(stat, tenor, r[:, j], g[:, j]))
    return DistanceReport(tuple(rows))


def distribution_distance_score(report) -> float:
    rows = report.rows if isinstance(report, DistanceReport) else report
    return float(np.mean([r.one_minus_p for r in rows]))


def series_distance(real_by_h: dict, synth_by_h: dict):
    """``1 - KS p`` per (horizon, tenor); returns (score, {h: per-tenor array}).

    The score averages across tenors first, then across horizons.
    """
    per_h = {}
    for h, real in real_by_h.items():
        real = np.asarray(real, float)
        synth = np.asarray(synth_by_h[h], float)
        if real.ndim == 1:
            real, synth = real[:, None], synth[:, None]
        per_h[h] = np.array([1.0 - ks_two_sample(real[:, j], synth[:, j])[1] for j in range(real.shape[1])])
    score = float(np.mean([v.mean() for v in per_h.values()]))
    return score, per_h


def series_distance_score(real_by_h: dict, synth_by_h: dict) -> float:
    return series_distance(real_by_h, synth_by_h)[0]


# ---------------------------------------------------------------------------
# autocorrelation
# ---------------------------------------------------------------------------

TRANSFORMS = {"x": lambda v: v, "x2": lambda v: v * v}


def pooled_acf(windows, lag: int, f: str = "x"):
    """Correlation of all within-window pairs ``(f(x_j), f(x_{j+lag}))``; returns (rho, n_pairs)."""
    w = np.asarray(windows, dtype=float)
    if w.ndim != 2:
        raise ValueError("pooled_acf expects windows [N x q]")
    if not 1 <= lag < w.shape[1]:
        raise ValueError(f"lag must lie in [1, q-1], got {lag}")
    fw = TRANSFORMS[f](w)
    u, v = fw[:, :-lag].ravel(), fw[:, lag:].ravel()
    su, sv = u.std(), v.std()
    if not (su > 0 and sv > 0):
        raise DegeneratePairs("zero variance in pooled pairs")
    rho = float(np.mean((u - u.mean()) * (v - v.mean())) / (su * sv))
    return float(np.clip(rho, -1.0, 1.0)), int(u.size)


def fisher_score(rho1, n1, rho2, n2, tails: int = 1) -> float:
    """Normal tail probability of the Fisher-z gap between two correlations.

    ``tails=1`` gives ``1 - Phi(|z1 - z2| / se)`` (0.5 for equal correlations);
    ``tails=2`` doubles it into the two-sided p-value.
    """
    if n1 <= 3 or n2 <= 3:
        raise TooFewPairs("Fisher comparison needs more than 3 pairs per sample")
    if tails not in (1, 2):
        raise ValueError("tails must be 1 or 2")
    r1, r2 = (np.clip(r, -1 + 1e-15, 1 - 1e-15) for r in (rho1, rho2))
    se = np.sqrt(1.0 / (n1 - 3) + 1.0 / (n2 - 3))
    z = abs(np.arctanh(r1) - np.arctanh(r2)) / se
    return float(tails * ndtr(-z))


@dataclass(frozen=True)
class AcfRow:
    tenor: str
    f: str
    lag: int
    real_acf: float
    synth_acf: float
    n_real: int
    n_synth: int
    score: float


@dataclass(frozen=True)
class AcfReport:
    rows: tuple

    def to_csv(self, path, model=None):
        write_acf_csv([(model, self)], path)


def acf_report(real_windows, synth_windows, tenors, lags=(1, 2), transforms=("x", "x2"), tails: int = 2) -> AcfReport:
    real_windows = np.asarray(real_windows, float)
    synth_windows = np.asarray(synth_windows, float)
    rows = []
    for j, tenor in enumerate(tenors):
        for f in transforms:
            for lag in lags:
                r1, n1 = pooled_acf(real_windows[:, :, j], lag, f)
                r2, n2 = pooled_acf(synth_windows[:, :, j], lag, f)
                rows.append(AcfRow(str(tenor), f, lag, r1, r2, n1, n2, fisher_score(r1, n1, r2, n2, tails)))
    return AcfReport(tuple(rows))


def acf_summary_score(report) -> float:
    """``1 -`` (average over lags, then over transforms, then over tenors)."""
    rows = report.rows if isinstance(report, AcfReport) else report
    by_tenor = {}
    for r in rows:
        by_tenor.setdefault(r.tenor, {}).setdefault(r.f, []).append(r.score)
    per_tenor = [np.mean([np.mean(v) for v in fs.values()]) for fs in by_tenor.values()]
    return float(1.0 - np.mean(per_tenor))


# ---------------------------------------------------------------------------
# cross-sectional structure
# ---------------------------------------------------------------------------


def _corr(x):
    x = np.asarray(x, float)
    if x.ndim != 2 or x.shape[1] < 2:
        raise ValueError("correlation matrix needs d >= 2 columns")
    sd = x.std(axis=0)
    if np.any(~(sd > 0)):
        raise DegenerateColumn("zero-variance column in correlation input")
    return np.corrcoef(x, rowvar=False)


def corr_matrix_diff(real, synth) -> np.ndarray:
    """``corr(real) - corr(synth)``, reported only."""
    return _corr(real) - _corr(synth)


@dataclass(frozen=True)
class PcaProjection:
    real: np.ndarray
    synth: np.ndarray
    explained_variance: np.ndarray
    components: np.ndarray


def pca_project_2d(real, synth) -> PcaProjection:
    """Project flattened windows onto the first two principal axes of the real set."""
    r = np.asarray(real, float).reshape(len(real), -1)
    g = np.asarray(synth, float).reshape(len(synth), -1)
    if r.shape[1] < 2 or r.shape[1] != g.shape[1]:
        raise RankDeficient(f"need equal dimensions >= 2, got {r.shape[1]} and {g.shape[1]}")
    center = r.mean(axis=0)
    _, s, vt = np.linalg.svd(r - center, full_matrices=False)
    comps = vt[:2]
    ev = s[:2] ** 2 / max(r.shape[0] - 1, 1)
    return PcaProjection((r - center) @ comps.T, (g - center) @ comps.T, ev, comps)


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------


def write_distance_csv(items, path):
    """``items`` is a sequence of ``(model, DistanceReport)``."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["Model", "Statistic", "Tenor", "EMD", "DY", "KS", "KS_pval", "1-KS_pval"])
        for model, rep in items:
            for r in rep.rows:
                w.writerow([model or "", r.statistic, r.tenor, f"{r.emd:.6g}", f"{r.dy:.6g}", f"{r.ks:.6g}",
                            f"{r.ks_pval:.6g}", f"{r.one_minus_p:.6g}"])


def write_acf_csv(items, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["Model", "Tenor", "F", "Lag", "ACF_real", "ACF_synth", "N_real", "N_synth", "Score"])
        for model, rep in items:
            for r in rep.rows:
                w.writerow([model or "", r.tenor, r.f, r.lag, f"{r.real_acf:.6g}", f"{r.synth_acf:.6g}",
                            r.n_real, r.n_synth, f"{r.score:.6g}"])
