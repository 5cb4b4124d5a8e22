"""PIT (u-value) backtesting, sub-period aggregation and envelope data."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import YEAR_DAYS
from .errors import EmptySample, InsufficientHistory, MissingCells, TooFew
from .kpi import kolmogorov_sf

log = logging.getLogger(__name__)

BREACH_LEVELS = (0.025, 0.05, 0.10, 0.90, 0.95, 0.975)
BR_COLUMNS = ("BR025", "BR05", "BR10", "BR90", "BR95", "BR975")
SUBPERIOD_DAYS = 2 * YEAR_DAYS
N_SYNTH = 1000


def u_values(realized, synth) -> np.ndarray:
    """Mid-rank PIT of ``realized[...]`` against ``synth[..., n]`` along the last axis."""
    s = np.asarray(synth, dtype=float)
    if s.shape[-1] == 0:
        raise EmptySample("no synthetic draws")
    r = np.asarray(realized, dtype=float)[..., None]
    below = np.count_nonzero(s < r, axis=-1)
    ties = np.count_nonzero(s == r, axis=-1)
    return np.clip((below + 0.5 * ties) / s.shape[-1], 0.0, 1.0)


def u_value(realized: float, synth) -> float:
    return float(u_values(realized, np.ravel(synth)))


@dataclass(frozen=True)
class UValueSeries:
    """``u[h]`` is [n_dates_h x d]; ``anchors[h]`` the row index of each condition date t0."""

    tenors: tuple
    dates: dict
    anchors: dict
    u: dict

    @property
    def horizons(self):
        return tuple(sorted(self.u))


def run_backtest(scenarios, returns, anchors, horizons=(1, 10), n_synth: int = N_SYNTH, seed=0,
                 chunk: int = 128, dates=None, tenors=None, keep_envelope: bool = False):
    """PIT of realized h-day returns under a forecaster's scenarios on every anchor date.

    ``scenarios(t0s, n_paths, seed) -> [len(t0s), n_paths, H, d]`` with H >= max horizon.
    The realized h-day return after t0 is ``x[t0+1] + ... + x[t0+h]``. Anchors without
    h days of future data are dropped for that horizon.
    """
    x = np.asarray(getattr(returns, "values", returns), dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    dates = getattr(returns, "dates", None) if dates is None else dates
    tenors = tuple(getattr(returns, "tenors", ())) or tuple(tenors or range(x.shape[1]))
    anchors = np.asarray(anchors, dtype=int)
    T = x.shape[0]
    H = max(horizons)
    csum = np.vstack([np.zeros((1, x.shape[1])), np.cumsum(x, axis=0)])
    u = {h: [] for h in horizons}
    used = {h: [] for h in horizons}
    env = [] if keep_envelope else None
    anchors = anchors[anchors + 1 < T]
    for ci, start in enumerate(range(0, anchors.size, chunk)):
        t0s = anchors[start : start + chunk]
        try:
            cube = np.asarray(scenarios(t0s, n_synth, [seed, ci]), dtype=float)
        except InsufficientHistory as exc:
            log.warning("skipping anchors %d..%d: %s", t0s[0], t0s[-1], exc)
            continue
        if cube.shape[2] < H:
            raise ValueError(f"scenario horizon {cube.shape[2]} < {H}")
        for h in horizons:
            ok = t0s + h < T
            if not ok.any():
                continue
            t = t0s[ok]
            realized = csum[t + h + 1] - csum[t + 1]
            sims = cube[ok, :, :h, :].sum(axis=2)
            u[h].append(u_values(realized, np.moveaxis(sims, 1, -1)))
            used[h].append(t)
        if env is not None:
            env.append(np.quantile(cube[:, :, 0, :], (0.05, 0.95), axis=1))
    out_u = {h: np.vstack(u[h]) if u[h] else np.empty((0, x.shape[1])) for h in horizons}
    out_a = {h: np.concatenate(used[h]) if used[h] else np.empty(0, int) for h in horizons}
    out_d = {h: (np.asarray(dates)[out_a[h]] if dates is not None else out_a[h]) for h in horizons}
    series = UValueSeries(tenors, out_d, out_a, out_u)
    if env is not None:
        return series, np.concatenate(env, axis=1)
    return series


# ---------------------------------------------------------------------------
# u statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HistogramStats:
    heights: np.ndarray
    diff: float
    range: float
    stdev: float


def u_histogram_stats(u, bins: int = 10) -> HistogramStats:
    u = np.asarray(u, dtype=float).ravel()
    if u.size < 10:
        raise TooFew(f"histogram needs >= 10 u-values, got {u.size}")
    counts, _ = np.histogram(u, bins=bins, range=(0.0, 1.0))
    heights = counts * bins / u.size
    return HistogramStats(heights, float(np.mean(np.abs(heights - 1.0))), float(np.ptp(heights)),
                          float(np.std(heights, ddof=1)))


def breach_rate_diffs(u, levels=BREACH_LEVELS) -> np.ndarray:
    """Left-tail rates ``#{u < p}/n`` for p < 0.5, right-tail ``#{u > p}/n`` otherwise, minus nominal."""
    u = np.asarray(u, dtype=float).ravel()
    if u.size < 20:
        raise TooFew(f"breach rates need >= 20 u-values, got {u.size}")
    out = []
    for p in levels:
        if p < 0.5:
            out.append(abs(np.count_nonzero(u < p) / u.size - p))
        else:
            out.append(abs(np.count_nonzero(u > p) / u.size - (1.0 - p)))
    return np.array(out)


def ks_uniform(u):
    """One-sample KS against U[0, 1]: ``(D, p_value)``."""
    u = np.sort(np.asarray(u, dtype=float).ravel())
    n = u.size
    if n == 0:
        raise EmptySample("no u-values")
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - u), np.max(u - (i - 1) / n)))
    return d, float(kolmogorov_sf(np.sqrt(n) * d)[0])


# ---------------------------------------------------------------------------
# records and the BT score
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BacktestRecord:
    j: int
    days: int
    start: object
    end: object
    tenor: str
    ks_pval: float
    diff: float
    br: tuple

    def as_row(self):
        return [self.j, self.days, str(self.start), str(self.end), self.tenor, f"{self.ks_pval:.6g}",
                f"{self.diff:.6g}", *(f"{b:.6g}" for b in self.br)]


def subperiods(n: int, length: int = SUBPERIOD_DAYS, min_tail: int = YEAR_DAYS):
    """Consecutive ``[start, end)`` chunks; a last chunk shorter than ``min_tail`` joins its predecessor."""
    if n <= 0:
        return []
    cuts = list(range(0, n, length)) + [n]
    spans = list(zip(cuts[:-1], cuts[1:]))
    if len(spans) > 1 and spans[-1][1] - spans[-1][0] < min_tail:
        last = spans.pop()
        spans[-1] = (spans[-1][0], last[1])
    return spans


def backtest_records(series: UValueSeries, length: int = SUBPERIOD_DAYS) -> list:
    """Records for every sub-period (J = 1, 2, ...) plus the whole period (J = 0)."""
    records = []
    for h in series.horizons:
        u, dates = series.u[h], np.asarray(series.dates[h])
        n = u.shape[0]
        spans = [(0, (0, n))] + [(k + 1, s) for k, s in enumerate(subperiods(n, length))]
        for j, (a, b) in spans:
            for c, tenor in enumerate(series.tenors):
                uu = u[a:b, c]
                records.append(BacktestRecord(
                    j, h, dates[a], dates[b - 1], str(tenor), ks_uniform(uu)[1],
                    u_histogram_stats(uu).diff, tuple(float(v) for v in breach_rate_diffs(uu)),
                ))
    return records


def bt_score(records) -> float:
    """Median over sub-periods, mean over horizons, median over tenors, then ``(sum BR + 1 - KSp) / 2``."""
    records = list(records)
    if not records:
        raise MissingCells("no backtest records")
    js = sorted({r.j for r in records})
    hs = sorted({r.days for r in records})
    tenors = sorted({r.tenor for r in records})
    cells = {(r.tenor, r.j, r.days): np.array([*r.br, r.ks_pval]) for r in records}
    missing = [(t, j, h) for t in tenors for j in js for h in hs if (t, j, h) not in cells]
    if missing:
        raise MissingCells(f"missing backtest cells, e.g. {missing[:3]}")
    per_tenor = []
    for t in tenors:
        by_h = [np.median([cells[(t, j, h)] for j in js], axis=0) for h in hs]
        per_tenor.append(np.mean(by_h, axis=0))
    med = np.median(per_tenor, axis=0)
    br = float(np.sum(med[:6]))
    return (br + (1.0 - float(med[6]))) / 2.0


def write_backtest_csv(items, path):
    """``items`` is a sequence of ``(model, records)``; a Model column leads the layout."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["Model", "J", "DAYS", "START", "END", "TENOR", "KSpval", "DIFF", *BR_COLUMNS])
        for model, recs in items:
            for r in recs:
                w.writerow([model, *r.as_row()])


# ---------------------------------------------------------------------------
# envelope
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnvelopeData:
    dates: np.ndarray
    realized: np.ndarray
    q_low: np.ndarray
    q_high: np.ndarray
    breach_low: tuple
    breach_high: tuple


def envelope_data(dates, realized, synth=None, levels=(0.05, 0.95), quantiles=None) -> EnvelopeData:
    """Forecast quantile band and realized 1-day returns.

    Either ``synth[n_dates, n_paths, d]`` or precomputed ``quantiles[2, n_dates, d]``.
    Breach percentages are reported for the first and second half of the dates.
    """
    realized = np.asarray(realized, dtype=float)
    if realized.ndim == 1:
        realized = realized[:, None]
    if quantiles is None:
        quantiles = np.quantile(np.asarray(synth, dtype=float), levels, axis=1)
    lo, hi = quantiles[0], quantiles[1]
    n = realized.shape[0]
    halves = [(0, n // 2), (n // 2, n)]
    bl = tuple(np.mean(realized[a:b] < lo[a:b], axis=0) if b > a else np.zeros(realized.shape[1]) for a, b in halves)
    bh = tuple(np.mean(realized[a:b] > hi[a:b], axis=0) if b > a else np.zeros(realized.shape[1]) for a, b in halves)
    return EnvelopeData(np.asarray(dates), realized, lo, hi, bl, bh)
