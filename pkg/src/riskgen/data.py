"""Panel ingestion, return transforms, scaling, windowing and the train/test split."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateColumn,
    DimensionMismatch,
    NonPositiveLevel,
    ParseError,
    TooShort,
)

YEAR_DAYS = 251

_MISSING = {"", ".", "na", "nan", "null", "#n/a"}


def _as_dates(dates) -> np.ndarray:
    return np.asarray(dates, dtype="datetime64[D]")


@dataclass(frozen=True)
class RatePanel:
    """Dated matrix of risk-factor levels, ``values[t, i]`` in percent."""

    dates: np.ndarray
    tenors: tuple
    values: np.ndarray

    def __post_init__(self):
        dates = _as_dates(self.dates)
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] != dates.shape[0]:
            raise DimensionMismatch(f"values shape {values.shape} vs {dates.shape[0]} dates")
        if values.shape[1] != len(self.tenors) or values.shape[1] < 1:
            raise DimensionMismatch("tenor labels do not match value columns")
        if dates.size > 1 and not np.all(dates[1:] > dates[:-1]):
            raise ValueError("dates must be strictly increasing")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "tenors", tuple(str(t) for t in self.tenors))
        object.__setattr__(self, "values", values)

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def __len__(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class ReturnPanel:
    dates: np.ndarray
    tenors: tuple
    values: np.ndarray
    mode: str = "absolute"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        object.__setattr__(self, "dates", _as_dates(self.dates))
        object.__setattr__(self, "tenors", tuple(str(t) for t in self.tenors))
        object.__setattr__(self, "values", values)

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def __len__(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class ScalerState:
    kind: str
    location: np.ndarray
    scale: np.ndarray

    @property
    def d(self) -> int:
        return self.location.shape[0]


@dataclass(frozen=True)
class SequenceSet:
    """Overlapping windows ``data[i] = returns[i : i+p+q]``."""

    data: np.ndarray
    p: int
    q: int
    window_start_dates: np.ndarray = field(default=None)
    start_index: np.ndarray = field(default=None)

    @property
    def condition(self) -> np.ndarray:
        return self.data[:, : self.p, :]

    @property
    def target(self) -> np.ndarray:
        return self.data[:, self.p :, :]

    @property
    def anchor_index(self) -> np.ndarray:
        """Return-row index of the last condition day (the test date t0) per window."""
        return self.start_index + self.p - 1

    def __len__(self):
        return self.data.shape[0]

    def subset(self, rows) -> "SequenceSet":
        rows = np.asarray(rows, dtype=int)
        return SequenceSet(
            self.data[rows], self.p, self.q, self.window_start_dates[rows], self.start_index[rows]
        )


@dataclass(frozen=True)
class SplitIndex:
    train_rows: np.ndarray
    test_rows: np.ndarray
    seed: int
    fraction: float


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------


def read_panel_csv(path) -> RatePanel:
    """Read a level panel: first column ``date`` (ISO-8601), one column per tenor.

    Interior gaps are forward-filled; leading rows with any missing cell are dropped.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file", line=1, column=1) from None
        if not header or header[0].strip().lower() not in ("date", "observation_date"):
            raise ParseError(f"{path}: first column must be 'date'", line=1, column=1)
        tenors = [h.strip() for h in header[1:]]
        dates, rows = [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise ParseError(f"{path}:{lineno}: expected {len(header)} fields", line=lineno, column=1)
            try:
                dates.append(np.datetime64(rec[0].strip(), "D"))
            except ValueError:
                raise ParseError(f"{path}:{lineno}: bad date {rec[0]!r}", line=lineno, column=1) from None
            row = []
            for col, cell in enumerate(rec[1:], start=2):
                c = cell.strip()
                if c.lower() in _MISSING:
                    row.append(np.nan)
                    continue
                try:
                    row.append(float(c))
                except ValueError:
                    raise ParseError(f"{path}:{lineno}: bad number {c!r}", line=lineno, column=col) from None
            rows.append(row)
    dates = np.array(dates, dtype="datetime64[D]")
    values = np.array(rows, dtype=float).reshape(len(rows), len(tenors))
    if dates.size > 1 and not np.all(dates[1:] > dates[:-1]):
        raise ValueError(f"{path}: dates are unsorted or duplicated")
    values, lead = _clean_missing(values)
    return RatePanel(dates[lead:], tenors, values)


def _clean_missing(values):
    out = values.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        idx = np.where(np.isnan(col), 0, np.arange(col.size))
        np.maximum.accumulate(idx, out=idx)
        out[:, j] = col[idx]
    # after forward-filling only a leading block can still hold gaps
    complete = ~np.isnan(out).any(axis=1)
    if not complete.any():
        raise TooShort("no row without missing cells")
    lead = int(np.argmax(complete))
    return out[lead:], lead


def write_panel_csv(panel: RatePanel, path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["date", *panel.tenors])
        for dt, row in zip(panel.dates, panel.values):
            w.writerow([str(dt), *(repr(float(v)) for v in row)])


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------


def compute_returns(panel: RatePanel, mode: str = "absolute") -> ReturnPanel:
    if len(panel) < 2:
        raise TooShort("need at least two dates to form returns")
    lv = panel.values
    if mode == "absolute":
        x = np.diff(lv, axis=0)
    elif mode == "log":
        if np.any(lv <= 0):
            raise NonPositiveLevel("log returns need strictly positive levels")
        x = np.diff(np.log(lv), axis=0)
    else:
        raise ValueError(f"unknown return mode {mode!r}")
    return ReturnPanel(panel.dates[1:], panel.tenors, x, mode)


def levels_from_returns(returns: ReturnPanel, initial) -> np.ndarray:
    """Inverse of absolute ``compute_returns``: levels including the initial row."""
    init = np.broadcast_to(np.asarray(initial, dtype=float), (returns.d,))
    return np.vstack([init, init + np.cumsum(returns.values, axis=0)])


def fit_scaler(returns, kind: str = "standard") -> ScalerState:
    x = returns.values if isinstance(returns, ReturnPanel) else np.asarray(returns, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] < 2:
        raise TooShort("scaler needs at least two rows")
    if kind == "standard":
        loc = x.mean(axis=0)
        scale = x.std(axis=0, ddof=1)
    elif kind == "minmax":
        loc = x.min(axis=0)
        scale = x.max(axis=0) - loc
    else:
        raise ValueError(f"unknown scaler kind {kind!r}")
    if np.any(~(scale > 0)):
        raise DegenerateColumn(f"zero spread in column(s) {np.flatnonzero(~(scale > 0)).tolist()}")
    return ScalerState(kind, loc, scale)


def transform(scaler: ScalerState, data, direction: str = "forward") -> np.ndarray:
    """Apply the scaler along the last axis; works for matrices and window stacks."""
    a = np.asarray(data, dtype=float)
    if a.shape[-1] != scaler.d:
        raise DimensionMismatch(f"last axis {a.shape[-1]} != scaler dimension {scaler.d}")
    if direction == "forward":
        return (a - scaler.location) / scaler.scale
    if direction == "inverse":
        return a * scaler.scale + scaler.location
    raise ValueError(f"unknown direction {direction!r}")


def make_sequences(returns: ReturnPanel, p: int, q: int) -> SequenceSet:
    if p < 1 or q < 1:
        raise ValueError("p and q must be >= 1")
    T = len(returns)
    L = p + q
    if T < L:
        raise TooShort(f"{T} return rows < window length {L}")
    win = np.lib.stride_tricks.sliding_window_view(returns.values, L, axis=0)
    data = np.ascontiguousarray(np.moveaxis(win, -1, 1))
    starts = np.arange(T - L + 1)
    return SequenceSet(data, p, q, returns.dates[starts], starts)


def split_train_test(seq, fraction: float = 0.8, seed: int = 0) -> SplitIndex:
    if not 0 < fraction < 1:
        raise ValueError("fraction must lie in (0, 1)")
    n = seq if isinstance(seq, (int, np.integer)) else len(seq)
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(math.floor(fraction * n + 0.5))
    return SplitIndex(np.sort(perm[:n_train]), np.sort(perm[n_train:]), seed, fraction)


def h_day_returns(returns, h: int):
    """Overlapping h-day sums ``y_t = x_t + ... + x_{t-h+1}``.

    Accepts a ReturnPanel (returns a ReturnPanel dated at the window end) or an array.
    """
    if h < 1:
        raise ValueError("h must be >= 1")
    is_panel = isinstance(returns, ReturnPanel)
    x = returns.values if is_panel else np.asarray(returns, dtype=float)
    if x.shape[0] < h:
        raise TooShort(f"{x.shape[0]} rows < horizon {h}")
    if h == 1:
        y = x.copy()
    else:
        c = np.cumsum(np.concatenate([np.zeros((1,) + x.shape[1:]), x]), axis=0)
        y = c[h:] - c[:-h]
    if is_panel:
        return ReturnPanel(returns.dates[h - 1 :], returns.tenors, y, returns.mode)
    return y
