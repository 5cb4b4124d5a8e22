"""End-to-end experiment: data -> fit -> generate -> KPIs -> backtest -> scores."""
from __future__ import annotations

import logging
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import backtest as bt
from .. import kpi
from ..data import RatePanel, ReturnPanel, compute_returns, fit_scaler, make_sequences, read_panel_csv, split_train_test, transform
from ..dgp import CIR_1, CIR_2, simulate_cir_euler, simulate_garch_dgp, reference_garch_params
from .config import RunConfig
from .registry import CATEGORY, DatasetContext, NeuralForecaster, make_forecaster
from .scoring import ModelScoreRow, dist_score, score_row

log = logging.getLogger(__name__)

STAGES = ("kpi", "backtest")
CIR_RHO = 0.60


# ---------------------------------------------------------------------------
# datasets
# ---------------------------------------------------------------------------


def build_panels(cfg: RunConfig) -> list:
    """``[(name, RatePanel, seed)]`` for the configured CSV or simulated paths."""
    if cfg.dataset is not None:
        return [(Path(cfg.dataset).stem, read_panel_csv(cfg.dataset), None)]
    n = 251 * cfg.dgp_years
    out = []
    for i in range(cfg.dgp_paths):
        seed = cfg.dgp_seed + i
        if cfg.dgp == "cir":
            panel = simulate_cir_euler((CIR_1, CIR_2), CIR_RHO, n, seed, scale=100.0)
            out.append((f"CIR_{seed}", panel, seed))
        else:
            innov = "t" if cfg.dgp == "garch_t" else "normal"
            panel, _ = simulate_garch_dgp(reference_garch_params(innov, cfg.t_nu), n, seed)
            out.append((f"GARCH_{'T' if innov == 't' else 'N'}_{seed}", panel, seed))
    return out


def prepare_context(name: str, panel: RatePanel, cfg: RunConfig) -> DatasetContext:
    returns = compute_returns(panel, cfg.return_mode)
    scaler = fit_scaler(returns, cfg.scaler_type)
    scaled = ReturnPanel(returns.dates, returns.tenors, transform(scaler, returns.values), returns.mode)
    seq = make_sequences(scaled, cfg.condition_length, cfg.sequence_length)
    split = split_train_test(seq, cfg.split_fraction, cfg.split_seed)
    return DatasetContext(name, panel, returns, scaler, seq, split, cfg)


def model_seed(run_seed: int, ds_index: int, model: str) -> int:
    ss = np.random.SeedSequence([run_seed, ds_index, zlib.crc32(model.encode())])
    return int(ss.generate_state(1)[0])


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------


@dataclass
class ModelResult:
    name: str
    category: str
    row: ModelScoreRow
    seed: int
    timings: dict = field(default_factory=dict)
    error: str = None
    distance: kpi.DistanceReport = None
    acf: kpi.AcfReport = None
    series_detail: dict = None
    acf_curves: list = None
    corr_diff: np.ndarray = None
    pca: kpi.PcaProjection = None
    records: list = None
    uhist: dict = None
    envelope: bt.EnvelopeData = None
    forecaster: object = None


@dataclass
class DatasetResult:
    name: str
    tenors: tuple
    info: dict
    models: list

    @property
    def rows(self):
        return [m.row for m in self.models]


@dataclass
class RunResult:
    config: RunConfig
    datasets: list
    timings: dict


class _Timer:
    def __init__(self, fn):
        self.fn, self.elapsed = fn, 0.0

    def __call__(self, *args):
        t = time.perf_counter()
        try:
            return self.fn(*args)
        finally:
            self.elapsed += time.perf_counter() - t


# ---------------------------------------------------------------------------
# per-model evaluation
# ---------------------------------------------------------------------------


def kpi_windows(ctx: DatasetContext, start: int):
    """Test-split anchors with enough history for every model, and their real target windows."""
    anchors = ctx.seq.anchor_index[ctx.split.test_rows]
    anchors = anchors[anchors >= start]
    real = ctx.x[anchors[:, None] + np.arange(1, ctx.q + 1)[None, :]]
    return anchors, real


def one_copy(scenarios, anchors, seed) -> np.ndarray:
    """One synthetic window per anchor; multi-path engines contribute a randomly chosen path."""
    cube = scenarios(anchors, 1, [seed, 0])
    rng = np.random.default_rng([seed, 1])
    pick = rng.integers(0, cube.shape[1], size=cube.shape[0])
    return cube[np.arange(cube.shape[0]), pick]


def evaluate_kpis(res: ModelResult, ctx: DatasetContext, scen, anchors, real, seed):
    tenors = ctx.returns.tenors
    synth = one_copy(scen, anchors, seed)
    m_real, m_synth = kpi.window_moments(real, synth)
    res.distance = kpi.distance_report(m_real, m_synth, tenors)
    dd = kpi.distribution_distance_score(res.distance)
    horizons = sorted({1, ctx.q})
    real_h = {h: real[:, :h].sum(axis=1) for h in horizons}
    synth_h = {h: synth[:, :h].sum(axis=1) for h in horizons}
    sd, res.series_detail = kpi.series_distance(real_h, synth_h)
    res.acf = kpi.acf_report(real, synth, tenors, tails=2)
    curves = []
    for j, tenor in enumerate(tenors):
        for f in ("x", "x2"):
            for lag in range(1, ctx.q):
                try:
                    r = kpi.pooled_acf(real[:, :, j], lag, f)[0]
                    g = kpi.pooled_acf(synth[:, :, j], lag, f)[0]
                except Exception:  # degenerate generator output: leave the curve point empty
                    r = g = float("nan")
                curves.append((tenor, f, lag, r, g))
    res.acf_curves = curves
    if ctx.x.shape[1] >= 2:
        res.corr_diff = kpi.corr_matrix_diff(real.reshape(-1, real.shape[2]), synth.reshape(-1, synth.shape[2]))
    res.pca = kpi.pca_project_2d(real.reshape(len(real), -1), synth.reshape(len(synth), -1))
    return dist_score(dd, sd), kpi.acf_summary_score(res.acf)


def evaluate_backtest(res: ModelResult, ctx: DatasetContext, scen, start, seed):
    cfg = ctx.settings
    anchors = np.arange(start, ctx.T - 1)
    horizons = tuple(sorted({1, ctx.q}))
    series, env_q = bt.run_backtest(scen, ctx.returns, anchors, horizons, cfg.n_synthetic, seed, keep_envelope=True)
    res.records = bt.backtest_records(series, cfg.subperiod_days)
    res.uhist = {(h, t): bt.u_histogram_stats(series.u[h][:, j]) for h in horizons for j, t in enumerate(series.tenors)}
    a1 = series.anchors[1]
    res.envelope = bt.envelope_data(series.dates[1], ctx.x[a1 + 1], quantiles=env_q)
    return bt.bt_score(res.records)


def evaluate_model(name: str, forecaster, ctx: DatasetContext, start: int, seed: int, stages=STAGES,
                   kpi_data=None) -> ModelResult:
    res = ModelResult(name, CATEGORY[name], ModelScoreRow(name, CATEGORY[name]), seed)
    t = {"TRAINING": 0.0, "GENERATION": 0.0, "BACKTEST": 0.0, "KPI": 0.0}
    res.timings = t
    try:
        t0 = time.perf_counter()
        if isinstance(forecaster, NeuralForecaster):
            forecaster.fit(ctx, seed=seed)
        else:
            forecaster.fit(ctx)
        t["TRAINING"] = time.perf_counter() - t0
        res.forecaster = forecaster
        dist = acf = btv = float("nan")
        if "kpi" in stages:
            scen = _Timer(forecaster.scenarios)
            t0 = time.perf_counter()
            anchors, real = kpi_data if kpi_data is not None else kpi_windows(ctx, start)
            dist, acf = evaluate_kpis(res, ctx, scen, anchors, real, seed + 1)
            t["GENERATION"] += scen.elapsed
            t["KPI"] = time.perf_counter() - t0 - scen.elapsed
        if "backtest" in stages:
            scen = _Timer(forecaster.scenarios)
            t0 = time.perf_counter()
            btv = evaluate_backtest(res, ctx, scen, start, seed + 2)
            t["GENERATION"] += scen.elapsed
            t["BACKTEST"] = time.perf_counter() - t0 - scen.elapsed
        res.row = score_row(name, CATEGORY[name], dist, acf, btv)
    except Exception as exc:  # failure isolation: one model never aborts the run
        log.exception("model %s failed on %s", name, ctx.name)
        res.error = f"{type(exc).__name__}: {exc}"
        res.row = ModelScoreRow(name, CATEGORY[name], status="FAILED")
    return res


def run_dataset(cfg: RunConfig, ds_index: int, name: str, panel: RatePanel, stages=STAGES) -> DatasetResult:
    ctx = prepare_context(name, panel, cfg)
    forecasters = {m: make_forecaster(m, cfg) for m in cfg.models}
    need = [0]
    for m, f in forecasters.items():
        try:
            need.append(f.history_needed(ctx))
        except Exception:
            log.exception("history requirement of %s unavailable", m)
    start = max(need)
    kpi_data = kpi_windows(ctx, start)
    info = {"T_returns": ctx.T, "N_windows": len(ctx.seq), "n_train": int(ctx.split.train_rows.size),
            "n_test": int(ctx.split.test_rows.size), "n_test_kpi": int(kpi_data[0].size), "first_anchor": int(start),
            "n_backtest_dates": int(max(ctx.T - 1 - start, 0))}
    results = []
    for m in cfg.models:
        log.info("[%s] %s", name, m)
        results.append(evaluate_model(m, forecasters[m], ctx, start, model_seed(cfg.seed, ds_index, m), stages,
                                      kpi_data))
    return DatasetResult(name, ctx.returns.tenors, info, results)


def _run_one(args):
    cfg, i, name, panel, stages = args
    res = run_dataset(cfg, i, name, panel, stages)
    for m in res.models:
        m.forecaster = None  # keep worker results picklable and small
    return res


def run_experiment(cfg: RunConfig, stages=STAGES) -> RunResult:
    t0 = time.perf_counter()
    panels = build_panels(cfg)
    jobs = [(cfg, i, name, panel, stages) for i, (name, panel, _) in enumerate(panels)]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            datasets = list(pool.map(_run_one, jobs))
    else:
        datasets = [run_dataset(*job) for job in jobs]
    return RunResult(cfg, datasets, {"TOTAL": time.perf_counter() - t0})
