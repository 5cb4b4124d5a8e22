"""Forecasters: every model exposes ``fit(ctx)`` and ``scenarios(t0s, n_paths, seed)``.

``scenarios`` returns return paths ``[len(t0s), n_paths, q, d]`` in return units for
condition dates ``t0s`` (row indices of the return panel). Historical simulation
ignores ``n_paths`` and always returns one path per look-back day.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..data import RatePanel, ReturnPanel, ScalerState, SequenceSet, SplitIndex
from ..errors import InsufficientHistory
from ..genmodels import TRAINERS, default_train_config, generate_many
from ..histsim import devolatize, ewma_volatility, fhs_paths_many, phs_paths_many
from ..parametric.ar import fit_ar1, ols_ar1
from ..parametric.garch import filter_state, fit_garch11, garch_paths
from ..parametric.nelson_siegel import factors_from_curves, ns_design, ns_vasicek_paths, parse_tenor
from ..parametric.vasicek import fit_vasicek

MODEL_NAMES = ("PHS", "FHS", "AR", "AR_RET", "GARCH", "GARCH_RET", "GARCHt_RET", "NS_VS",
               "CGAN_FC", "CGAN_LSTM", "CWGAN", "CVAE")
CATEGORY = {"PHS": "HS", "FHS": "HS", "AR": "PM", "AR_RET": "PM", "GARCH": "PM", "GARCH_RET": "PM",
            "GARCHt_RET": "PM", "NS_VS": "PM", "CGAN_FC": "NN", "CGAN_LSTM": "NN", "CWGAN": "NN", "CVAE": "NN"}
NN_KIND = {"CGAN_FC": "cgan_fc", "CGAN_LSTM": "cgan_lstm", "CWGAN": "cwgan", "CVAE": "cvae"}

MIN_WINDOW = {"ar": 30, "garch": 200}


@dataclass
class DatasetContext:
    """Everything a model may look at for one dataset."""

    name: str
    levels: RatePanel
    returns: ReturnPanel
    scaler: ScalerState
    seq: SequenceSet
    split: SplitIndex
    settings: object

    @property
    def x(self) -> np.ndarray:
        return self.returns.values

    @property
    def level_at_anchor(self) -> np.ndarray:
        """Levels aligned with return rows: entry t is the level after return t."""
        return self.levels.values[1:]

    @property
    def p(self) -> int:
        return self.seq.p

    @property
    def q(self) -> int:
        return self.seq.q

    @property
    def T(self) -> int:
        return self.x.shape[0]


def effective_window(window: int, T: int, kind: str) -> int:
    """Clamp an estimation window to half the available history, with a warning."""
    cap = max(MIN_WINDOW[kind], T // 2)
    if window > cap:
        warnings.warn(f"{kind} window {window} exceeds usable history; clamped to {cap}", RuntimeWarning,
                      stacklevel=2)
        return cap
    return window


def _chol(corr):
    c = np.atleast_2d(np.asarray(corr, float))
    for jitter in (0.0, 1e-10, 1e-6):
        try:
            return np.linalg.cholesky(c + jitter * np.eye(c.shape[0]))
        except np.linalg.LinAlgError:
            continue
    return np.eye(c.shape[0])


def _corr(resid):
    resid = np.asarray(resid, float)
    if resid.shape[1] == 1:
        return np.ones((1, 1))
    return np.corrcoef(resid, rowvar=False)


class Forecaster:
    name = ""
    category = ""

    def __init__(self, settings):
        self.settings = settings
        self.artifacts = {}

    def history_needed(self, ctx: DatasetContext) -> int:
        return 0

    def fit(self, ctx: DatasetContext):
        self.ctx = ctx
        return self

    def scenarios(self, t0s, n_paths, seed) -> np.ndarray:
        raise NotImplementedError


class PhsForecaster(Forecaster):
    name, category = "PHS", "HS"

    def history_needed(self, ctx):
        return self.settings.hs_window - 1 + ctx.q - 1

    def scenarios(self, t0s, n_paths, seed):
        return phs_paths_many(self.ctx.x, np.asarray(t0s), self.ctx.q, self.settings.hs_window)


class FhsForecaster(Forecaster):
    name, category = "FHS", "HS"

    def history_needed(self, ctx):
        return self.settings.hs_window - 1 + ctx.q - 1

    def fit(self, ctx):
        super().fit(ctx)
        self.vols = ewma_volatility(ctx.x, self.settings.ewma_decay)
        self.xhat = devolatize(ctx.x, self.vols)
        return self

    def scenarios(self, t0s, n_paths, seed):
        return fhs_paths_many(self.xhat, self.vols, np.asarray(t0s), self.ctx.q, self.settings.hs_window)


class _RollingForecaster(Forecaster):
    """Parameters re-estimated every ``refit_every`` anchors on a trailing window."""

    on_levels = False
    window_kind = "ar"

    def window(self, ctx):
        w = self.settings.garch_window if self.window_kind == "garch" else self.settings.ar_window
        return effective_window(w, ctx.T, self.window_kind)

    def history_needed(self, ctx):
        return self.window(ctx) - 1

    def series(self, ctx):
        return ctx.level_at_anchor if self.on_levels else ctx.x

    def blocks(self, ctx):
        start = self.history_needed(ctx)
        return [(b, min(b + self.settings.refit_every, ctx.T)) for b in range(start, ctx.T, self.settings.refit_every)]

    def fit(self, ctx):
        super().fit(ctx)
        self.s = self.series(ctx)
        self.block_of = np.full(ctx.T, -1)
        self.fits = []
        W = self.window(ctx)
        for bi, (b, e) in enumerate(self.blocks(ctx)):
            self.block_of[b:e] = bi
            self.fits.append(self.fit_block(self.s[b - W + 1 : b + 1], b - W + 1, b, e))
        return self

    def _block_ids(self, t0s):
        ids = self.block_of[np.asarray(t0s)]
        if np.any(ids < 0):
            raise InsufficientHistory(f"{self.name}: anchor before the first estimation window")
        return ids

    def _to_returns(self, paths, t0s):
        if not self.on_levels:
            return paths
        start = self.s[np.asarray(t0s)][:, None, None, :]
        prev = np.concatenate([np.broadcast_to(start, paths[:, :, :1].shape), paths[:, :, :-1]], axis=2)
        return paths - prev


class ArForecaster(_RollingForecaster):
    def __init__(self, settings, on_levels):
        super().__init__(settings)
        self.on_levels = on_levels
        self.name = "AR" if on_levels else "AR_RET"
        self.category = "PM"

    def fit_block(self, window, lo, b, e):
        d = window.shape[1]
        coef = np.empty((3, d))
        resid = []
        for j in range(d):
            fit = fit_ar1(window[:, j])
            coef[:, j] = fit.phi0, fit.phi1, fit.sigma
            resid.append(ols_ar1(window[:, j])[2])
        return coef, _chol(_corr(np.array(resid).T))

    def scenarios(self, t0s, n_paths, seed):
        t0s = np.asarray(t0s)
        ids = self._block_ids(t0s)
        rng = np.random.default_rng(seed)
        q, d = self.ctx.q, self.s.shape[1]
        coef = np.stack([self.fits[i][0] for i in ids])[:, :, None, :]
        chol = np.stack([self.fits[i][1] for i in ids])
        z = np.einsum("mij,mnkj->mnki", chol, rng.standard_normal((t0s.size, n_paths, q, d)))
        out = np.empty_like(z)
        prev = np.broadcast_to(self.s[t0s][:, None, :], (t0s.size, n_paths, d))
        for k in range(q):
            prev = coef[:, 0] + coef[:, 1] * prev + coef[:, 2] * z[:, :, k]
            out[:, :, k] = prev
        return self._to_returns(out, t0s)


class GarchForecaster(_RollingForecaster):
    window_kind = "garch"

    def __init__(self, settings, on_levels, dist, name):
        super().__init__(settings)
        self.on_levels, self.dist, self.name, self.category = on_levels, dist, name, "PM"

    def fit_block(self, window, lo, b, e):
        d = window.shape[1]
        params, std_resid = [], []
        # state per anchor in [b, e): eps and conditional variance of the anchor's return
        eps_at = np.empty((e - b, d))
        s2_at = np.empty((e - b, d))
        for j in range(d):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                prm = fit_garch11(window[:, j], self.dist)
            params.append(prm)
            seg = self.s[lo:e, j]
            eps0 = window[1:, j] - prm.phi0 - prm.phi1 * window[:-1, j]
            eps, s2 = filter_state(prm, seg, s0=float(np.mean(eps0**2)))
            eps_at[:, j] = eps[b - lo - 1 : e - lo - 1]
            s2_at[:, j] = s2[b - lo - 1 : e - lo - 1]
            std_resid.append(eps[: b - lo] / np.sqrt(s2[: b - lo]))
        vec = {k: np.array([getattr(p, k) for p in params]) for k in ("phi0", "phi1", "omega", "alpha", "beta", "nu")}
        return {"params": params, "vec": vec, "eps": eps_at, "s2": s2_at, "start": b,
                "chol": _chol(_corr(np.array(std_resid).T))}

    def scenarios(self, t0s, n_paths, seed):
        t0s = np.asarray(t0s)
        ids = self._block_ids(t0s)
        rng = np.random.default_rng(seed)
        q, d = self.ctx.q, self.s.shape[1]
        m = t0s.size
        chol = np.stack([self.fits[i]["chol"] for i in ids])
        z = np.einsum("mij,mnkj->mnki", chol, rng.standard_normal((m, n_paths, q, d)))
        vec = {k: np.stack([self.fits[i]["vec"][k] for i in ids])[:, None, :] for k in self.fits[0]["vec"]}
        if self.dist == "t":
            nu = vec["nu"][:, 0, :]
            w = rng.chisquare(np.broadcast_to(nu[:, None, None, :], z.shape))
            z = z / np.sqrt(w / nu[:, None, None, :]) * np.sqrt((nu[:, None, None, :] - 2.0) / nu[:, None, None, :])
        eps = np.stack([self.fits[i]["eps"][t - self.fits[i]["start"]] for i, t in zip(ids, t0s)])[:, None, :]
        s2 = np.stack([self.fits[i]["s2"][t - self.fits[i]["start"]] for i, t in zip(ids, t0s)])[:, None, :]
        x_last = self.s[t0s][:, None, :]
        # recursion runs over the last axis: [m, n, d, q]
        paths = garch_paths(*(vec[k] for k in ("phi0", "phi1", "omega", "alpha", "beta")),
                            x_last, eps, s2, np.moveaxis(z, 2, -1))
        return self._to_returns(np.moveaxis(paths, -1, 2), t0s)


class NsVasicekForecaster(_RollingForecaster):
    name, category = "NS_VS", "PM"

    def fit(self, ctx):
        years = np.array([parse_tenor(t) for t in ctx.levels.tenors])
        self.loadings = ns_design(years)
        self.betas = factors_from_curves(ctx.level_at_anchor, years)
        self.on_levels = False
        return super().fit(ctx)

    def series(self, ctx):
        return self.betas

    def fit_block(self, window, lo, b, e):
        dyn = [fit_vasicek(window[:, j]) for j in range(3)]
        resid = np.array([ols_ar1(window[:, j])[2] for j in range(3)]).T
        return dyn, _chol(_corr(resid))

    def scenarios(self, t0s, n_paths, seed):
        t0s = np.asarray(t0s)
        ids = self._block_ids(t0s)
        rng = np.random.default_rng(seed)
        q = self.ctx.q
        out = np.empty((t0s.size, n_paths, q, self.loadings.shape[0]))
        for i in np.unique(ids):
            sel = ids == i
            dyn, chol = self.fits[i]
            z = rng.standard_normal((sel.sum(), n_paths, q, 3)) @ chol.T
            out[sel] = ns_vasicek_paths(dyn, self.betas[t0s[sel]][:, None, :], self.loadings, z)
        return out


class NeuralForecaster(Forecaster):
    category = "NN"

    def __init__(self, settings, name):
        super().__init__(settings)
        self.name = name
        self.kind = NN_KIND[name]

    def history_needed(self, ctx):
        return ctx.p - 1

    def train_config(self, ctx, seed):
        s = self.settings
        over = {"epochs": s.epochs, "batch_size": s.batch_size, "seed": int(seed),
                "hidden": tuple(s.layers), "lstm_hidden": s.lstm_hidden}
        if s.learning_rate > 0:
            over["learning_rate"] = s.learning_rate
        if s.noise_dim > 0:
            over["noise_dim"] = s.noise_dim
        if s.clip_value > 0 and self.kind != "cvae":
            over["clip_value"] = s.clip_value
        over.update(s.model_params.get(self.name, {}))
        if "hidden" in over:
            over["hidden"] = tuple(over["hidden"])
        return default_train_config(self.kind, ctx.x.shape[1], **over)

    def fit(self, ctx, seed=0):
        super().fit(ctx)
        train = ctx.seq.subset(ctx.split.train_rows)
        self.handle = TRAINERS[self.kind](train, self.train_config(ctx, seed), ctx.scaler)
        return self

    def scenarios(self, t0s, n_paths, seed):
        t0s = np.asarray(t0s)
        p = self.ctx.p
        cond = self.ctx.x[t0s[:, None] + np.arange(-p + 1, 1)[None, :]]
        return generate_many(self.handle, cond, n_paths, seed)


def make_forecaster(name: str, settings) -> Forecaster:
    if name == "PHS":
        return PhsForecaster(settings)
    if name == "FHS":
        return FhsForecaster(settings)
    if name in ("AR", "AR_RET"):
        return ArForecaster(settings, on_levels=name == "AR")
    if name == "GARCH":
        return GarchForecaster(settings, True, "normal", name)
    if name == "GARCH_RET":
        return GarchForecaster(settings, False, "normal", name)
    if name == "GARCHt_RET":
        return GarchForecaster(settings, False, "t", name)
    if name == "NS_VS":
        return NsVasicekForecaster(settings)
    if name in NN_KIND:
        return NeuralForecaster(settings, name)
    raise KeyError(f"unknown model {name!r}")
