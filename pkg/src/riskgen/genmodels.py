"""Conditional generators for return windows: CGAN-FC, CWGAN, CGAN-LSTM and a conditional VAE.

Every model maps ``(noise, condition[p x d]) -> target[q x d]`` in scaled space. The
handle keeps the scaler so callers can condition and receive paths in return units.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .data import ScalerState, SequenceSet, transform
from .errors import DivergedLoss, ShapeMismatch, UntrainedModel
from .histsim import ScenarioCube
from .nn import LSTM, MLP, Dense, Module, OptimizerState, Tensor, backward, concat
from .nn.checkpoint import load_checkpoint, save_checkpoint

log = logging.getLogger(__name__)

KINDS = ("cgan_fc", "cwgan", "cgan_lstm", "cvae")
MAX_NAN_BATCHES = 3


def default_noise_dim(d: int, per_step: bool = False) -> int:
    """30 (3 per step) for curve panels, 20 (2 per step) for bivariate data."""
    base = 3 if d >= 3 else 2
    return base if per_step else 10 * base


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 128
    learning_rate: float = 2e-4
    noise_dim: int = 20
    clip_value: float = 0.1
    adversary_steps: int = 1
    seed: int = 0
    hidden: tuple = (64, 64, 64)
    lstm_hidden: int = 32
    optimizer: str = "adam"
    beta1: float = 0.5
    non_saturating: bool = True
    recon_weight: float = 3.0
    adversary_lr_scale: float = 1.0
    generator_ema: float = 0.0

    def __post_init__(self):
        for name in ("epochs", "batch_size", "noise_dim", "adversary_steps", "lstm_hidden"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1 (a generator needs at least one noise input)")
        if not self.learning_rate > 0 or not self.clip_value > 0:
            raise ValueError("learning_rate and clip_value must be > 0")
        if any(h < 1 for h in self.hidden):
            raise ValueError("hidden widths must be >= 1")
        if not self.adversary_lr_scale > 0 or not 0 <= self.generator_ema < 1:
            raise ValueError("adversary_lr_scale must be > 0 and generator_ema in [0, 1)")


def default_train_config(kind: str, d: int, **overrides) -> TrainConfig:
    """Conventional per-model defaults; keyword overrides win."""
    if kind not in KINDS:
        raise ValueError(f"unknown model kind {kind!r}")
    base = dict(noise_dim=default_noise_dim(d, per_step=kind == "cgan_lstm"))
    if kind == "cgan_fc":
        base.update(clip_value=0.1, adversary_steps=1, optimizer="adam", learning_rate=2e-4, adversary_lr_scale=4.0)
    elif kind == "cwgan":
        base.update(clip_value=0.01, adversary_steps=5, optimizer="rmsprop", learning_rate=1e-4)
    elif kind == "cgan_lstm":
        base.update(clip_value=0.075, adversary_steps=1, optimizer="adam", learning_rate=1e-3)
    else:
        base.update(optimizer="adam", learning_rate=1e-3, beta1=0.9)
    base.update(overrides)
    return TrainConfig(**base)


@dataclass
class GenModelHandle:
    kind: str
    generator: Module
    adversary: Module
    p: int
    q: int
    d: int
    noise_dim: int
    config: TrainConfig
    scaler: ScalerState = None
    history: list = field(default_factory=list)
    trained: bool = False

    def noise_shape(self, n: int) -> tuple:
        return (n, self.q, self.noise_dim) if self.kind == "cgan_lstm" else (n, self.noise_dim)

    def sample_scaled(self, cond, noise) -> np.ndarray:
        """Generator pass in scaled space: ``cond[n, p, d]``, noise per ``noise_shape``."""
        return _generate(self, Tensor(cond), Tensor(noise)).value


# ---------------------------------------------------------------------------
# network wiring
# ---------------------------------------------------------------------------


class LstmGenerator(Module):
    """Encoder LSTM over the condition hands its terminal (a, c) to a decoder LSTM fed with noise."""

    def __init__(self, d, noise_dim, hidden, rng):
        self.encoder = LSTM(d, hidden, rng)
        self.decoder = LSTM(noise_dim, hidden, rng)
        self.head = Dense(hidden, d, "linear", rng)

    def encode(self, cond: Tensor):
        return self.encoder(cond)[1]

    def __call__(self, cond: Tensor, noise: Tensor) -> Tensor:
        state = self.encode(cond)
        out, _ = self.decoder(noise, state)
        n, q, h = out.shape
        return self.head(out.reshape(n * q, h)).reshape(n, q, -1)


class LstmCritic(Module):
    def __init__(self, d, hidden, rng):
        self.rnn = LSTM(d, hidden, rng)
        self.head = Dense(hidden, 1, "linear", rng)

    def __call__(self, series: Tensor) -> Tensor:
        _, (a, _) = self.rnn(series)
        return self.head(a)


def _flat(t: Tensor) -> Tensor:
    return t.reshape(t.shape[0], -1)


def build_model(kind: str, p: int, q: int, d: int, cfg: TrainConfig, scaler=None) -> GenModelHandle:
    if kind not in KINDS:
        raise ValueError(f"unknown model kind {kind!r}")
    rng = np.random.default_rng(cfg.seed)
    hid = list(cfg.hidden)
    if kind in ("cgan_fc", "cwgan"):
        gen = MLP([cfg.noise_dim + p * d, *hid, q * d], "relu", "linear", rng)
        adv = MLP([(p + q) * d, *hid, 1], "relu", "linear", rng)
    elif kind == "cgan_lstm":
        gen = LstmGenerator(d, cfg.noise_dim, cfg.lstm_hidden, rng)
        adv = LstmCritic(d, cfg.lstm_hidden, rng)
    else:
        # decoder is the generator; the encoder plays the adversary slot
        gen = MLP([cfg.noise_dim + p * d, *hid, q * d], "relu", "linear", rng)
        adv = MLP([(p + q) * d, *hid, 2 * cfg.noise_dim], "relu", "linear", rng)
    return GenModelHandle(kind, gen, adv, p, q, d, cfg.noise_dim, cfg, scaler)


def _generate(m: GenModelHandle, cond: Tensor, noise: Tensor) -> Tensor:
    n = cond.shape[0]
    if m.kind == "cgan_lstm":
        return m.generator(cond, noise)
    out = m.generator(concat([noise, _flat(cond)], axis=1))
    return out.reshape(n, m.q, m.d)


def _score(m: GenModelHandle, cond: Tensor, target: Tensor) -> Tensor:
    """Adversary output (logit or critic value) for a full window."""
    if m.kind == "cgan_lstm":
        return m.adversary(concat([cond, target], axis=1))
    return m.adversary(concat([_flat(target), _flat(cond)], axis=1))


def gan_losses(real_score: Tensor, fake_score: Tensor, kind: str, non_saturating: bool = True):
    """(adversary loss, generator loss) for the binary or Wasserstein game."""
    if kind == "cwgan":
        return fake_score.mean() - real_score.mean(), -fake_score.mean()
    # -log D(real) - log(1 - D(fake)) with D = sigmoid(logit)
    adv = (-real_score).softplus().mean() + fake_score.softplus().mean()
    gen = (-fake_score).softplus().mean() if non_saturating else -fake_score.softplus().mean()
    return adv, gen


def vae_terms(m: GenModelHandle, cond: Tensor, target: Tensor, eps: np.ndarray):
    """Reconstruction and KL terms of the conditional ELBO, both averaged over the batch."""
    k = m.noise_dim
    enc = m.adversary(concat([_flat(target), _flat(cond)], axis=1))
    mu, logvar = enc[:, :k], enc[:, k:]
    z = mu + (logvar * 0.5).exp() * Tensor(eps)
    recon = _generate(m, cond, z)
    n = cond.shape[0]
    rec = (recon - target).square().sum() * (1.0 / n)
    kl = kl_standard_normal(mu, logvar)
    return rec, kl


def kl_standard_normal(mu, logvar) -> Tensor:
    """KL(N(mu, e^logvar) || N(0, I)) summed over latent dims, averaged over rows."""
    mu, logvar = Tensor._wrap(mu), Tensor._wrap(logvar)
    n = mu.shape[0] if mu.value.ndim > 1 else 1
    return (mu.square() + logvar.exp() - logvar - 1.0).sum() * (0.5 / n)


def clip_weights(module: Module, c: float):
    for prm in module.parameters().values():
        np.clip(prm.value, -c, c, out=prm.value)


def _finite(loss: Tensor, params: dict) -> bool:
    return np.isfinite(loss.value).all() and all(np.isfinite(t.grad).all() for t in params.values())


def _optimizer(cfg: TrainConfig) -> OptimizerState:
    return OptimizerState(cfg.optimizer, cfg.learning_rate, beta1=cfg.beta1)


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


def _check_train(train: SequenceSet):
    if len(train) < 1:
        raise ValueError("empty training set")
    if not np.isfinite(train.data).all():
        raise ValueError("training windows contain non-finite values")


class _NanGuard:
    def __init__(self, kind):
        self.kind, self.streak = kind, 0

    def update(self, ok: bool, epoch: int, losses):
        self.streak = 0 if ok else self.streak + 1
        if self.streak >= MAX_NAN_BATCHES:
            raise DivergedLoss(
                f"{self.kind}: {MAX_NAN_BATCHES} consecutive non-finite batches at epoch {epoch}; last losses {losses}"
            )
        return ok


def _train_gan(m: GenModelHandle, train: SequenceSet) -> GenModelHandle:
    cfg = m.config
    rng = np.random.default_rng(cfg.seed + 1)
    opt_g = _optimizer(cfg)
    opt_a = _optimizer(replace(cfg, learning_rate=cfg.learning_rate * cfg.adversary_lr_scale))
    g_params, a_params = m.generator.parameters(), m.adversary.parameters()
    ema = {k: v.value.copy() for k, v in g_params.items()} if cfg.generator_ema > 0 else None
    clip = cfg.clip_value
    clip_weights(m.adversary, clip)
    guard = _NanGuard(m.kind)
    cond_all, tgt_all = train.condition, train.target
    n = len(train)
    bs = min(cfg.batch_size, n)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        batches = [order[i : i + bs] for i in range(0, n - bs + 1, bs)] or [order]
        a_losses, g_losses = [], []
        for start in range(0, len(batches), cfg.adversary_steps):
            for rows in batches[start : start + cfg.adversary_steps]:
                cond, real = Tensor(cond_all[rows]), Tensor(tgt_all[rows])
                fake = _generate(m, cond, Tensor(rng.standard_normal(m.noise_shape(len(rows))))).value
                a_loss, _ = gan_losses(_score(m, cond, real), _score(m, cond, Tensor(fake)), m.kind, cfg.non_saturating)
                m.adversary.zero_grad()
                backward(a_loss)
                if guard.update(_finite(a_loss, a_params), epoch, (a_loss.value,)):
                    opt_a.step(a_params)
                    clip_weights(m.adversary, clip)
                    a_losses.append(float(a_loss.value))
            rows = batches[start]
            cond = Tensor(cond_all[rows])
            fake = _generate(m, cond, Tensor(rng.standard_normal(m.noise_shape(len(rows)))))
            _, g_loss = gan_losses(Tensor(np.zeros((1, 1))), _score(m, cond, fake), m.kind, cfg.non_saturating)
            m.generator.zero_grad()
            m.adversary.zero_grad()
            backward(g_loss)
            if guard.update(_finite(g_loss, g_params), epoch, (g_loss.value,)):
                opt_g.step(g_params)
                g_losses.append(float(g_loss.value))
                if ema is not None:
                    for k, v in g_params.items():
                        ema[k] += (1.0 - cfg.generator_ema) * (v.value - ema[k])
        m.history.append({
            "epoch": epoch,
            "adversary_loss": float(np.mean(a_losses)) if a_losses else float("nan"),
            "generator_loss": float(np.mean(g_losses)) if g_losses else float("nan"),
        })
    if ema is not None:
        # the averaged weights damp the rotation between generator and adversary
        for k, v in g_params.items():
            v.value[...] = ema[k]
    m.adversary.zero_grad()
    m.generator.zero_grad()
    m.trained = True
    return m


def _train(kind: str, train: SequenceSet, cfg: TrainConfig, scaler) -> GenModelHandle:
    _check_train(train)
    m = build_model(kind, train.p, train.q, train.data.shape[2], cfg, scaler)
    log.info("training %s on %d windows for %d epochs", kind, len(train), cfg.epochs)
    if kind == "cvae":
        return _train_vae(m, train)
    return _train_gan(m, train)


def train_cgan_fc(train: SequenceSet, cfg: TrainConfig = None, scaler=None) -> GenModelHandle:
    cfg = cfg or default_train_config("cgan_fc", train.data.shape[2])
    return _train("cgan_fc", train, cfg, scaler)


def train_cwgan(train: SequenceSet, cfg: TrainConfig = None, scaler=None) -> GenModelHandle:
    cfg = cfg or default_train_config("cwgan", train.data.shape[2])
    return _train("cwgan", train, cfg, scaler)


def train_cgan_lstm(train: SequenceSet, cfg: TrainConfig = None, scaler=None) -> GenModelHandle:
    cfg = cfg or default_train_config("cgan_lstm", train.data.shape[2])
    return _train("cgan_lstm", train, cfg, scaler)


def train_cvae(train: SequenceSet, cfg: TrainConfig = None, scaler=None) -> GenModelHandle:
    cfg = cfg or default_train_config("cvae", train.data.shape[2])
    return _train("cvae", train, cfg, scaler)


TRAINERS = {"cgan_fc": train_cgan_fc, "cwgan": train_cwgan, "cgan_lstm": train_cgan_lstm, "cvae": train_cvae}


def _train_vae(m: GenModelHandle, train: SequenceSet) -> GenModelHandle:
    cfg = m.config
    rng = np.random.default_rng(cfg.seed + 1)
    opt = _optimizer(cfg)
    params = {**{"dec." + k: v for k, v in m.generator.parameters().items()},
              **{"enc." + k: v for k, v in m.adversary.parameters().items()}}
    guard = _NanGuard(m.kind)
    n = len(train)
    bs = min(cfg.batch_size, n)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        recs, kls = [], []
        for i in range(0, n - bs + 1, bs):
            rows = order[i : i + bs]
            cond, tgt = Tensor(train.condition[rows]), Tensor(train.target[rows])
            rec, kl = vae_terms(m, cond, tgt, rng.standard_normal((len(rows), m.noise_dim)))
            loss = rec * cfg.recon_weight + kl
            m.generator.zero_grad()
            m.adversary.zero_grad()
            backward(loss)
            if guard.update(_finite(loss, params), epoch, (rec.value, kl.value)):
                opt.step(params)
                recs.append(float(rec.value))
                kls.append(float(kl.value))
        m.history.append({"epoch": epoch, "reconstruction": float(np.mean(recs)), "kl": float(np.mean(kls)),
                          "loss": float(cfg.recon_weight * np.mean(recs) + np.mean(kls))})
    m.generator.zero_grad()
    m.adversary.zero_grad()
    m.trained = True
    return m


# ---------------------------------------------------------------------------
# generation
# ---------------------------------------------------------------------------


def _prepare_condition(m: GenModelHandle, condition, scaled: bool) -> np.ndarray:
    c = np.asarray(condition, dtype=float)
    if c.ndim == 2:
        c = c[None]
    if c.shape[1:] != (m.p, m.d):
        raise ShapeMismatch(f"condition must be [p={m.p} x d={m.d}], got {c.shape[1:]}")
    if m.scaler is not None and not scaled:
        c = transform(m.scaler, c, "forward")
    return c


def _unscale(m, x, scaled):
    return transform(m.scaler, x, "inverse") if m.scaler is not None and not scaled else x


def generate_short(model: GenModelHandle, condition, n_paths: int, seed, noise=None, scaled: bool = False) -> ScenarioCube:
    """One generator pass per path: ``n_paths`` windows of q days for a [p x d] condition."""
    if not model.trained:
        raise UntrainedModel(f"{model.kind} has not been fitted")
    c = _prepare_condition(model, condition, scaled)
    if noise is None:
        noise = np.random.default_rng(seed).standard_normal(model.noise_shape(n_paths))
    noise = np.asarray(noise, dtype=float)
    out = model.sample_scaled(np.broadcast_to(c, (noise.shape[0], model.p, model.d)), noise)
    return ScenarioCube(_unscale(model, out, scaled))


def generate_many(model: GenModelHandle, conditions, n_paths: int, seed, chunk_rows: int = 50_000,
                  scaled: bool = False) -> np.ndarray:
    """Batched ``generate_short`` over many conditions: [n_conditions, n_paths, q, d]."""
    if not model.trained:
        raise UntrainedModel(f"{model.kind} has not been fitted")
    c = _prepare_condition(model, conditions, scaled)
    rng = np.random.default_rng(seed)
    out = np.empty((c.shape[0], n_paths, model.q, model.d))
    per = max(1, chunk_rows // n_paths)
    for i in range(0, c.shape[0], per):
        block = c[i : i + per]
        k = block.shape[0]
        cond = np.repeat(block, n_paths, axis=0)
        noise = rng.standard_normal(model.noise_shape(k * n_paths))
        out[i : i + k] = model.sample_scaled(cond, noise).reshape(k, n_paths, model.q, model.d)
    return _unscale(model, out, scaled)


def generate_long(model: GenModelHandle, condition, total_days: int, seed, scaled: bool = False) -> np.ndarray:
    """Iterate q-day passes, feeding the last p generated days back as the next condition."""
    if not model.trained:
        raise UntrainedModel(f"{model.kind} has not been fitted")
    if total_days < model.q:
        raise ValueError(f"total_days must be >= q={model.q}")
    hist = _prepare_condition(model, condition, scaled)[0]
    rng = np.random.default_rng(seed)
    blocks = []
    n_pass = -(-total_days // model.q)
    for _ in range(n_pass):
        noise = rng.standard_normal(model.noise_shape(1))
        block = model.sample_scaled(hist[None, -model.p :], noise)[0]
        blocks.append(block)
        hist = np.vstack([hist, block])
    path = np.vstack(blocks)[:total_days]
    return _unscale(model, path, scaled)


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


def save_model(model: GenModelHandle, path) -> None:
    arrays = {"gen." + k: v for k, v in model.generator.parameters().items()}
    arrays.update({"adv." + k: v for k, v in model.adversary.parameters().items()})
    meta = {"kind": model.kind, "p": model.p, "q": model.q, "d": model.d, "noise_dim": model.noise_dim,
            "seed": model.config.seed, "config": asdict(model.config), "trained": model.trained}
    if model.scaler is not None:
        meta["scaler_kind"] = model.scaler.kind
        arrays["scaler.location"] = model.scaler.location
        arrays["scaler.scale"] = model.scaler.scale
    save_checkpoint(path, arrays, meta)


def load_model(path) -> GenModelHandle:
    arrays, meta = load_checkpoint(path)
    cfg_dict = meta["config"]
    cfg_dict["hidden"] = tuple(cfg_dict["hidden"])
    cfg = TrainConfig(**cfg_dict)
    scaler = None
    if "scaler_kind" in meta:
        scaler = ScalerState(meta["scaler_kind"], arrays.pop("scaler.location"), arrays.pop("scaler.scale"))
    m = build_model(meta["kind"], meta["p"], meta["q"], meta["d"], replace(cfg, noise_dim=meta["noise_dim"]), scaler)
    for prefix, module in (("gen.", m.generator), ("adv.", m.adversary)):
        for k, t in module.parameters().items():
            t.value[...] = arrays[prefix + k]
    m.trained = bool(meta.get("trained", True))
    return m
