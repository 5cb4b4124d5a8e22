import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskgen.data import ReturnPanel, fit_scaler, make_sequences, transform
from riskgen.dgp import simulate_garch_dgp, reference_garch_params
from riskgen.errors import DivergedLoss, UntrainedModel
from riskgen.genmodels import (KINDS, TRAINERS, TrainConfig, build_model, default_noise_dim, default_train_config,
                               generate_long, generate_many, generate_short, kl_standard_normal, load_model,
                               save_model)
from riskgen.kpi import pooled_acf
from riskgen.nn import Tensor


def seqs(x, p=10, q=10):
    x = np.asarray(x, dtype=float)
    panel = ReturnPanel(np.arange(len(x)), tuple(f"c{i}" for i in range(x.shape[1])), x)
    return make_sequences(panel, p, q)


def ar1_panel(n, phi, d, seed):
    rng = np.random.default_rng(seed)
    e = rng.standard_normal((n, d))
    x = np.zeros((n, d))
    for t in range(1, n):
        x[t] = phi * x[t - 1] + e[t]
    return x


def garch_sequences(n_days=1500, seed=3):
    _, ret = simulate_garch_dgp(reference_garch_params("normal"), n_days, seed)
    scaled = transform(fit_scaler(ret), ret.values)
    return seqs(scaled)


def quick(kind, d, **kw):
    kw.setdefault("epochs", 2)
    kw.setdefault("hidden", (8, 8))
    kw.setdefault("lstm_hidden", 6)
    return default_train_config(kind, d, **kw)


@pytest.fixture(scope="module")
def toy():
    return seqs(np.random.default_rng(0).standard_normal((400, 2)))


# ---------------------------------------------------------------- configuration


def test_noise_dim_defaults():
    assert default_noise_dim(9) == 30 and default_noise_dim(2) == 20
    assert default_noise_dim(9, per_step=True) == 3 and default_noise_dim(2, per_step=True) == 2


def test_zero_noise_dim_is_rejected():
    with pytest.raises(ValueError):
        TrainConfig(noise_dim=0)
    with pytest.raises(ValueError):
        TrainConfig(clip_value=0.0)


def test_per_kind_defaults():
    assert default_train_config("cwgan", 2).clip_value == 0.01
    assert default_train_config("cwgan", 2).adversary_steps == 5
    assert default_train_config("cgan_lstm", 2).clip_value == 0.075
    assert default_train_config("cgan_fc", 2).clip_value == 0.1
    with pytest.raises(ValueError):
        default_train_config("diffusion", 2)


# ---------------------------------------------------------------- shapes and wiring


@settings(max_examples=12)
@given(kind=st.sampled_from(KINDS), width=st.integers(1, 12), d=st.integers(1, 3), p=st.integers(1, 6),
       q=st.integers(1, 6), n=st.integers(1, 5))
def test_untrained_generator_shape(kind, width, d, p, q, n):
    cfg = TrainConfig(noise_dim=3, hidden=(width, width), lstm_hidden=width)
    m = build_model(kind, p, q, d, cfg)
    out = m.sample_scaled(np.zeros((n, p, d)), np.random.default_rng(0).standard_normal(m.noise_shape(n)))
    assert out.shape == (n, q, d)


def test_untrained_model_refuses_to_generate():
    m = build_model("cgan_fc", 10, 10, 1, TrainConfig())
    with pytest.raises(UntrainedModel):
        generate_short(m, np.zeros((10, 1)), 3, seed=0)


@pytest.mark.parametrize("kind", ["cgan_fc", "cwgan", "cgan_lstm"])
def test_adversary_weights_within_clip_after_training(kind, toy):
    cfg = quick(kind, 2, clip_value=0.02 if kind != "cwgan" else 0.01)
    m = TRAINERS[kind](toy, cfg)
    for w in m.adversary.parameters().values():
        assert np.abs(w.value).max() <= cfg.clip_value
    assert len(m.history) == cfg.epochs and m.trained


def test_lstm_decoder_starts_from_encoder_terminal_state():
    m = build_model("cgan_lstm", 10, 10, 2, TrainConfig(noise_dim=2, lstm_hidden=5))
    cond = np.random.default_rng(1).standard_normal((4, 10, 2))
    seen = {}
    decoder = m.generator.decoder
    original = type(decoder).__call__

    def spy(self, x, state=None):
        seen["state"] = state
        seen["noise_shape"] = x.shape
        return original(self, x, state)

    type(decoder).__call__ = spy
    try:
        m.generator(Tensor(cond), Tensor(np.zeros((4, 10, 2))))
    finally:
        type(decoder).__call__ = original
    a_enc, c_enc = m.generator.encode(Tensor(cond))
    np.testing.assert_array_equal(seen["state"][0].value, a_enc.value)
    np.testing.assert_array_equal(seen["state"][1].value, c_enc.value)
    # one noise vector of width noise_dim for each of the q generated steps
    assert seen["noise_shape"] == (4, 10, 2) and m.noise_shape(4) == (4, 10, 2)


# ---------------------------------------------------------------- CVAE pieces


def test_kl_vanishes_at_the_prior():
    assert float(kl_standard_normal(np.zeros((5, 3)), np.zeros((5, 3))).value) == 0.0
    assert float(kl_standard_normal(np.ones((1, 2)), np.zeros((1, 2))).value) == pytest.approx(1.0)


def test_cvae_reconstruction_decreases_early():
    data = seqs(np.random.default_rng(4).standard_normal((1200, 1)))
    m = TRAINERS["cvae"](data, default_train_config("cvae", 1, epochs=11, seed=2))
    rec = [h["reconstruction"] for h in m.history]
    drops = sum(b < a for a, b in zip(rec, rec[1:]))
    assert drops >= 8, rec


def test_cvae_matches_iid_stdev():
    data = seqs(np.random.default_rng(5).standard_normal((3000, 1)))
    m = TRAINERS["cvae"](data, default_train_config("cvae", 1, epochs=200))
    g = generate_short(m, data.condition[100], 10_000, seed=1).paths
    assert abs(g.std() / data.target.std() - 1.0) < 0.2


def test_cvae_zero_latent_gives_identical_paths(toy):
    m = TRAINERS["cvae"](toy, quick("cvae", 2))
    cube = generate_short(m, toy.condition[0], 6, seed=0, noise=np.zeros((6, m.noise_dim))).paths
    assert np.ptp(cube, axis=0).max() == 0.0


# ---------------------------------------------------------------- distribution oracles


def test_cgan_fc_matches_iid_normal():
    data = seqs(np.random.default_rng(0).standard_normal((3000, 1)))
    m = TRAINERS["cgan_fc"](data, default_train_config("cgan_fc", 1, epochs=150))
    g = generate_short(m, data.condition[0], 10_000, seed=1).paths[:, 0, 0]
    assert abs(g.mean()) < 0.1
    assert abs(g.std() - 1.0) < 0.15


@pytest.mark.slow
def test_cwgan_reproduces_ar1_autocorrelation():
    x = ar1_panel(4000, 0.5, 2, seed=0)
    data = seqs(x)
    m = TRAINERS["cwgan"](data, default_train_config("cwgan", 2, epochs=500))
    for w in m.adversary.parameters().values():
        assert np.abs(w.value).max() <= 0.01
    path = generate_long(m, data.condition[0], 5000, seed=2)
    for j in range(2):
        rho = pooled_acf(path[None, :, j], 1, "x")[0]
        assert abs(rho - 0.5) < 0.15


def test_cwgan_critic_loss_finite_on_garch_data():
    m = TRAINERS["cwgan"](garch_sequences(), default_train_config("cwgan", 2, epochs=5, hidden=(32, 32)))
    assert all(np.isfinite(h["adversary_loss"]) and np.isfinite(h["generator_loss"]) for h in m.history)


@pytest.mark.slow
def test_cgan_lstm_long_path_shows_volatility_clustering():
    data = garch_sequences(n_days=251 * 12, seed=11)
    m = TRAINERS["cgan_lstm"](data, default_train_config("cgan_lstm", 2, epochs=60))
    path = generate_long(m, data.condition[0], 3000, seed=4)
    rho = [pooled_acf(path[None, :, j], 1, "x2")[0] for j in range(2)]
    assert max(rho) > 0.0, rho


# ---------------------------------------------------------------- generation


@pytest.fixture(scope="module")
def fitted(toy):
    return TRAINERS["cgan_fc"](toy, quick("cgan_fc", 2))


def test_generate_short_is_deterministic_per_seed(fitted, toy):
    a = generate_short(fitted, toy.condition[3], 50, seed=9).paths
    b = generate_short(fitted, toy.condition[3], 50, seed=9).paths
    c = generate_short(fitted, toy.condition[3], 50, seed=10).paths
    assert a.shape == (50, 10, 2)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_generate_many_agrees_with_single_condition_shape(fitted, toy):
    out = generate_many(fitted, toy.condition[:7], 4, seed=1, chunk_rows=9)
    assert out.shape == (7, 4, 10, 2)
    np.testing.assert_array_equal(out, generate_many(fitted, toy.condition[:7], 4, seed=1, chunk_rows=9))


def test_generate_long_single_pass_equals_short(fitted, toy):
    cond = toy.condition[5]
    long = generate_long(fitted, cond, 10, seed=3)
    short = generate_short(fitted, cond, 1, seed=3).paths[0]
    np.testing.assert_array_equal(long, short)


def test_generate_long_iterates_and_truncates(fitted, toy):
    calls = []
    original = fitted.sample_scaled

    def counting(cond, noise):
        calls.append(cond.copy())
        return original(cond, noise)

    fitted.sample_scaled = counting
    try:
        path = generate_long(fitted, toy.condition[0], 502, seed=1)
    finally:
        del fitted.sample_scaled
    assert path.shape == (502, 2) and len(calls) == 51
    # the second pass is conditioned on the first generated block
    np.testing.assert_array_equal(calls[1][0], path[:10])
    np.testing.assert_array_equal(path, generate_long(fitted, toy.condition[0], 502, seed=1))
    with pytest.raises(ValueError):
        generate_long(fitted, toy.condition[0], 9, seed=1)


def test_scaled_generation_round_trip(toy):
    rng = np.random.default_rng(6)
    raw = rng.normal(0.02, 3.0, (400, 2))
    scaler = fit_scaler(raw)
    data = seqs(transform(scaler, raw))
    m = TRAINERS["cgan_fc"](data, quick("cgan_fc", 2), scaler=scaler)
    cond_raw = raw[:10]
    noise = rng.standard_normal(m.noise_shape(20))
    direct = generate_short(m, cond_raw, 20, seed=0, noise=noise).paths
    in_scaled = generate_short(m, transform(scaler, cond_raw), 20, seed=0, noise=noise, scaled=True).paths
    np.testing.assert_allclose(transform(scaler, in_scaled, "inverse"), direct, rtol=0, atol=1e-10)


# ---------------------------------------------------------------- failure and persistence


def test_nan_training_data_is_rejected():
    x = np.random.default_rng(0).standard_normal((200, 1))
    x[50] = np.nan
    with pytest.raises(ValueError):
        TRAINERS["cgan_fc"](seqs(x), quick("cgan_fc", 1))


def test_divergence_aborts_with_diagnostics():
    # an absurd learning rate drives the weights to overflow within a few batches
    data = seqs(1e150 * np.random.default_rng(0).standard_normal((600, 1)))
    with pytest.raises(DivergedLoss, match="consecutive non-finite"):
        TRAINERS["cvae"](data, quick("cvae", 1, epochs=20, learning_rate=1e3, batch_size=16))


@pytest.mark.parametrize("kind", KINDS)
def test_checkpoint_round_trip(kind, toy, tmp_path):
    scaler = fit_scaler(np.random.default_rng(2).normal(1.0, 2.0, (50, 2)))
    m = TRAINERS[kind](toy, quick(kind, 2, epochs=1), scaler=scaler)
    save_model(m, tmp_path / "m.rgck")
    back = load_model(tmp_path / "m.rgck")
    assert (back.kind, back.p, back.q, back.d, back.noise_dim) == (kind, 10, 10, 2, m.noise_dim)
    a = generate_short(m, toy.condition[0], 5, seed=1).paths
    b = generate_short(back, toy.condition[0], 5, seed=1).paths
    np.testing.assert_array_equal(a, b)
