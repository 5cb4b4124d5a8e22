"""Dense and LSTM building blocks on top of the autodiff engine."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeMismatch
from .autodiff import Tensor, concat, stack

ACTIVATIONS = ("relu", "sigmoid", "tanh", "linear")


def activate(x: Tensor, kind: str) -> Tensor:
    if kind == "relu":
        return x.relu()
    if kind == "sigmoid":
        return x.sigmoid()
    if kind == "tanh":
        return x.tanh()
    if kind == "linear":
        return x
    raise ValueError(f"unknown activation {kind!r}")


def glorot_uniform(rng, fan_in, fan_out, shape=None) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape or (fan_in, fan_out))


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    n_in: int
    n_out: int
    activation: str = "linear"

    def __post_init__(self):
        if self.kind not in ("dense", "lstm"):
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.n_in < 1 or self.n_out < 1:
            raise ValueError("layer widths must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


class Module:
    """Anything holding named parameter tensors."""

    def parameters(self) -> dict:
        out = {}
        for key, val in vars(self).items():
            if isinstance(val, Tensor) and val.requires_grad:
                out[key] = val
            elif isinstance(val, Module):
                out.update({f"{key}.{k}": v for k, v in val.parameters().items()})
            elif isinstance(val, (list, tuple)):
                for i, m in enumerate(val):
                    if isinstance(m, Module):
                        out.update({f"{key}.{i}.{k}": v for k, v in m.parameters().items()})
        return out

    def zero_grad(self):
        for p in self.parameters().values():
            p.zero_grad()

    def n_parameters(self) -> int:
        return sum(p.value.size for p in self.parameters().values())


class Dense(Module):
    def __init__(self, n_in: int, n_out: int, activation: str = "linear", rng=None):
        self.spec = LayerSpec("dense", n_in, n_out, activation)
        rng = np.random.default_rng(rng)
        self.W = Tensor(glorot_uniform(rng, n_in, n_out), requires_grad=True)
        self.b = Tensor(np.zeros(n_out), requires_grad=True)

    def __call__(self, x) -> Tensor:
        x = Tensor._wrap(x)
        if x.shape[-1] != self.spec.n_in:
            raise ShapeMismatch(f"dense layer expects width {self.spec.n_in}, got {x.shape[-1]}")
        return activate(x @ self.W + self.b, self.spec.activation)


def forward_dense(layer: Dense, x) -> Tensor:
    return layer(x)


class MLP(Module):
    """Stack of dense layers: hidden activation everywhere, ``out_activation`` on the last."""

    def __init__(self, widths, hidden="relu", out_activation="linear", rng=None):
        rng = np.random.default_rng(rng)
        widths = list(widths)
        self.layers = [
            Dense(a, b, hidden if i < len(widths) - 2 else out_activation, rng)
            for i, (a, b) in enumerate(zip(widths[:-1], widths[1:]))
        ]

    def __call__(self, x) -> Tensor:
        for layer in self.layers:
            x = layer(x)
        return x


class LSTMCell(Module):
    """Gates from an affine map of ``[a_prev, x_t]``; columns ordered input, forget, output, candidate."""

    def __init__(self, n_in: int, n_hidden: int, rng=None):
        self.spec = LayerSpec("lstm", n_in, n_hidden, "tanh")
        rng = np.random.default_rng(rng)
        fan = n_in + n_hidden
        self.W = Tensor(glorot_uniform(rng, fan, 4 * n_hidden), requires_grad=True)
        self.b = Tensor(np.zeros(4 * n_hidden), requires_grad=True)

    @property
    def hidden(self) -> int:
        return self.spec.n_out

    def __call__(self, x_t, a_prev, c_prev):
        x_t = Tensor._wrap(x_t)
        if x_t.shape[-1] != self.spec.n_in:
            raise ShapeMismatch(f"LSTM cell expects input width {self.spec.n_in}, got {x_t.shape[-1]}")
        h = self.hidden
        z = concat([a_prev, x_t], axis=-1) @ self.W + self.b
        i = z[:, :h].sigmoid()
        f = z[:, h : 2 * h].sigmoid()
        o = z[:, 2 * h : 3 * h].sigmoid()
        cand = z[:, 3 * h :].tanh()
        c = i * cand + f * c_prev
        a = o * c.tanh()
        return a, c


def forward_lstm_cell(cell: LSTMCell, x_t, a_prev, c_prev):
    return cell(x_t, a_prev, Tensor._wrap(c_prev))


class LSTM(Module):
    """Unrolled LSTM over ``x[batch, steps, features]``; returns outputs and terminal state."""

    def __init__(self, n_in: int, n_hidden: int, rng=None):
        self.cell = LSTMCell(n_in, n_hidden, rng)

    def __call__(self, x, state=None):
        x = Tensor._wrap(x)
        batch, steps = x.shape[0], x.shape[1]
        h = self.cell.hidden
        if state is None:
            a, c = Tensor(np.zeros((batch, h))), Tensor(np.zeros((batch, h)))
        else:
            a, c = state
        outs = []
        for t in range(steps):
            a, c = self.cell(x[:, t, :], a, c)
            outs.append(a)
        return stack(outs, axis=1), (a, c)
