"""First-order optimizers operating in place on parameter arrays."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeMismatch


@dataclass
class OptimizerState:
    kind: str = "adam"
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    rho: float = 0.9
    eps: float = 1e-8
    step_count: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("adam", "rmsprop", "sgd"):
            raise ValueError(f"unknown optimizer {self.kind!r}")
        if not self.lr > 0:
            raise ValueError("learning rate must be > 0")

    def step(self, params: dict):
        """Update a ``{name: Tensor}`` mapping from its accumulated gradients."""
        names = list(params)
        optimizer_step(self, {k: params[k].value for k in names}, {k: params[k].grad for k in names})


def optimizer_step(state: OptimizerState, params: dict, grads: dict) -> dict:
    """One update of every array in ``params`` (modified in place and returned)."""
    state.step_count += 1
    t = state.step_count
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ShapeMismatch(f"gradient {g.shape} vs parameter {p.shape} for {name}")
        if state.kind == "sgd":
            p -= state.lr * g
        elif state.kind == "rmsprop":
            v = state.v.setdefault(name, np.zeros_like(p))
            v *= state.rho
            v += (1.0 - state.rho) * g * g
            p -= state.lr * g / (np.sqrt(v) + state.eps)
        else:
            m = state.m.setdefault(name, np.zeros_like(p))
            v = state.v.setdefault(name, np.zeros_like(p))
            m *= state.beta1
            m += (1.0 - state.beta1) * g
            v *= state.beta2
            v += (1.0 - state.beta2) * g * g
            mhat = m / (1.0 - state.beta1**t)
            vhat = v / (1.0 - state.beta2**t)
            p -= state.lr * mhat / (np.sqrt(vhat) + state.eps)
    return params
