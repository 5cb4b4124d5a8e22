"""Finite-difference verification of reverse-mode gradients."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import backward

REL_FLOOR = 1e-6


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_error: float
    per_parameter: dict
    n_checked: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def _rel(a, b):
    return np.abs(a - b) / np.maximum(np.abs(a) + np.abs(b), REL_FLOOR)


def grad_check(loss_fn, params: dict, tolerance: float = 1e-4, max_entries=None, rng=None) -> GradCheckReport:
    """Compare reverse-mode gradients of ``loss_fn()`` with central differences.

    ``loss_fn`` rebuilds the scalar loss from the current values of ``params``
    (a ``{name: Tensor}`` mapping). The step is ``1e-5 * max(1, |w|)``. With
    ``max_entries`` only a random subset of each parameter's entries is perturbed.
    """
    rng = np.random.default_rng(rng)
    for p in params.values():
        p.zero_grad()
    backward(loss_fn())
    analytic = {k: p.grad.copy() for k, p in params.items()}

    worst, per, count = 0.0, {}, 0
    for name, p in params.items():
        flat = p.value.reshape(-1)
        idx = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            idx = rng.choice(flat.size, size=max_entries, replace=False)
        errs = []
        for j in idx:
            w = flat[j]
            h = 1e-5 * max(1.0, abs(w))
            # divide by the step actually taken, which absorbs the rounding of w +/- h
            flat[j] = w + h
            w_up = flat[j]
            up = float(loss_fn().value)
            flat[j] = w - h
            w_down = flat[j]
            down = float(loss_fn().value)
            flat[j] = w
            num = (up - down) / (w_up - w_down)
            errs.append(_rel(analytic[name].reshape(-1)[j], num))
        e = float(max(errs)) if errs else 0.0
        per[name] = e
        worst = max(worst, e)
        count += len(idx)
    return GradCheckReport(worst, per, count, tolerance)
