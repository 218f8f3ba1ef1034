"""Bias-corrected adaptive-moment optimizer."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch
from .params import ParamStore


def adam_step(store: ParamStore, grads: dict, lr: float,
              betas: tuple = (0.9, 0.999), eps: float = 1e-8) -> None:
    """One in-place update. `grads` maps parameter name -> gradient array."""
    b1, b2 = betas
    store.step_count += 1
    t = store.step_count
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    for name, g in grads.items():
        p = store[name]
        if g.shape != p.shape:
            raise ShapeMismatch(f"{name}: grad {g.shape} vs param {p.shape}")
        m, v = store._m[name], store._v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
