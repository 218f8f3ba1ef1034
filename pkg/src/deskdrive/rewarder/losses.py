"""Rewarder objectives: latent alignment and pairwise preference."""

from __future__ import annotations

import numpy as np

from ..errors import EmptyPairs, ShapeMismatch
from ..nn import Tensor
from ..nn.tensor import gather_rows
from .pairs import PreferencePair


def align_loss(z_hat: Tensor, z_target: np.ndarray) -> Tensor:
    """MSE against sampled future latents; the target is a plain array,
    so no gradient can reach the world model (stop-gradient by type)."""
    target = np.asarray(z_target, dtype=z_hat.data.dtype)
    if target.shape != z_hat.shape:
        raise ShapeMismatch(f"align {z_hat.shape} vs {target.shape}")
    diff = z_hat - Tensor(target)
    return (diff * diff).mean()


def bt_loss(pairs: list[PreferencePair], rewards: Tensor) -> Tensor:
    """Mean pairwise preference loss -log sigmoid(r_pos - r_neg)."""
    if not pairs:
        raise EmptyPairs("no preference pairs")
    pos = np.array([p.pos_index for p in pairs])
    neg = np.array([p.neg_index for p in pairs])
    margin = gather_rows(rewards, pos) - gather_rows(rewards, neg)
    return (-margin).softplus().mean()
