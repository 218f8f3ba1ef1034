"""Planner optimization: imitation CE + simulation BCE + positive-offset L1."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..nn import Tensor, adam_step, save_checkpoint
from ..nn.tensor import gather_rows, no_nan_checks
from .model import Planner
from .targets import PlannerTargets


def planner_loss(planner: Planner, f_tokens: np.ndarray, ego_feats: np.ndarray,
                 targets: list[PlannerTargets]) -> Tensor:
    """Unit-weighted sum of the three supervision terms for a scene batch."""
    q_p = planner.plan_queries(f_tokens, ego_feats)
    im_logits, sim_logits, offsets = planner.score_heads(q_p)

    im_t = Tensor(np.stack([t.im_target for t in targets]))
    ce = -(im_t * im_logits.log_softmax(axis=-1)).sum(axis=-1).mean()

    sim_t = Tensor(np.stack([t.sim_targets for t in targets]))
    # stable binary cross-entropy from logits: softplus(x) - x*y
    bce = (sim_logits.softplus() - sim_logits * sim_t).mean()

    B = len(targets)
    pos = np.array([t.pos_index for t in targets])
    flat = offsets.reshape(B * offsets.shape[1], *offsets.shape[2:])
    pos_offsets = gather_rows(flat, pos + np.arange(B) * offsets.shape[1])
    off_t = Tensor(np.stack([t.expert_offset for t in targets]))
    l1 = (pos_offsets - off_t).abs().mean()

    return ce + bce + l1


def train_planner(planner: Planner, f_tokens_all: np.ndarray,
                  ego_feats_all: np.ndarray, targets: list[PlannerTargets],
                  epochs: int, batch: int, lr: float, seed: int,
                  out_path=None) -> list[float]:
    """Epoch-based minibatch training over precomputed frozen latents."""
    n = len(targets)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, 31))))
    losses = []
    with no_nan_checks():
        for _ in range(epochs):
            order = rng.permutation(n)
            for lo in range(0, n, batch):
                pick = order[lo:lo + batch]
                loss = planner_loss(planner, f_tokens_all[pick],
                                    ego_feats_all[pick],
                                    [targets[i] for i in pick])
                planner.store.zero_grad()
                loss.backward()
                adam_step(planner.store, planner.store.grads(), lr=lr)
                losses.append(float(loss.data))
    if out_path is not None:
        save_checkpoint(planner.store, out_path)
        _write_curve(losses, str(out_path) + "_curve.csv")
    return losses


def _write_curve(losses, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["step", "loss"])
        for i, loss in enumerate(losses):
            w.writerow([i, f"{loss:.17g}"])
