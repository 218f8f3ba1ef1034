"""Phase-1 optimization of the world model (noise-prediction objective)."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..nn import Tensor, adam_step, save_checkpoint
from ..nn.tensor import no_nan_checks
from .model import WorldModel
from .schedule import DiffusionSchedule


def diffusion_train_step(wm: WorldModel, batch: dict,
                         schedule: DiffusionSchedule,
                         rng: np.random.Generator, lr: float) -> float:
    """One optimizer step of the noise-prediction loss.

    `batch` carries raw uint8 patch rows for the history window and the
    two future windows, plus ego-frame coordinates of the conditioning
    trajectory. The future (target) encodings run with stop-gradient:
    targets follow the current encoder but never steer it.
    """
    cfg = wm.cfg
    hist = batch["hist_patches"].astype(wm.store.dtype)

    f = wm.encode_history(hist)
    z0 = wm.encode_future_targets(batch["fut_mid_patches"],
                                  batch["fut_end_patches"])

    ys = batch["traj_xy"]
    c = wm.encode_motion_xy(ys, wm.retrieve_anchor_sets(ys))

    t = rng.integers(1, cfg.diffusion_steps + 1, size=hist.shape[0])
    eps = rng.standard_normal(z0.shape)
    z_t = schedule.noise_to(z0, t, eps)

    eps_hat = wm.denoise(Tensor(z_t), f, t, c)
    diff = eps_hat - Tensor(eps)
    loss = (diff * diff).mean()

    wm.store.zero_grad()
    loss.backward()
    adam_step(wm.store, wm.store.grads(), lr=lr)
    return float(loss.data)


def validation_loss(wm: WorldModel, bundles: list, schedule: DiffusionSchedule,
                    seed: int = 0, shuffle_c: np.random.Generator | None = None,
                    repeats: int = 8) -> float:
    """Mean denoising loss over bundles, averaged over repeated (t, eps) draws.

    Variants cycle deterministically across bundles. `shuffle_c` permutes
    the motion conditioning across the set, leaving targets fixed; used
    by the conditioning-relevance check.
    """
    cfg = wm.cfg
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, 77))))
    vidx = [i % b.n_variants for i, b in enumerate(bundles)]
    hist = np.stack([b.hist_patches for b in bundles]).astype(wm.store.dtype)
    mid_p = np.stack([b.fut_mid_patches[v] for b, v in zip(bundles, vidx)])
    end_p = np.stack([b.fut_end_patches[v] for b, v in zip(bundles, vidx)])
    ys = np.stack([b.variant_xy[v] for b, v in zip(bundles, vidx)])
    if shuffle_c is not None:
        ys = ys[shuffle_c.permutation(len(bundles))]

    total = 0.0
    with no_nan_checks():
        f = wm.encode_history(hist, frozen=True).data
        z0 = wm.encode_future_targets(mid_p, end_p)
        c = wm.encode_motion_xy(ys, wm.retrieve_anchor_sets(ys), frozen=True)
        for _ in range(repeats):
            t = rng.integers(1, cfg.diffusion_steps + 1, size=len(bundles))
            eps = rng.standard_normal(z0.shape)
            z_t = schedule.noise_to(z0, t, eps)
            eps_hat = wm.denoise(Tensor(z_t), Tensor(f), t, c, frozen=True).data
            total += float(np.mean((eps_hat - eps) ** 2))
    return total / repeats


def train_world_model(wm: WorldModel, bundles: list, iters: int, batch: int,
                      lr: float, seed: int, out_path=None,
                      early_fraction: float = 0.1) -> list[float]:
    """Seeded minibatch training; optionally saves early + final checkpoints.

    Each draw picks scenes and one motion variant per scene. Returns the
    per-iteration loss curve. The `early_fraction` checkpoint supports
    before/after comparisons of conditioning sensitivity.
    """
    cfg = wm.cfg
    schedule = DiffusionSchedule(cfg.diffusion_steps, cfg.beta_start, cfg.beta_end)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, 13))))
    hist = np.stack([b.hist_patches for b in bundles])
    mid = np.stack([b.fut_mid_patches for b in bundles])
    end = np.stack([b.fut_end_patches for b in bundles])
    ys = np.stack([b.variant_xy for b in bundles])
    n_var = ys.shape[1]

    early_at = max(1, int(round(iters * early_fraction)))
    losses = []
    rows = np.arange(min(batch, len(bundles)))
    with no_nan_checks():
        wm.calibrate_target_norm(bundles)
        for it in range(iters):
            pick = rng.choice(len(bundles), size=len(rows), replace=False)
            vpick = rng.integers(0, n_var, size=len(rows))
            step_batch = {
                "hist_patches": hist[pick],
                "fut_mid_patches": mid[pick, vpick],
                "fut_end_patches": end[pick, vpick],
                "traj_xy": ys[pick, vpick],
            }
            losses.append(diffusion_train_step(wm, step_batch, schedule, rng, lr))
            if out_path is not None and (it + 1) == early_at:
                save_checkpoint(wm.store, str(out_path) + "_early")
    if out_path is not None:
        save_checkpoint(wm.store, out_path)
        _write_curve(losses, str(out_path) + "_curve.csv")
    return losses


def _write_curve(losses: list[float], path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["iter", "loss"])
        for i, loss in enumerate(losses):
            w.writerow([i, f"{loss:.17g}"])
