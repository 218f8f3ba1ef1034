"""FAR training: distill sampled future latents, rank by oracle preference."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..nn import Tensor, adam_step, save_checkpoint
from ..nn.tensor import no_nan_checks
from ..planner.model import Candidate, Planner
from ..planner.targets import anchors_to_world
from ..rewards import driving_scores_batch, batch_subscores
from ..vocab import denormalize_from_ego_frame
from ..worldmodel.sampling import derived_seed, sample_future_latent
from .losses import align_loss, bt_loss
from .model import Rewarder, candidate_rows
from .pairs import PreferencePair, build_preference_pairs


@dataclass
class FarSceneData:
    seed: int
    f_tokens: np.ndarray          # (n_lat, C_lat)
    cand_rows: np.ndarray         # (S, C) frozen embeddings of selected candidates
    z_targets: np.ndarray         # (S, n_lat, C_lat) sampled latents (or empty)
    pairs: list[PreferencePair]   # indices into the selected set
    oracle_scores: np.ndarray     # (pool,) for bookkeeping
    candidates: list[Candidate]   # selected candidates (ego frame)


def candidate_oracle_scores(bundle, candidates: list[Candidate]) -> np.ndarray:
    """Ground-truth driving score of each candidate via rollout."""
    scene = bundle.scene
    poses = []
    for cand in candidates:
        world = denormalize_from_ego_frame(cand.trajectory, scene.ego)
        poses.append(world.poses)
    sub = batch_subscores(scene, np.stack(poses), candidates[0].trajectory.dt,
                          bundle.expert_progress)
    return driving_scores_batch(sub)


def prepare_far_data(planner: Planner, bundles: list, pool: int,
                     sample_steps: int, seed: int,
                     with_latents: bool = True) -> list[FarSceneData]:
    """Per-scene candidates, oracle scores, pairs, and sampled latent targets.

    Latent targets use per-(scene, candidate) derived seeds, so the same
    (scene, candidate) always receives the same target regardless of
    batching or scene order.
    """
    wm = planner.wm
    out = []
    with no_nan_checks():
        for b in bundles:
            f = planner.encode_scene(b.hist_patches[None])[0]
            plan = planner.plan(f, b.ego_feats, K=pool)
            oracle = candidate_oracle_scores(b, plan.candidates)
            pairs_full, selected = build_preference_pairs(
                oracle, seed=derived_seed(seed, b.seed))
            remap = {orig: i for i, orig in enumerate(selected)}
            pairs = [PreferencePair(remap[p.pos_index], remap[p.neg_index],
                                    p.pos_oracle, p.neg_oracle)
                     for p in pairs_full]
            sel_cands = [plan.candidates[i] for i in selected]
            rows = candidate_rows(wm, sel_cands)
            if with_latents:
                c_rows = rows[:, None, :]
                seeds = [derived_seed(seed, b.seed, plan.candidates[i].anchor_index)
                         for i in selected]
                f_rep = np.repeat(f[None], len(selected), axis=0)
                z = sample_future_latent(wm, f_rep, c_rows, sample_steps,
                                         np.array(seeds, dtype=np.uint64))
            else:
                z = np.zeros((len(selected), 0, 0))
            out.append(FarSceneData(seed=b.seed, f_tokens=f, cand_rows=rows,
                                    z_targets=z, pairs=pairs,
                                    oracle_scores=oracle, candidates=sel_cands))
    return out


def far_scene_loss(rewarder: Rewarder, data: FarSceneData,
                   frozen: bool = False) -> tuple[Tensor, Tensor | None]:
    """(total loss, align part) for one scene."""
    if rewarder.mode == "traj_future":
        z_hat = rewarder.distill_future(data.f_tokens, data.cand_rows,
                                        frozen=frozen)
        la = align_loss(z_hat, data.z_targets)
        r = rewarder.future_reward(data.cand_rows, z_hat, frozen=frozen)
        lb = bt_loss(data.pairs, r) if data.pairs else None
        total = la if lb is None else la + lb
        return total, la
    r = rewarder.future_reward(data.cand_rows, None, frozen=frozen)
    if not data.pairs:
        return (r * 0.0).sum(), None
    return bt_loss(data.pairs, r), None


def held_out_align_loss(rewarder: Rewarder, data: list[FarSceneData]) -> float:
    vals = []
    with no_nan_checks():
        for d in data:
            _, la = far_scene_loss(rewarder, d, frozen=True)
            if la is not None:
                vals.append(float(la.data))
    return float(np.mean(vals)) if vals else 0.0


def train_far(rewarder: Rewarder, data: list[FarSceneData], epochs: int,
              lr: float, seed: int, out_path=None) -> list[float]:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, 47))))
    losses = []
    with no_nan_checks():
        for _ in range(epochs):
            for i in rng.permutation(len(data)):
                loss, _ = far_scene_loss(rewarder, data[i])
                rewarder.store.zero_grad()
                loss.backward()
                adam_step(rewarder.store, rewarder.store.grads(), lr=lr)
                losses.append(float(loss.data))
    if out_path is not None:
        save_checkpoint(rewarder.store, out_path)
        _write_curve(losses, str(out_path) + "_curve.csv")
    return losses


def _write_curve(losses, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["step", "loss"])
        for i, loss in enumerate(losses):
            w.writerow([i, f"{loss:.17g}"])
