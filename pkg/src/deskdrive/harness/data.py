"""Scene bundles: everything a training phase needs, precomputed and cached.

A bundle carries the rendered history window plus one or more motion
"variants": (trajectory, ground-truth future windows) pairs. Variant 0
is always the expert; the rest are smooth perturbations (speed scaling,
lateral drift). The desk expert is deterministic given the scene, so
expert-only futures would make motion conditioning uninformative; the
perturbed variants restore the multimodality the world model needs.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from ..geometry import headings_from_xy, rot2d
from ..vocab import normalize_to_ego_frame
from ..worldmodel.model import patchify_observation
from ..worldsim import (expert_policy, future_observations, generate_scene,
                        observation_for_scene, rollout)
from ..worldsim.types import Scene, Trajectory, WorldParams
from .config import DIFFICULTY_CYCLE, ExperimentConfig

_COMMANDS = ("left", "straight", "right")


@dataclass
class SceneBundle:
    seed: int
    difficulty: str
    scene: Scene
    expert: Trajectory            # world frame
    expert_progress: float
    ego_feats: np.ndarray         # (5,) one-hot command + speed + accel
    hist_patches: np.ndarray      # (n_tok, patch_dim) uint8
    variant_xy: np.ndarray        # (V, F, 2) ego frame; row 0 = expert
    fut_mid_patches: np.ndarray   # (V, n_tok, patch_dim) uint8
    fut_end_patches: np.ndarray

    @property
    def expert_xy(self) -> np.ndarray:
        return self.variant_xy[0]

    @property
    def n_variants(self) -> int:
        return self.variant_xy.shape[0]


def split_spec(cfg: ExperimentConfig, role: str) -> list[tuple[int, str]]:
    base, count = {
        "vocab": (cfg.vocab_seed_base, cfg.vocab_scenes),
        "train": (cfg.train_seed_base, cfg.train_scenes),
        "val": (cfg.val_seed_base, cfg.val_scenes),
        "test": (cfg.test_seed_base, cfg.test_scenes),
    }[role]
    return [(base + i, DIFFICULTY_CYCLE[(base + i) % len(DIFFICULTY_CYCLE)])
            for i in range(count)]


def ego_features(scene: Scene) -> np.ndarray:
    onehot = np.zeros(3)
    onehot[_COMMANDS.index(scene.ego.command)] = 1.0
    return np.concatenate([onehot, [scene.ego.speed, scene.ego.accel]])


def perturb_trajectory(expert: Trajectory, rng: np.random.Generator) -> Trajectory:
    """Smoothly perturbed alternate: scaled reach plus quadratic lateral drift."""
    xy = expert.xy.copy()
    start = xy[0].copy()
    scale = rng.uniform(0.35, 1.2)
    xy = start + scale * (xy - start)
    amp = rng.uniform(-3.0, 3.0)
    ramp = (np.arange(len(xy)) / max(len(xy) - 1, 1)) ** 2
    normals = np.stack([-np.sin(expert.headings), np.cos(expert.headings)], axis=1)
    xy = xy + (amp * ramp)[:, None] * normals
    headings = headings_from_xy(xy, first=float(expert.headings[0]))
    return Trajectory(np.column_stack([xy, headings]), expert.dt)


def _build_one(seed: int, difficulty: str, params: WorldParams,
               patch: int, variants: int) -> SceneBundle:
    scene = generate_scene(seed, difficulty, params)
    expert = expert_policy(scene)
    obs_hist = observation_for_scene(scene)

    rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence((seed, 555))))
    trajs = [expert] + [perturb_trajectory(expert, rng)
                        for _ in range(max(0, variants - 1))]

    xy_rows, mids, ends = [], [], []
    expert_progress = 0.0
    for vi, traj in enumerate(trajs):
        result = rollout(scene, traj)
        if vi == 0:
            expert_progress = float(result.progress)
        obs_mid, obs_end = future_observations(scene, result)
        xy_rows.append(normalize_to_ego_frame(traj, scene.ego).xy)
        mids.append(patchify_observation(obs_mid, patch))
        ends.append(patchify_observation(obs_end, patch))

    return SceneBundle(
        seed=seed, difficulty=difficulty, scene=scene, expert=expert,
        expert_progress=expert_progress,
        ego_feats=ego_features(scene),
        hist_patches=patchify_observation(obs_hist, patch),
        variant_xy=np.stack(xy_rows),
        fut_mid_patches=np.stack(mids),
        fut_end_patches=np.stack(ends),
    )


def cache_dir() -> Path:
    return Path(os.environ.get("DESKDRIVE_CACHE", ".deskdrive_cache"))


def _spec_key(spec: list, params: WorldParams, patch: int, variants: int) -> str:
    blob = json.dumps({"spec": spec, "params": asdict(params), "patch": patch,
                       "variants": variants}, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:20]


def build_bundles(spec: list[tuple[int, str]], params: WorldParams,
                  patch: int, variants: int = 1,
                  use_cache: bool = True) -> list[SceneBundle]:
    """Build (or load) bundles for a list of (seed, difficulty) pairs.

    The disk cache stores arrays only; scenes and expert trajectories are
    regenerated deterministically from the seeds on load.
    """
    path = cache_dir() / f"bundles_{_spec_key(spec, params, patch, variants)}.npz"
    if use_cache and path.exists():
        data = np.load(path, allow_pickle=False)
        bundles = []
        for i, (seed, diff) in enumerate(spec):
            scene = generate_scene(seed, diff, params)
            expert = expert_policy(scene)
            bundles.append(SceneBundle(
                seed=seed, difficulty=diff, scene=scene, expert=expert,
                expert_progress=float(data["expert_progress"][i]),
                ego_feats=data["ego_feats"][i],
                hist_patches=data["hist"][i],
                variant_xy=data["variant_xy"][i],
                fut_mid_patches=data["fut_mid"][i],
                fut_end_patches=data["fut_end"][i],
            ))
        return bundles

    bundles = [_build_one(seed, diff, params, patch, variants)
               for seed, diff in spec]
    if use_cache:
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savez_compressed(
            path,
            expert_progress=np.array([b.expert_progress for b in bundles]),
            ego_feats=np.stack([b.ego_feats for b in bundles]),
            hist=np.stack([b.hist_patches for b in bundles]),
            variant_xy=np.stack([b.variant_xy for b in bundles]),
            fut_mid=np.stack([b.fut_mid_patches for b in bundles]),
            fut_end=np.stack([b.fut_end_patches for b in bundles]),
        )
    return bundles
