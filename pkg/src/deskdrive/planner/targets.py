"""Supervision targets: every anchor rolled out and scored per scene."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..geometry import rot2d
from ..rewards import batch_subscores, imitation_target
from ..vocab import TrajectoryVocabulary
from ..worldsim.types import Scene
from ..harness.data import SceneBundle, cache_dir


@dataclass
class PlannerTargets:
    distances: np.ndarray     # (N,) anchor-to-expert distances
    im_target: np.ndarray     # (N,) softmax of negated distances
    sim_targets: np.ndarray   # (N, 5) rollout sub-scores per anchor
    pos_index: int            # nearest anchor to the expert
    expert_offset: np.ndarray  # (F, 2): expert minus positive anchor, ego frame


def anchors_to_world(vocab: TrajectoryVocabulary, scene: Scene) -> np.ndarray:
    """All anchors de-normalized into the scene's world frame, (N, F, 3)."""
    poses = vocab.anchor_poses().copy()
    R = rot2d(scene.ego.heading)
    poses[:, :, :2] = poses[:, :, :2] @ R.T + np.asarray(scene.ego.position)
    poses[:, :, 2] = poses[:, :, 2] + scene.ego.heading
    return poses


def build_targets(bundle: SceneBundle, vocab: TrajectoryVocabulary) -> PlannerTargets:
    scene = bundle.scene
    anchor_xy = vocab.anchor_xy()
    d = np.linalg.norm(anchor_xy - bundle.expert_xy[None], axis=2).mean(axis=1)
    pos = int(np.argmin(d))
    world_poses = anchors_to_world(vocab, scene)
    sim = batch_subscores(scene, world_poses, vocab.dt, bundle.expert_progress)
    return PlannerTargets(
        distances=d,
        im_target=imitation_target(d),
        sim_targets=sim,
        pos_index=pos,
        expert_offset=bundle.expert_xy - anchor_xy[pos],
    )


def _targets_key(bundles: list[SceneBundle], vocab: TrajectoryVocabulary) -> str:
    blob = json.dumps({
        "seeds": [(b.seed, b.difficulty) for b in bundles],
        "vocab": vocab.content_hash(),
    }, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:20]


def targets_for_scenes(bundles: list[SceneBundle], vocab: TrajectoryVocabulary,
                       use_cache: bool = True) -> list[PlannerTargets]:
    """Targets for a scene list, cached on disk keyed by (seeds, vocab hash)."""
    path = cache_dir() / f"targets_{_targets_key(bundles, vocab)}.npz"
    if use_cache and path.exists():
        data = np.load(path, allow_pickle=False)
        return [PlannerTargets(distances=data["distances"][i],
                               im_target=data["im_target"][i],
                               sim_targets=data["sim_targets"][i],
                               pos_index=int(data["pos_index"][i]),
                               expert_offset=data["expert_offset"][i])
                for i in range(len(bundles))]
    out = [build_targets(b, vocab) for b in bundles]
    if use_cache:
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savez_compressed(
            path,
            distances=np.stack([t.distances for t in out]),
            im_target=np.stack([t.im_target for t in out]),
            sim_targets=np.stack([t.sim_targets for t in out]),
            pos_index=np.array([t.pos_index for t in out]),
            expert_offset=np.stack([t.expert_offset for t in out]),
        )
    return out
