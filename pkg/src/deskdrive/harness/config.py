"""Experiment configuration: one JSON document drives the whole pipeline."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from ..errors import IOFailure
from ..worldsim.types import WorldParams

DIFFICULTY_CYCLE = ("empty", "sparse", "dense", "sparse", "dense")


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    world: WorldParams = field(default_factory=WorldParams)

    # scene splits: disjoint seed ranges per role
    vocab_scenes: int = 2000
    train_scenes: int = 1000
    val_scenes: int = 200
    test_scenes: int = 300
    vocab_seed_base: int = 0
    train_seed_base: int = 10_000
    val_seed_base: int = 20_000
    test_seed_base: int = 30_000

    # vocabulary
    n_anchors: int = 256
    kmeans_seed: int = 7

    # shared network width
    channels: int = 64

    # world model
    latent_channels: int = 8
    latent_grid: int = 8
    patch: int = 8
    diffusion_steps: int = 50
    beta_start: float = 1e-4
    beta_end: float = 0.30
    sample_steps: int = 10
    topk_condition: int = 5
    wm_iters: int = 3000
    wm_batch: int = 16
    wm_lr: float = 1e-3
    wm_variants: int = 4

    # planner
    planner_train_scenes: int = 600     # leading subset of the train split
    planner_epochs: int = 8
    planner_batch: int = 8
    planner_lr: float = 3e-4
    inherit_vision: bool = True
    inherit_motion: bool = True

    # future-aware rewarder
    far_train_scenes: int = 400         # leading subset of the train split
    far_epochs: int = 10
    far_lr: float = 3e-4
    candidate_pool: int = 16            # planner candidates fed to pair mining
    scene_queries: int = 16             # M
    topk_eval: int = 5                  # K candidates at inference
    rewarder_mode: str = "traj_future"  # none | traj_only | traj_future

    def __post_init__(self):
        spans = [
            (self.vocab_seed_base, self.vocab_seed_base + self.vocab_scenes),
            (self.train_seed_base, self.train_seed_base + self.train_scenes),
            (self.val_seed_base, self.val_seed_base + self.val_scenes),
            (self.test_seed_base, self.test_seed_base + self.test_scenes),
        ]
        spans.sort()
        for (a0, a1), (b0, b1) in zip(spans, spans[1:]):
            if a1 > b0:
                raise ValueError(f"scene seed ranges overlap: {(a0, a1)} vs {(b0, b1)}")
        if self.rewarder_mode not in ("none", "traj_only", "traj_future"):
            raise ValueError(f"unknown rewarder_mode {self.rewarder_mode!r}")
        if self.planner_train_scenes > self.train_scenes:
            raise ValueError("planner_train_scenes exceeds train split")
        if self.far_train_scenes > self.train_scenes:
            raise ValueError("far_train_scenes exceeds train split")

    def replace(self, **kw) -> "ExperimentConfig":
        doc = asdict(self)
        doc.update(kw)
        return config_from_dict(doc)


def config_from_dict(doc: dict) -> ExperimentConfig:
    doc = dict(doc)
    world = doc.pop("world", {})
    if isinstance(world, WorldParams):
        wp = world
    else:
        wp = WorldParams(**world)
    known = {f.name for f in fields(ExperimentConfig)}
    extra = set(doc) - known
    if extra:
        raise ValueError(f"unknown config fields: {sorted(extra)}")
    return ExperimentConfig(world=wp, **doc)


def config_hash(cfg: ExperimentConfig) -> str:
    blob = json.dumps(asdict(cfg), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def save_config(cfg: ExperimentConfig, path) -> None:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(asdict(cfg), f, indent=1, sort_keys=True)
    except OSError as e:
        raise IOFailure(str(e)) from e


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as f:
            return config_from_dict(json.load(f))
    except OSError as e:
        raise IOFailure(str(e)) from e
