from .types import (WorldParams, Waypoint, Trajectory, EgoState, AgentState,
                    Scene, RolloutResult, Observation, DIFFICULTIES)
from .generate import generate_scene, corridor_grid
from .expert import expert_policy
from .rollout import rollout, batch_rollout_metrics
from .render import (render_observation, history_snapshots, future_snapshots,
                     observation_for_scene, future_observations)
from .serialize import scene_to_json, scene_from_json, write_scenes_jsonl, read_scenes_jsonl

__all__ = [
    "WorldParams", "Waypoint", "Trajectory", "EgoState", "AgentState", "Scene",
    "RolloutResult", "Observation", "DIFFICULTIES",
    "generate_scene", "corridor_grid", "expert_policy", "rollout",
    "batch_rollout_metrics", "render_observation", "history_snapshots",
    "future_snapshots", "observation_for_scene", "future_observations",
    "scene_to_json", "scene_from_json", "write_scenes_jsonl", "read_scenes_jsonl",
]
