"""Ego-centric BEV occupancy rendering.

Every frame is rasterized in the frame of its own snapshot's ego pose,
so the ego sits at the same anchor cell in all frames and a rigid
transform of the whole world leaves the observation unchanged (up to
world-grid sampling quantization for the drivable channel).
"""

from __future__ import annotations

import weakref

import numpy as np
from scipy.spatial import cKDTree

from ..errors import HistoryLengthMismatch
from ..geometry import rot2d
from .types import Observation, RolloutResult, Scene

_GRID_CACHE: dict = {}
_ROUTE_TREES: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()

_ROUTE_SAMPLE_STEP = 0.2


def _route_tree(route) -> cKDTree:
    """KD-tree over densely resampled route points (cached per route)."""
    tree = _ROUTE_TREES.get(route)
    if tree is None:
        s = np.arange(0.0, route.length + 1e-9, _ROUTE_SAMPLE_STEP)
        tree = cKDTree(route.point_at(s))
        _ROUTE_TREES[route] = tree
    return tree


def _pixel_centers(obs_cells: int, cell: float, anchor: tuple[int, int]) -> np.ndarray:
    """Ego-frame coordinates of pixel centers, (H, W, 2): x forward, y left."""
    key = (obs_cells, cell, anchor)
    if key not in _GRID_CACHE:
        rows = np.arange(obs_cells)
        cols = np.arange(obs_cells)
        x_fwd = (anchor[0] - rows).astype(float) * cell
        y_left = (anchor[1] - cols).astype(float) * cell
        xx = np.broadcast_to(x_fwd[:, None], (obs_cells, obs_cells))
        yy = np.broadcast_to(y_left[None, :], (obs_cells, obs_cells))
        _GRID_CACHE[key] = np.ascontiguousarray(np.stack([xx, yy], axis=-1))
    return _GRID_CACHE[key]


def _render_snapshot(scene: Scene, ego_pose: np.ndarray,
                     agent_positions: np.ndarray) -> np.ndarray:
    params = scene.params
    anchor = params.anchor_cell
    local = _pixel_centers(params.obs_cells, params.obs_cell_size, anchor)
    h = local.shape[0]
    R = rot2d(float(ego_pose[2]))
    world = local.reshape(-1, 2) @ R.T + ego_pose[:2]

    drivable = scene.is_drivable(world).reshape(h, h)

    _, _, radii = scene.agent_array()
    agents = np.zeros((h, h), dtype=bool)
    if radii.size:
        d = np.linalg.norm(world[:, None, :] - agent_positions[None, :, :], axis=2)
        agents = (d <= radii[None, :]).any(axis=1).reshape(h, h)

    # centerline band: pixels near the densely resampled route point set
    dist, _ = _route_tree(scene.route).query(world, k=1)
    route_mask = (dist <= params.route_mask_halfwidth).reshape(h, h)

    return np.stack([drivable, agents, route_mask]).astype(np.uint8)


def history_snapshots(scene: Scene) -> list[tuple[np.ndarray, np.ndarray]]:
    """T synthetic past states, most recent (current) last.

    The ego is back-projected along the route at its current speed;
    agents move backward along their constant velocities.
    """
    params = scene.params
    route = scene.route
    s0 = route.project(np.asarray(scene.ego.position))
    apos, avel, _ = scene.agent_array()
    snaps = []
    for k in range(params.history_frames):
        back = (params.history_frames - 1 - k) * params.dt
        if back == 0.0:
            pose = np.array([scene.ego.position[0], scene.ego.position[1],
                             scene.ego.heading])
        else:
            s = max(0.0, s0 - scene.ego.speed * back)
            pt = route.point_at(s)
            pose = np.array([pt[0], pt[1], float(route.heading_at(s))])
        snaps.append((pose, apos - avel * back))
    return snaps


def future_snapshots(scene: Scene, result: RolloutResult,
                     upto_step: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """T states ending at rollout step `upto_step` (needs upto_step >= T-1)."""
    params = scene.params
    T = params.history_frames
    if upto_step < T - 1 or upto_step >= result.ego_poses.shape[0]:
        raise ValueError(f"upto_step {upto_step} out of range")
    snaps = []
    for k in range(upto_step - T + 1, upto_step + 1):
        snaps.append((result.ego_poses[k], result.agent_poses[k]))
    return snaps


def render_observation(scene: Scene, history_states: list) -> Observation:
    """Rasterize T (ego_pose, agent_positions) snapshots, most recent last."""
    params = scene.params
    if len(history_states) != params.history_frames:
        raise HistoryLengthMismatch(
            f"expected {params.history_frames} states, got {len(history_states)}")
    frames = np.stack([_render_snapshot(scene, np.asarray(pose, dtype=float),
                                        np.asarray(apos, dtype=float))
                       for pose, apos in history_states])
    return Observation(frames=frames, anchor_cell=params.anchor_cell,
                       cell_size=params.obs_cell_size)


def observation_for_scene(scene: Scene) -> Observation:
    return render_observation(scene, history_snapshots(scene))


def future_observations(scene: Scene, result: RolloutResult) -> tuple[Observation, Observation]:
    """Ground-truth future views at the horizon midpoint and endpoint."""
    F = result.ego_poses.shape[0]
    mid = F // 2
    end = F - 1
    obs_mid = render_observation(scene, future_snapshots(scene, result, mid))
    obs_end = render_observation(scene, future_snapshots(scene, result, end))
    return obs_mid, obs_end
