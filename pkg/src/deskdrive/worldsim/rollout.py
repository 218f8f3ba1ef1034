"""Kinematic replay of candidate trajectories against a scene."""

from __future__ import annotations

import numpy as np

from ..errors import TrajectoryTooShort
from .types import RolloutResult, Scene, Trajectory


def _agent_tracks(scene: Scene, F: int, dt: float) -> np.ndarray:
    """Agent positions per step: (F, A, 2); constant velocity, no walls."""
    pos, vel, _ = scene.agent_array()
    t = np.arange(F)[:, None, None] * dt
    return pos[None, :, :] + vel[None, :, :] * t


def _first_true(mask: np.ndarray) -> int | None:
    idx = np.nonzero(mask)[0]
    return int(idx[0]) if idx.size else None


def rollout(scene: Scene, traj: Trajectory) -> RolloutResult:
    """Teleport the ego along `traj` while agents advance at constant velocity.

    Collision: ego disc (r_ego) overlaps an agent disc at the same step.
    Offroad: ego center leaves drivable cells. Progress: route arclength
    gained between the first and last pose, floored at zero.
    """
    if traj.F < 2:
        raise TrajectoryTooShort("rollout needs at least 2 waypoints")
    params = scene.params
    F = traj.F
    agent_poses = _agent_tracks(scene, F, traj.dt)
    _, _, radii = scene.agent_array()

    if radii.size:
        d = np.linalg.norm(agent_poses - traj.xy[:, None, :], axis=2)
        hit = d <= (params.r_ego + radii)[None, :]
        collided_step = _first_true(hit.any(axis=1))
    else:
        collided_step = None

    offroad_step = _first_true(~scene.is_drivable(traj.xy))

    s_start = scene.route.project(traj.xy[0])
    s_end = scene.route.project(traj.xy[-1])
    progress = max(0.0, s_end - s_start)

    return RolloutResult(ego_poses=traj.poses.copy(), agent_poses=agent_poses,
                         collided_step=collided_step, offroad_step=offroad_step,
                         progress=progress)


def batch_rollout_metrics(scene: Scene, poses: np.ndarray, dt: float) -> dict:
    """Vectorized rollout statistics for M trajectories at once.

    `poses` is (M, F, 3) in world frame. Returns per-trajectory arrays:
    collided (bool), offroad (bool), progress (float), min_ttc (float),
    and the kinematic comfort measurements (max |accel|, |jerk|, |yaw rate|).
    Semantics match `rollout` + the per-rollout sub-score computation;
    the pairing is covered by an equivalence test.
    """
    poses = np.asarray(poses, dtype=float)
    M, F, _ = poses.shape
    params = scene.params
    xy = poses[:, :, :2]
    agent_poses = _agent_tracks(scene, F, dt)           # (F, A, 2)
    apos, avel, radii = scene.agent_array()
    A = radii.size

    if A:
        d = np.linalg.norm(xy[:, :, None, :] - agent_poses[None], axis=3)  # (M,F,A)
        hit = d <= (params.r_ego + radii)[None, None, :]
        collided = hit.any(axis=(1, 2))
    else:
        collided = np.zeros(M, dtype=bool)

    offroad = ~scene.is_drivable(xy.reshape(-1, 2)).reshape(M, F)
    offroad_any = offroad.any(axis=1)

    # ego per-step velocity from forward differences; last step repeats
    v = np.diff(xy, axis=1) / dt                        # (M,F-1,2)
    v = np.concatenate([v, v[:, -1:, :]], axis=1)       # (M,F,2)

    if A:
        dp = agent_poses[None] - xy[:, :, None, :]      # (M,F,A,2)
        dv = avel[None, None] - v[:, :, None, :]
        R = (params.r_ego + radii)[None, None, :]
        a = np.sum(dv * dv, axis=3)
        b = 2.0 * np.sum(dp * dv, axis=3)
        c = np.sum(dp * dp, axis=3) - R * R
        disc = b * b - 4.0 * a * c
        with np.errstate(invalid="ignore", divide="ignore"):
            root = (-b - np.sqrt(np.maximum(disc, 0.0))) / (2.0 * a)
        ttc = np.full_like(a, np.inf)
        valid = (disc >= 0.0) & (a > 1e-12) & (root >= 0.0)
        ttc[valid] = root[valid]
        ttc[c <= 0.0] = 0.0
        min_ttc = ttc.min(axis=(1, 2))
    else:
        min_ttc = np.full(M, np.inf)

    speed = np.linalg.norm(np.diff(xy, axis=1), axis=2) / dt       # (M,F-1)
    accel = np.diff(speed, axis=1) / dt                            # (M,F-2)
    jerk = np.diff(accel, axis=1) / dt if F >= 4 else np.zeros((M, 0))
    heading = poses[:, :, 2]
    dhead = np.diff(heading, axis=1)
    dhead = np.mod(dhead + np.pi, 2.0 * np.pi) - np.pi
    yaw_rate = dhead / dt

    def _absmax(x):
        return np.abs(x).max(axis=1) if x.shape[1] else np.zeros(M)

    s_start = _project_many(scene, xy[:, 0, :])
    s_end = _project_many(scene, xy[:, -1, :])
    progress = np.maximum(0.0, s_end - s_start)

    return {
        "collided": collided,
        "offroad": offroad_any,
        "progress": progress,
        "min_ttc": min_ttc,
        "max_accel": _absmax(accel),
        "max_jerk": _absmax(jerk),
        "max_yaw_rate": _absmax(yaw_rate),
    }


def _project_many(scene: Scene, pts: np.ndarray) -> np.ndarray:
    """Route arclength of the nearest polyline point, vectorized over M points."""
    route = scene.route
    seg = route._seg
    seg_len = route._seg_len
    rel = pts[:, None, :] - route.points[None, :-1, :]
    t = np.einsum("mij,ij->mi", rel, seg) / np.maximum(seg_len**2, 1e-12)
    t = np.clip(t, 0.0, 1.0)
    foot = route.points[None, :-1, :] + seg[None] * t[:, :, None]
    d2 = np.sum((foot - pts[:, None, :]) ** 2, axis=2)
    i = np.argmin(d2, axis=1)
    rows = np.arange(len(pts))
    return route.arclength[i] + t[rows, i] * seg_len[i]
