"""Trajectory anchor vocabulary: ego-frame normalization, clustering, retrieval."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IOFailure, KOutOfRange, LengthMismatch, TooFewTrajectories
from .geometry import headings_from_xy, rot2d, wrap_angle
from .worldsim.types import EgoState, Trajectory


def normalize_to_ego_frame(traj: Trajectory, ego: EgoState) -> Trajectory:
    """Express a trajectory in the ego frame (ego at origin, heading 0)."""
    xy = (traj.xy - np.asarray(ego.position)) @ rot2d(-ego.heading).T
    headings = wrap_angle(traj.headings - ego.heading)
    return Trajectory(np.column_stack([xy, headings]), traj.dt)


def denormalize_from_ego_frame(traj: Trajectory, ego: EgoState) -> Trajectory:
    """Inverse of :func:`normalize_to_ego_frame`."""
    xy = traj.xy @ rot2d(ego.heading).T + np.asarray(ego.position)
    headings = wrap_angle(traj.headings + ego.heading)
    return Trajectory(np.column_stack([xy, headings]), traj.dt)


def traj_distance(a: Trajectory, b: Trajectory) -> float:
    """Mean over waypoints of the planar Euclidean distance (heading ignored)."""
    if a.F != b.F or a.dt != b.dt:
        raise LengthMismatch(f"F/dt mismatch: ({a.F},{a.dt}) vs ({b.F},{b.dt})")
    return float(np.linalg.norm(a.xy - b.xy, axis=1).mean())


def _distances_to_anchors(anchor_xy: np.ndarray, xy: np.ndarray) -> np.ndarray:
    """traj_distance of one (F,2) trajectory against (N,F,2) anchors."""
    return np.linalg.norm(anchor_xy - xy[None], axis=2).mean(axis=1)


@dataclass
class TrajectoryVocabulary:
    anchors: list[Trajectory]          # ego frame, waypoint 0 at origin
    clustering_seed: int
    inertia: float

    @property
    def N(self) -> int:
        return len(self.anchors)

    @property
    def F(self) -> int:
        return self.anchors[0].F

    @property
    def dt(self) -> float:
        return self.anchors[0].dt

    def anchor_xy(self) -> np.ndarray:
        """(N, F, 2) stacked anchor coordinates."""
        return np.stack([a.xy for a in self.anchors])

    def anchor_poses(self) -> np.ndarray:
        return np.stack([a.poses for a in self.anchors])

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.anchor_poses(), dtype="<f8").tobytes())
        h.update(str(self.clustering_seed).encode())
        return h.hexdigest()[:16]


def _kmeans_pp_init(flat: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Seeded k-means++ (D^2 sampling) over flattened coordinates."""
    m = flat.shape[0]
    centers = np.empty((n, flat.shape[1]))
    first = int(rng.integers(m))
    centers[0] = flat[first]
    d2 = np.sum((flat - centers[0]) ** 2, axis=1)
    for i in range(1, n):
        total = d2.sum()
        if total <= 0.0:
            # all remaining points coincide with a center; spread uniformly
            idx = int(rng.integers(m))
        else:
            idx = int(rng.choice(m, p=d2 / total))
        centers[i] = flat[idx]
        d2 = np.minimum(d2, np.sum((flat - centers[i]) ** 2, axis=1))
    return centers


def kmeans_cluster(trajs: list[Trajectory], N: int, seed: int) -> TrajectoryVocabulary:
    """Lloyd's algorithm over flattened (x, y) waypoints, 2F dimensions.

    k-means++ initialization from `seed`; iteration stops when the
    assignment vector stabilizes or after 100 rounds. Empty clusters are
    reseeded to the point farthest from its current centroid.
    """
    if len(trajs) < N:
        raise TooFewTrajectories(f"{len(trajs)} trajectories for N={N}")
    F, dt = trajs[0].F, trajs[0].dt
    for t in trajs:
        if t.F != F or t.dt != dt:
            raise LengthMismatch("all trajectories must share F and dt")
    flat = np.stack([t.xy.ravel() for t in trajs])
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    centers = _kmeans_pp_init(flat, N, rng)

    assign = np.full(len(trajs), -1, dtype=int)
    for _ in range(100):
        d2 = (np.sum(flat**2, axis=1)[:, None] - 2.0 * flat @ centers.T
              + np.sum(centers**2, axis=1)[None, :])
        new_assign = np.argmin(d2, axis=1)
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for k in range(N):
            members = flat[assign == k]
            if len(members):
                centers[k] = members.mean(axis=0)
            else:
                worst = int(np.argmax(d2[np.arange(len(flat)), assign]))
                centers[k] = flat[worst]
                assign[worst] = k
    d2_final = np.sum((flat - centers[assign]) ** 2, axis=1)
    inertia = float(d2_final.sum())

    anchors = []
    for k in range(N):
        xy = centers[k].reshape(F, 2)
        headings = headings_from_xy(xy, first=0.0)
        anchors.append(Trajectory(np.column_stack([xy, headings]), dt))
    return TrajectoryVocabulary(anchors=anchors, clustering_seed=int(seed),
                                inertia=inertia)


def nearest_anchors(vocab: TrajectoryVocabulary, traj: Trajectory,
                    K: int) -> tuple[list[int], list[float]]:
    """Top-K anchors by ascending traj_distance; ties break on anchor index."""
    if not 1 <= K <= vocab.N:
        raise KOutOfRange(f"K={K} outside [1, {vocab.N}]")
    if traj.F != vocab.F or traj.dt != vocab.dt:
        raise LengthMismatch("query must match vocabulary F and dt")
    d = _distances_to_anchors(vocab.anchor_xy(), traj.xy)
    order = np.lexsort((np.arange(vocab.N), d))[:K]
    return [int(i) for i in order], [float(d[i]) for i in order]


def save_vocabulary(vocab: TrajectoryVocabulary, path) -> None:
    doc = {
        "N": vocab.N, "F": vocab.F, "dt": vocab.dt,
        "clustering_seed": vocab.clustering_seed, "inertia": vocab.inertia,
        "anchors": vocab.anchor_poses().tolist(),
    }
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(doc, f)
    except OSError as e:
        raise IOFailure(str(e)) from e


def load_vocabulary(path) -> TrajectoryVocabulary:
    try:
        with open(path) as f:
            doc = json.load(f)
    except OSError as e:
        raise IOFailure(str(e)) from e
    anchors = [Trajectory(np.asarray(p), doc["dt"]) for p in doc["anchors"]]
    return TrajectoryVocabulary(anchors=anchors,
                                clustering_seed=doc["clustering_seed"],
                                inertia=doc["inertia"])
