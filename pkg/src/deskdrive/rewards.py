"""Simulation sub-scores, imitation targets, and combined planning scores."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .worldsim.rollout import batch_rollout_metrics
from .worldsim.types import RolloutResult, Scene

ACCEL_LIMIT = 4.0      # m/s^2
JERK_LIMIT = 6.0       # m/s^3
YAW_RATE_LIMIT = 1.0   # rad/s
PROGRESS_FLOOR = 0.1   # m, guards the ego-progress ratio denominator


@dataclass
class RewardBreakdown:
    """Five rollout sub-scores; binary flags except the progress ratio.

    Predicted breakdowns (planner head outputs) reuse this container with
    soft values in (0, 1).
    """

    nc: float
    dac: float
    ttc: float
    comf: float
    ep: float

    def __post_init__(self):
        for name in ("nc", "dac", "ttc", "comf", "ep"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")

    def as_array(self) -> np.ndarray:
        return np.array([self.nc, self.dac, self.ttc, self.comf, self.ep])


@dataclass(frozen=True)
class PlanScoreWeights:
    w1: float = 0.1
    w2: float = 0.5
    w3: float = 0.5
    w4: float = 1.0
    inner: tuple = (5.0, 2.0, 5.0)
    eps: float = 1e-6


DEFAULT_WEIGHTS = PlanScoreWeights()


def subscores(result: RolloutResult, scene: Scene,
              expert_progress: float) -> RewardBreakdown:
    """Score one rollout: collision, drivable-area, TTC, comfort, progress."""
    params = scene.params
    m = batch_rollout_metrics(scene, result.ego_poses[None], params.dt)
    nc = 1.0 if result.collided_step is None else 0.0
    dac = 1.0 if result.offroad_step is None else 0.0
    ttc = 1.0 if m["min_ttc"][0] >= params.ttc_safe else 0.0
    comf = 1.0 if (m["max_accel"][0] <= ACCEL_LIMIT
                   and m["max_jerk"][0] <= JERK_LIMIT
                   and m["max_yaw_rate"][0] <= YAW_RATE_LIMIT) else 0.0
    ep = float(np.clip(result.progress / max(expert_progress, PROGRESS_FLOOR),
                       0.0, 1.0))
    return RewardBreakdown(nc=nc, dac=dac, ttc=ttc, comf=comf, ep=ep)


def batch_subscores(scene: Scene, poses: np.ndarray, dt: float,
                    expert_progress: float) -> np.ndarray:
    """(M, 5) sub-score matrix for M world-frame trajectories at once."""
    m = batch_rollout_metrics(scene, poses, dt)
    params = scene.params
    nc = (~m["collided"]).astype(float)
    dac = (~m["offroad"]).astype(float)
    ttc = (m["min_ttc"] >= params.ttc_safe).astype(float)
    comf = ((m["max_accel"] <= ACCEL_LIMIT) & (m["max_jerk"] <= JERK_LIMIT)
            & (m["max_yaw_rate"] <= YAW_RATE_LIMIT)).astype(float)
    ep = np.clip(m["progress"] / max(expert_progress, PROGRESS_FLOOR), 0.0, 1.0)
    return np.column_stack([nc, dac, ttc, comf, ep])


def imitation_target(distances) -> np.ndarray:
    """Softmax of negated distances (max-shifted for stability)."""
    d = np.asarray(distances, dtype=float)
    z = -d
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def combined_plan_score(r_im: float, b: RewardBreakdown,
                        w: PlanScoreWeights = DEFAULT_WEIGHTS) -> float:
    """Weighted log-sum planning score; larger is better.

    Sub-rewards are clamped below at `w.eps` before the log, so hard-zero
    flags contribute a large finite penalty instead of -inf.
    """
    i1, i2, i3 = w.inner
    inner = i1 * b.ttc + i2 * b.comf + i3 * b.ep
    return float(w.w1 * np.log(max(r_im, w.eps))
                 + w.w2 * np.log(max(b.nc, w.eps))
                 + w.w3 * np.log(max(b.dac, w.eps))
                 + w.w4 * np.log(max(inner, w.eps)))


def plan_cost(r_im: float, b: RewardBreakdown,
              w: PlanScoreWeights = DEFAULT_WEIGHTS) -> float:
    """Sign-flipped planning objective (cost convention; smaller is better).

    Kept as an independent computation so ordering equivalence against
    `combined_plan_score` can be asserted rather than assumed.
    """
    i1, i2, i3 = w.inner
    inner = i1 * b.ttc + i2 * b.comf + i3 * b.ep
    return float(-(w.w1 * np.log(max(r_im, w.eps))
                   + w.w2 * np.log(max(b.nc, w.eps))
                   + w.w3 * np.log(max(b.dac, w.eps))
                   + w.w4 * np.log(max(inner, w.eps))))


def combined_plan_scores_batch(r_im: np.ndarray, breakdown: np.ndarray,
                               w: PlanScoreWeights = DEFAULT_WEIGHTS) -> np.ndarray:
    """Vectorized combined_plan_score over (N,) r_im and (N, 5) breakdowns."""
    i1, i2, i3 = w.inner
    inner = i1 * breakdown[:, 2] + i2 * breakdown[:, 3] + i3 * breakdown[:, 4]
    return (w.w1 * np.log(np.maximum(r_im, w.eps))
            + w.w2 * np.log(np.maximum(breakdown[:, 0], w.eps))
            + w.w3 * np.log(np.maximum(breakdown[:, 1], w.eps))
            + w.w4 * np.log(np.maximum(inner, w.eps)))


def driving_score(b: RewardBreakdown) -> float:
    """Gated scalar oracle: nc * dac * (5 ttc + 2 comf + 5 ep) / 12."""
    return float(b.nc * b.dac * (5.0 * b.ttc + 2.0 * b.comf + 5.0 * b.ep) / 12.0)


def driving_scores_batch(breakdown: np.ndarray) -> np.ndarray:
    return (breakdown[:, 0] * breakdown[:, 1]
            * (5.0 * breakdown[:, 2] + 2.0 * breakdown[:, 3]
               + 5.0 * breakdown[:, 4]) / 12.0)
