"""Rule-based expert: pure-pursuit steering with agent-aware speed control."""

from __future__ import annotations

import numpy as np

from ..geometry import rot2d, wrap_angle
from .types import Scene, Trajectory

# candidate accelerations, best first; jerk-feasible subset applies per step
_ACCEL_CANDIDATES = (1.5, 0.75, 0.0, -0.75, -1.5, -2.25, -3.0)
_MAX_BRAKE = -3.0
_JERK_STEP = 1.25          # max |accel change| per planning step (jerk 2.5/s)
_LAT_ACCEL_MAX = 2.0
_CLEARANCE = 0.7
_TTC_MARGIN = 1.1


def _curve_speed_limit(scene: Scene, s: float, v: float) -> float:
    params = scene.params
    route = scene.route
    lookahead = max(6.0, v * 2.0 + 4.0)
    ss = np.arange(s, min(route.length, s + lookahead) + 1e-9, 2.0)
    k = max((abs(route.curvature_at(float(x))) for x in ss), default=0.0)
    v_curve = np.sqrt(_LAT_ACCEL_MAX / max(k, 1e-6))
    return float(min(params.cruise_speed, v_curve, params.v_max))


def _plan_is_safe(scene: Scene, s: float, v: float, accel: float,
                  a_prev: float, t0: float) -> bool:
    """Simulate along-route motion: `accel` one step, then jerk-limited braking.

    The plan is safe when clearance and per-step time-to-collision against
    every constant-velocity agent stay above margins for the whole episode.
    """
    params = scene.params
    dt = params.dt
    apos, avel, radii = scene.agent_array()
    if radii.size == 0:
        return True
    horizon = 12
    s_sim, v_sim, a_sim = s, v, accel
    for j in range(horizon):
        v_next = float(np.clip(v_sim + a_sim * dt, 0.0, params.v_max))
        s_next = s_sim + 0.5 * (v_sim + v_next) * dt
        t = t0 + (j + 1) * dt
        p = scene.route.point_at(min(s_next, scene.route.length))
        heading = float(scene.route.heading_at(min(s_next, scene.route.length)))
        vel_ego = v_next * np.array([np.cos(heading), np.sin(heading)])
        ap = apos + avel * t
        dp = ap - p
        dist = np.linalg.norm(dp, axis=1) - (radii + params.r_ego)
        if np.any(dist < _CLEARANCE):
            return False
        dv = avel - vel_ego
        a_q = np.sum(dv * dv, axis=1)
        b_q = 2.0 * np.sum(dp * dv, axis=1)
        c_q = np.sum(dp * dp, axis=1) - (radii + params.r_ego) ** 2
        disc = b_q * b_q - 4.0 * a_q * c_q
        with np.errstate(invalid="ignore", divide="ignore"):
            root = (-b_q - np.sqrt(np.maximum(disc, 0.0))) / (2.0 * a_q)
        ttc = np.where((disc >= 0) & (a_q > 1e-12) & (root >= 0), root, np.inf)
        ttc = np.where(c_q <= 0, 0.0, ttc)
        if np.any(ttc < _TTC_MARGIN):
            return False
        s_sim, v_sim = s_next, v_next
        a_sim = max(_MAX_BRAKE, a_sim - _JERK_STEP)  # decay into braking
        if v_sim <= 0.0 and a_sim <= 0.0:
            a_sim = 0.0
    return True


def expert_policy(scene: Scene) -> Trajectory:
    """F-waypoint demonstration tracking the route centerline."""
    params = scene.params
    dt = params.dt
    route = scene.route
    p = np.array(scene.ego.position, dtype=float)
    psi = float(scene.ego.heading)
    v = float(scene.ego.speed)
    a_prev = float(scene.ego.accel)
    poses = [(p[0], p[1], psi)]

    for step in range(params.horizon_steps - 1):
        s_proj = route.project(p)
        v_limit = _curve_speed_limit(scene, s_proj, v)

        accel = None
        for cand in _ACCEL_CANDIDATES:
            a_c = float(np.clip(cand, a_prev - _JERK_STEP, a_prev + _JERK_STEP))
            if v + a_c * dt > v_limit + 0.3:
                continue
            if _plan_is_safe(scene, s_proj, v, a_c, a_prev, step * dt):
                accel = a_c
                break
        if accel is None:
            # nothing both comfortable and safe: jerk-limited hard brake
            accel = max(_MAX_BRAKE, a_prev - _JERK_STEP)

        v_next = float(np.clip(v + accel * dt, 0.0, params.v_max))
        # pure pursuit, integrated in substeps for smooth heading
        n_sub = 5
        for k in range(n_sub):
            v_sub = v + (v_next - v) * (k + 0.5) / n_sub
            ds = v_sub * dt / n_sub
            if ds < 1e-9:
                continue
            s_here = route.project(p)
            l_d = float(np.clip(0.9 * v_sub + 1.5, 2.5, 7.0))
            target = route.point_at(min(s_here + l_d, route.length))
            alpha = wrap_angle(np.arctan2(target[1] - p[1], target[0] - p[0]) - psi)
            kappa = 2.0 * np.sin(alpha) / l_d
            kappa = float(np.clip(kappa, -0.95 / max(v_sub, 1.0),
                                  0.95 / max(v_sub, 1.0)))
            psi = wrap_angle(psi + kappa * ds)
            p = p + ds * np.array([np.cos(psi), np.sin(psi)])
        a_prev = (v_next - v) / dt
        v = v_next
        poses.append((p[0], p[1], psi))

    return Trajectory(np.array(poses), dt)
