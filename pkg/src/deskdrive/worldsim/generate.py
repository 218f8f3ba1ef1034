"""Procedural scene generation.

Everything is a pure function of (seed, difficulty): route shape, the
drivable corridor rasterized around it, the ego spawn, and constant-
velocity agents placed ahead of the ego with collision-free spacing.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from ..geometry import Polyline, rot2d, wrap_angle
from .types import (DEFAULT_PARAMS, DIFFICULTIES, AgentState, EgoState, Scene,
                    WorldParams)

_AGENT_COUNTS = {"empty": (0, 0), "sparse": (1, 3), "dense": (4, 8)}

# steering back from this radius at max curvature must stay inside the grid
_ROUTE_GUARD_RADIUS = 30.0


def _route_walk(rng: np.random.Generator, params: WorldParams) -> np.ndarray:
    center = np.array([params.world_extent / 2.0] * 2)
    length = rng.uniform(66.0, 88.0)
    p = center + rng.uniform(-10.0, 10.0, size=2)
    psi = rng.uniform(-np.pi, np.pi)
    kappa_max = params.curvature_max
    ds = 1.0
    seg_left = 0.0
    kappa = 0.0
    pts = [p.copy()]
    s = 0.0
    while s < length:
        if seg_left <= 0.0:
            seg_left = rng.uniform(8.0, 16.0)
            kappa = rng.uniform(-kappa_max, kappa_max)
        rel = p - center
        r = np.hypot(rel[0], rel[1])
        k_eff = kappa
        if r > _ROUTE_GUARD_RADIUS:
            ang = wrap_angle(np.arctan2(-rel[1], -rel[0]) - psi)
            blend = min(1.0, (r - _ROUTE_GUARD_RADIUS) / 5.0)
            k_eff = np.clip(kappa + blend * kappa_max * 2.0 * np.sign(ang),
                            -kappa_max, kappa_max)
        psi = wrap_angle(psi + k_eff * ds)
        p = p + ds * np.array([np.cos(psi), np.sin(psi)])
        pts.append(p.copy())
        s += ds
        seg_left -= ds
    return np.array(pts)


def _self_close(points: np.ndarray, min_sep_s: float = 15.0,
                min_sep_d: float = 10.5) -> bool:
    """True when far-apart arclength points come too close in space."""
    step = 2
    sub = points[::step]
    n = len(sub)
    for i in range(n):
        d = np.linalg.norm(sub[i + int(min_sep_s) // step + 1:] - sub[i], axis=1)
        if d.size and d.min() < min_sep_d:
            return True
    return False


def corridor_grid(route: Polyline, params: WorldParams) -> tuple[np.ndarray, tuple]:
    """Rasterize a drivable corridor of fixed halfwidth around the route.

    The corridor is the union of discs centered on route points resampled
    every 0.2 m of arclength; the sampling is arclength-based, so a rigid
    transform of the route transforms the corridor region exactly.
    """
    n = params.world_cells
    cell = params.world_cell_size
    origin = (0.0, 0.0)
    grid = np.zeros((n, n), dtype=bool)
    pad = params.corridor_halfwidth + 2.0 * cell
    lo = np.maximum(np.floor((route.points.min(axis=0) - pad) / cell).astype(int), 0)
    hi = np.minimum(np.ceil((route.points.max(axis=0) + pad) / cell).astype(int), n - 1)
    cols = np.arange(lo[0], hi[0] + 1)
    rows = np.arange(lo[1], hi[1] + 1)
    cx = (cols + 0.5) * cell
    cy = (rows + 0.5) * cell
    xx, yy = np.meshgrid(cx, cy)
    pts = np.stack([xx.ravel(), yy.ravel()], axis=1)
    s = np.arange(0.0, route.length + 1e-9, 0.2)
    dist, _ = cKDTree(route.point_at(s)).query(pts, k=1)
    near = dist <= params.corridor_halfwidth
    grid[np.ix_(rows, cols)] = near.reshape(len(rows), len(cols))
    return grid, origin


def _command_from_curvature(route: Polyline, s0: float) -> str:
    ss = np.linspace(s0 + 2.0, min(route.length, s0 + 17.0), 8)
    kappas = [route.curvature_at(float(s)) for s in ss]
    mean_k = float(np.mean(kappas))
    if mean_k > 0.02:
        return "left"
    if mean_k < -0.02:
        return "right"
    return "straight"


def generate_scene(seed: int, difficulty: str,
                   params: WorldParams = DEFAULT_PARAMS) -> Scene:
    """Deterministic scene from (seed, difficulty)."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    if difficulty not in DIFFICULTIES:
        raise ValueError(f"difficulty must be one of {DIFFICULTIES}")
    diff_code = DIFFICULTIES.index(difficulty)

    for attempt in range(8):
        rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence((int(seed), diff_code, attempt))))
        pts = _route_walk(rng, params)
        if not _self_close(pts):
            break
    route = Polyline(pts)
    grid, origin = corridor_grid(route, params)

    s0 = float(rng.uniform(2.0, 6.0))
    ego_pos = route.point_at(s0)
    ego_heading = float(route.heading_at(s0))
    speed = float(rng.uniform(2.0, 7.0))
    ego = EgoState(position=(float(ego_pos[0]), float(ego_pos[1])),
                   heading=ego_heading, speed=speed, accel=0.0,
                   command=_command_from_curvature(route, s0))

    lo, hi = _AGENT_COUNTS[difficulty]
    n_agents = 0 if hi == 0 else int(rng.integers(lo, hi + 1))
    gap_min = max(10.0, speed * speed / 6.0 + 8.0)
    agents: list[AgentState] = []
    for _ in range(n_agents):
        placed = False
        for _try in range(60):
            s_a = float(rng.uniform(s0 + gap_min,
                                    min(route.length - 6.0, s0 + 48.0)))
            lateral = float(rng.uniform(-2.5, 2.5))
            tangent = float(route.heading_at(s_a))
            normal = rot2d(tangent) @ np.array([0.0, 1.0])
            pos = route.point_at(s_a) + lateral * normal
            radius = float(rng.uniform(0.8, 1.4))
            a_speed = float(rng.uniform(0.0, 6.0))
            if np.linalg.norm(pos - ego_pos) < params.r_ego + radius + 2.0:
                continue
            ok = all(np.linalg.norm(pos - np.asarray(b.position)) >
                     radius + b.radius + 0.5 for b in agents)
            if not ok:
                continue
            vel = a_speed * np.array([np.cos(tangent), np.sin(tangent)])
            agents.append(AgentState(position=(float(pos[0]), float(pos[1])),
                                     velocity=(float(vel[0]), float(vel[1])),
                                     radius=radius))
            placed = True
            break
        if not placed:
            # crowded draw; deterministic fallback keeps the count contract
            s_a = float(min(route.length - 6.0, s0 + gap_min + 6.0 * len(agents)))
            tangent = float(route.heading_at(s_a))
            pos = route.point_at(s_a)
            agents.append(AgentState(position=(float(pos[0]), float(pos[1])),
                                     velocity=(0.0, 0.0), radius=0.8))

    return Scene(drivable=grid, origin=origin, cell_size=params.world_cell_size,
                 route=route, ego=ego, agents=agents, seed=int(seed),
                 difficulty=difficulty, params=params)
