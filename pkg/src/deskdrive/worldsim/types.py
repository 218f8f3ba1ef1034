"""Domain types for the procedural 2D driving world."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import TrajectoryTooShort
from ..geometry import Polyline, wrap_angle

DIFFICULTIES = ("empty", "sparse", "dense")


@dataclass(frozen=True)
class WorldParams:
    """Geometry and kinematics defaults shared across the pipeline."""

    world_cells: int = 256          # world occupancy grid is square
    world_cell_size: float = 0.5    # meters per world cell
    obs_cells: int = 64             # ego-centric observation grid side
    obs_cell_size: float = 0.5
    history_frames: int = 4         # T
    horizon_steps: int = 8          # F waypoints, waypoint 0 = current pose
    dt: float = 0.5
    v_max: float = 15.0
    r_ego: float = 1.5
    ttc_safe: float = 1.0
    corridor_halfwidth: float = 4.5
    # incommensurate with the pixel lattice so band-edge distances never
    # tie the threshold exactly under rigid transforms
    route_mask_halfwidth: float = 0.9
    curvature_max: float = 0.08
    cruise_speed: float = 8.0

    @property
    def world_extent(self) -> float:
        return self.world_cells * self.world_cell_size

    @property
    def anchor_cell(self) -> tuple[int, int]:
        # ego sits 3/4 back along rows so most of the view is ahead
        return (3 * self.obs_cells // 4 - 1, self.obs_cells // 2)


DEFAULT_PARAMS = WorldParams()


@dataclass(frozen=True)
class Waypoint:
    x: float
    y: float
    heading: float


class Trajectory:
    """F timestamped planar poses; waypoint i is the pose at time i*dt.

    Backed by an (F, 3) array of (x, y, heading). Waypoint 0 is the pose
    at the start of the horizon.
    """

    __slots__ = ("poses", "dt")

    def __init__(self, poses: np.ndarray, dt: float = 0.5):
        poses = np.asarray(poses, dtype=float)
        if poses.ndim != 2 or poses.shape[1] != 3:
            raise ValueError(f"poses must be (F, 3), got {poses.shape}")
        if poses.shape[0] < 2:
            raise TrajectoryTooShort(f"need F >= 2 waypoints, got {poses.shape[0]}")
        if dt <= 0:
            raise ValueError("dt must be positive")
        poses = poses.copy()
        poses[:, 2] = wrap_angle(poses[:, 2])
        self.poses = poses
        self.dt = float(dt)

    @property
    def F(self) -> int:
        return self.poses.shape[0]

    @property
    def xy(self) -> np.ndarray:
        return self.poses[:, :2]

    @property
    def headings(self) -> np.ndarray:
        return self.poses[:, 2]

    @property
    def waypoints(self) -> list[Waypoint]:
        return [Waypoint(*row) for row in self.poses]

    def validate_spacing(self, v_max: float) -> bool:
        step = np.linalg.norm(np.diff(self.xy, axis=0), axis=1)
        return bool(np.all(step <= v_max * self.dt + 1e-9))

    def __eq__(self, other) -> bool:
        return (isinstance(other, Trajectory) and self.dt == other.dt
                and np.array_equal(self.poses, other.poses))

    def copy(self) -> "Trajectory":
        return Trajectory(self.poses.copy(), self.dt)


@dataclass
class EgoState:
    position: tuple[float, float]
    heading: float
    speed: float
    accel: float
    command: str  # left | straight | right


@dataclass
class AgentState:
    position: tuple[float, float]
    velocity: tuple[float, float]
    radius: float


@dataclass
class Scene:
    drivable: np.ndarray           # (H_w, W_w) bool, world frame
    origin: tuple[float, float]    # world coords of cell (0, 0) corner
    cell_size: float
    route: Polyline
    ego: EgoState
    agents: list[AgentState]
    seed: int
    difficulty: str
    params: WorldParams = field(default=DEFAULT_PARAMS)

    def agent_array(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(positions (A,2), velocities (A,2), radii (A,)); empty-safe."""
        if not self.agents:
            z = np.zeros((0, 2))
            return z, z.copy(), np.zeros(0)
        pos = np.array([a.position for a in self.agents], dtype=float)
        vel = np.array([a.velocity for a in self.agents], dtype=float)
        rad = np.array([a.radius for a in self.agents], dtype=float)
        return pos, vel, rad

    def is_drivable(self, points: np.ndarray) -> np.ndarray:
        """Boolean drivable lookup for (..., 2) world points (outside -> False)."""
        pts = np.asarray(points, dtype=float)
        idx = np.floor((pts - np.asarray(self.origin)) / self.cell_size).astype(int)
        rows, cols = idx[..., 1], idx[..., 0]
        h, w = self.drivable.shape
        ok = (rows >= 0) & (rows < h) & (cols >= 0) & (cols < w)
        out = np.zeros(pts.shape[:-1], dtype=bool)
        safe_r = np.clip(rows, 0, h - 1)
        safe_c = np.clip(cols, 0, w - 1)
        out[...] = self.drivable[safe_r, safe_c] & ok
        return out


@dataclass
class RolloutResult:
    ego_poses: np.ndarray          # (F, 3)
    agent_poses: np.ndarray        # (F, A, 2)
    collided_step: int | None
    offroad_step: int | None
    progress: float


@dataclass
class Observation:
    frames: np.ndarray             # (T, 3, H, W) uint8, channels: drivable/agents/route
    anchor_cell: tuple[int, int]
    cell_size: float

    @property
    def T(self) -> int:
        return self.frames.shape[0]
