"""Final trajectory selection."""

from __future__ import annotations

import numpy as np

from ..planner.model import Candidate
from ..worldsim.types import Trajectory


def select_trajectory(candidates: list[Candidate], rewards) -> Trajectory:
    """Highest-reward candidate; ties keep the planner's order."""
    if not candidates:
        raise ValueError("empty candidate list")
    r = np.asarray(rewards, dtype=float)
    return candidates[int(np.argmax(r))].trajectory
