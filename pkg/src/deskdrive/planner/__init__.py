from .model import Planner, PlannerOutput, Candidate
from .targets import PlannerTargets, build_targets, targets_for_scenes
from .training import planner_loss, train_planner

__all__ = [
    "Planner", "PlannerOutput", "Candidate", "PlannerTargets",
    "build_targets", "targets_for_scenes", "planner_loss", "train_planner",
]
