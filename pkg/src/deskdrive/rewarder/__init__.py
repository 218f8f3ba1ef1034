from .model import Rewarder
from .pairs import PreferencePair, build_preference_pairs
from .losses import align_loss, bt_loss
from .select import select_trajectory
from .training import FarSceneData, prepare_far_data, train_far

__all__ = [
    "Rewarder", "PreferencePair", "build_preference_pairs", "align_loss",
    "bt_loss", "select_trajectory", "FarSceneData", "prepare_far_data",
    "train_far",
]
