from .schedule import DiffusionSchedule
from .model import WorldModel, WorldModelConfig, latent_to_array, patchify_observation
from .training import diffusion_train_step, train_world_model, validation_loss
from .sampling import sample_future_latent, derived_seed
from .sensitivity import motion_sensitivity

__all__ = [
    "DiffusionSchedule", "WorldModel", "WorldModelConfig", "latent_to_array",
    "patchify_observation", "diffusion_train_step", "train_world_model",
    "validation_loss", "sample_future_latent", "derived_seed",
    "motion_sensitivity",
]
