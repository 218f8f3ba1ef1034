from .config import ExperimentConfig, config_hash, load_config, save_config
from .data import SceneBundle, build_bundles, split_spec

__all__ = [
    "ExperimentConfig", "config_hash", "load_config", "save_config",
    "SceneBundle", "build_bundles", "split_spec",
]
