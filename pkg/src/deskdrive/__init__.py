"""Desk-scale driving stack.

A deterministic, CPU-only pipeline coupling three pieces:

* a procedural 2D kinematic driving world with expert demonstrations,
* a trajectory-conditioned latent diffusion world model trained on
  ego-centric occupancy observations,
* an anchor-vocabulary planner plus a distilled future-aware rewarder
  that re-scores candidate trajectories without touching the denoiser
  at inference time.
"""

__version__ = "0.1.0"
