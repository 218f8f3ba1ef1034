"""Linear-beta diffusion schedule and derived quantities."""

from __future__ import annotations

import numpy as np


class DiffusionSchedule:
    """betas linear in (beta_start, beta_end) over `steps` timesteps.

    Index convention: timestep t runs 1..steps; alpha_bar[0] = 1 is the
    clean-data endpoint used by the deterministic sampler's final hop.
    """

    def __init__(self, steps: int = 50, beta_start: float = 1e-4,
                 beta_end: float = 0.30):
        if steps < 1:
            raise ValueError("steps must be >= 1")
        self.steps = int(steps)
        self.betas = np.linspace(beta_start, beta_end, steps)
        if not (np.all(np.diff(self.betas) > 0) and 0.0 < self.betas[0]
                and self.betas[-1] < 1.0):
            raise ValueError("betas must be strictly increasing inside (0, 1)")
        alphas = 1.0 - self.betas
        self.alpha_bar = np.concatenate([[1.0], np.cumprod(alphas)])
        assert np.all(np.diff(self.alpha_bar) < 0) and self.alpha_bar[-1] > 0.0

    def noise_to(self, z0: np.ndarray, t: np.ndarray,
                 eps: np.ndarray) -> np.ndarray:
        """Forward process: z_t = sqrt(abar_t) z0 + sqrt(1-abar_t) eps."""
        ab = self.alpha_bar[np.asarray(t)]
        shape = (-1,) + (1,) * (z0.ndim - 1)
        return (np.sqrt(ab).reshape(shape) * z0
                + np.sqrt(1.0 - ab).reshape(shape) * eps)

    def sampling_timesteps(self, sample_steps: int) -> np.ndarray:
        """Descending, unique timesteps from `steps` down toward 1."""
        ts = np.linspace(self.steps, 1, sample_steps).round().astype(int)
        keep = np.concatenate([[True], np.diff(ts) != 0])
        return ts[keep]
