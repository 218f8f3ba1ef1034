"""Deterministic (eta=0) subsampled reverse diffusion."""

from __future__ import annotations

import numpy as np

from .. import instrumentation
from ..errors import InvalidSteps
from ..nn import Tensor
from .model import WorldModel
from .schedule import DiffusionSchedule


def derived_seed(*parts: int) -> int:
    """Stable per-(scene, candidate) sampling seed."""
    ss = np.random.SeedSequence(tuple(int(p) for p in parts))
    return int(ss.generate_state(1)[0])


def sample_future_latent(wm: WorldModel, f_tokens: np.ndarray,
                         c_rows: np.ndarray, sample_steps: int,
                         seed,
                         schedule: DiffusionSchedule | None = None) -> np.ndarray:
    """Sample future latent tokens conditioned on history and motion.

    Batched: f_tokens (B, n_lat, C_lat), c_rows (B, K, C) produce
    (B, n_lat, C_lat). `seed` is one int per batch element (or a single
    int, shared), so results do not depend on how elements are grouped
    into batches.
    """
    if sample_steps < 1:
        raise InvalidSteps(f"sample_steps={sample_steps}")
    instrumentation.bump("sampler")
    cfg = wm.cfg
    sched = schedule or DiffusionSchedule(cfg.diffusion_steps, cfg.beta_start,
                                          cfg.beta_end)
    f_tokens = np.asarray(f_tokens, dtype=float)
    c_rows = np.asarray(c_rows, dtype=float)
    squeeze = f_tokens.ndim == 2
    if squeeze:
        f_tokens = f_tokens[None]
        c_rows = c_rows[None]
    B = f_tokens.shape[0]
    seeds = np.broadcast_to(np.asarray(seed, dtype=np.uint64).ravel(), (B,)) \
        if np.ndim(seed) else np.full(B, int(seed), dtype=np.uint64)
    if np.ndim(seed) and len(np.atleast_1d(seed)) not in (1, B):
        raise InvalidSteps("seed array must have length 1 or B")
    shape = (cfg.n_latent_tokens, cfg.latent_channels)
    x = np.stack([
        np.random.Generator(np.random.PCG64(
            np.random.SeedSequence(int(s)))).standard_normal(shape)
        for s in seeds
    ])

    ts = sched.sampling_timesteps(sample_steps)
    f_t = Tensor(f_tokens)
    c_t = Tensor(c_rows)
    for i, t in enumerate(ts):
        t_arr = np.full(B, t, dtype=int)
        eps = wm.denoise(Tensor(x), f_t, t_arr, c_t, frozen=True).data
        ab_t = sched.alpha_bar[t]
        ab_next = sched.alpha_bar[ts[i + 1]] if i + 1 < len(ts) else sched.alpha_bar[0]
        x0_hat = (x - np.sqrt(1.0 - ab_t) * eps) / np.sqrt(ab_t)
        x = np.sqrt(ab_next) * x0_hat + np.sqrt(1.0 - ab_next) * eps
    return x[0] if squeeze else x
