"""Future-aware rewarder: distilled future latents score candidates.

Learnable scene queries cross-attend to the frozen history latent plus
a candidate's motion embedding, predicting the future latent the world
model would have sampled for that candidate; a second decoder lets the
candidate embedding query the predicted future; a zero-initialized head
maps the result to a scalar reward. The denoiser is never invoked.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch
from ..nn import AttentionBlock, Linear, Mlp, ParamStore, Tensor, concat
from ..nn.layers import positional_grid
from ..planner.model import Candidate
from ..worldmodel.model import WorldModel


def candidate_rows(wm: WorldModel, candidates: list[Candidate]) -> np.ndarray:
    """Single-row motion embedding per candidate under the frozen encoders,
    anchored at its own anchor with the refined offset as the residual."""
    idx = np.array([c.anchor_index for c in candidates])
    flat_anchor = wm._anchor_flat[idx]
    refined = np.stack([c.trajectory.xy.ravel() for c in candidates])
    a = wm.anchor_enc(Tensor(flat_anchor.astype(wm.store.dtype)), frozen=True)
    o = wm.offset_enc(Tensor((refined - flat_anchor).astype(wm.store.dtype)),
                      frozen=True)
    return (a + o).data


class Rewarder:
    def __init__(self, wm: WorldModel, scene_queries: int = 16,
                 mode: str = "traj_future", init_seed: int = 0,
                 store: ParamStore | None = None):
        if mode not in ("traj_only", "traj_future"):
            raise ValueError(f"unknown rewarder mode {mode!r}")
        cfg = wm.cfg
        total = cfg.n_latent_tokens * cfg.latent_channels
        if total % scene_queries != 0:
            raise ValueError(f"scene_queries={scene_queries} must divide {total}")
        self.wm = wm
        self.mode = mode
        self.M = scene_queries
        self.store = store if store is not None else ParamStore()
        C = cfg.channels
        rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence((init_seed, 303))))
        positional_grid(self.store, "far.scene_q", scene_queries, C, rng)
        self.f_kv = Linear(self.store, "far.f_kv", cfg.latent_channels, C, rng)
        positional_grid(self.store, "far.f_pos", cfg.n_latent_tokens, C, rng)
        self.distill_block = AttentionBlock(self.store, "far.distill", C, rng)
        self.latent_head = Linear(self.store, "far.latent", C,
                                  total // scene_queries, rng)
        self.z_kv = Linear(self.store, "far.z_kv", cfg.latent_channels, C, rng)
        positional_grid(self.store, "far.z_pos", cfg.n_latent_tokens, C, rng)
        self.reward_block = AttentionBlock(self.store, "far.reward", C, rng)
        self.reward_head = Mlp(self.store, "far.head", C, C, 1, rng,
                               zero_out=True)

    # -- candidate embedding (frozen encoders) -------------------------------

    def candidate_rows(self, candidates: list[Candidate]) -> np.ndarray:
        return candidate_rows(self.wm, candidates)

    # -- distillation and reward ----------------------------------------------

    def distill_future(self, f_tokens: np.ndarray, cand_rows: np.ndarray,
                       frozen: bool = False) -> Tensor:
        """Predict future latent tokens (B, n_lat, C_lat); no denoiser call."""
        cfg = self.wm.cfg
        f_tokens = np.asarray(f_tokens, dtype=self.store.dtype)
        cand_rows = np.asarray(cand_rows, dtype=self.store.dtype)
        if cand_rows.ndim == 1:
            cand_rows = cand_rows[None]
        B = cand_rows.shape[0]
        if f_tokens.ndim == 2:
            f_tokens = np.broadcast_to(f_tokens[None],
                                       (B,) + f_tokens.shape).copy()
        if f_tokens.shape[0] != B:
            raise ShapeMismatch("f_tokens/candidates batch mismatch")
        get = self.store.const if frozen else self.store.tensor
        kv_f = self.f_kv(Tensor(f_tokens), frozen) + get("far.f_pos")
        rows = Tensor(cand_rows).reshape(B, 1, cand_rows.shape[-1])
        kv = concat([kv_f, rows], axis=1)
        h = self.distill_block(get("far.scene_q"), kv, frozen=frozen)
        z = self.latent_head(h, frozen)
        return z.reshape(B, cfg.n_latent_tokens, cfg.latent_channels)

    def future_reward(self, cand_rows: np.ndarray, z_hat: Tensor,
                      frozen: bool = False) -> Tensor:
        """Scalar reward per candidate from its (distilled) future feature."""
        cand_rows = np.asarray(cand_rows, dtype=self.store.dtype)
        if cand_rows.ndim == 1:
            cand_rows = cand_rows[None]
        B = cand_rows.shape[0]
        q = Tensor(cand_rows).reshape(B, 1, cand_rows.shape[-1])
        if self.mode == "traj_only":
            h = q
        else:
            get = self.store.const if frozen else self.store.tensor
            zt = self.z_kv(z_hat, frozen) + get("far.z_pos")
            h = self.reward_block(q, zt, frozen=frozen)
        r = self.reward_head(h, frozen)
        return r.reshape(B)

    # -- inference --------------------------------------------------------------

    def score_candidates(self, f_tokens: np.ndarray,
                         candidates: list[Candidate]) -> np.ndarray:
        """Rewards for a candidate list; pure function, no sampler/denoiser."""
        rows = self.candidate_rows(candidates)
        if self.mode == "traj_only":
            return self.future_reward(rows, None, frozen=True).data
        z_hat = self.distill_future(f_tokens, rows, frozen=True)
        return self.future_reward(rows, z_hat, frozen=True).data
