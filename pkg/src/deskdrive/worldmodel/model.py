"""Trajectory-conditioned latent world model.

The history encoder turns stacked binary BEV frames into a small latent
token grid. The motion encoder embeds a trajectory as anchor embeddings
plus residual-offset embeddings (summed per retrieved anchor). The
denoiser predicts the noise added to future latents conditioned on the
history latent, timestep, and pooled motion rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import instrumentation
from ..errors import KOutOfRange, ShapeMismatch
from ..nn import (AttentionBlock, EmbeddingTable, Linear, Mlp, ParamStore,
                  Tensor, concat)
from ..nn.layers import positional_grid
from ..vocab import TrajectoryVocabulary
from ..worldsim.types import Observation


@dataclass(frozen=True)
class WorldModelConfig:
    channels: int = 64            # transformer width C
    latent_channels: int = 8      # C_lat
    latent_grid: int = 8          # H' = W'
    patch: int = 8                # patch side for the history encoder
    obs_cells: int = 64
    history_frames: int = 4
    horizon_steps: int = 8        # F
    diffusion_steps: int = 50     # T_d
    beta_start: float = 1e-4
    beta_end: float = 0.30
    sample_steps: int = 10
    topk_condition: int = 5       # K anchors in the motion embedding
    init_seed: int = 0

    @property
    def n_tokens(self) -> int:
        return (self.obs_cells // self.patch) ** 2

    @property
    def patch_dim(self) -> int:
        return self.history_frames * 3 * self.patch * self.patch

    @property
    def n_latent_tokens(self) -> int:
        return self.latent_grid * self.latent_grid


def patchify_observation(obs: Observation, patch: int) -> np.ndarray:
    """(T, 3, H, W) frames -> (n_tokens, T*3*patch^2) uint8 patch rows."""
    t, c, h, w = obs.frames.shape
    g = h // patch
    arr = obs.frames.reshape(t * c, g, patch, g, patch)
    return np.ascontiguousarray(arr.transpose(1, 3, 0, 2, 4).reshape(g * g, -1))


def latent_to_array(tokens: np.ndarray, cfg: WorldModelConfig) -> np.ndarray:
    """Token-form latent (n_tok, C_lat) -> (C_lat, H', W') array."""
    g = cfg.latent_grid
    return np.ascontiguousarray(tokens.T.reshape(cfg.latent_channels, g, g))


class WorldModel:
    def __init__(self, cfg: WorldModelConfig, vocab: TrajectoryVocabulary,
                 store: ParamStore | None = None):
        self.cfg = cfg
        self.vocab = vocab
        self.store = store if store is not None else ParamStore()
        rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence((cfg.init_seed, 101))))
        C = cfg.channels

        # history encoder (visual adapter analog): patch embed -> pooled grid
        self.patch_proj = Linear(self.store, "enc.patch", cfg.patch_dim, C, rng)
        positional_grid(self.store, "enc.pos", cfg.n_tokens, C, rng)
        positional_grid(self.store, "enc.pool_q", cfg.n_latent_tokens, C, rng)
        self.pool_block = AttentionBlock(self.store, "enc.pool", C, rng)
        self.out_proj = Linear(self.store, "enc.out", C, cfg.latent_channels, rng)

        # motion encoder: anchor embed + zero-initialized offset embed
        flat = 2 * cfg.horizon_steps
        self.anchor_enc = Mlp(self.store, "motion.anchor", flat, C, C, rng)
        self.offset_enc = Mlp(self.store, "motion.offset", flat, C, C, rng,
                              zero_out=True)

        # denoiser
        self.z_proj = Linear(self.store, "den.z", cfg.latent_channels, C, rng)
        positional_grid(self.store, "den.z_pos", cfg.n_latent_tokens, C, rng)
        self.f_proj = Linear(self.store, "den.f", cfg.latent_channels, C, rng)
        positional_grid(self.store, "den.f_pos", cfg.n_latent_tokens, C, rng)
        self.t_embed = EmbeddingTable(self.store, "den.t",
                                      cfg.diffusion_steps + 1, C, rng)
        self.c_proj = Linear(self.store, "den.c", C, C, rng)
        self.block1 = AttentionBlock(self.store, "den.b1", C, rng)
        self.block2 = AttentionBlock(self.store, "den.b2", C, rng)
        self.head = Linear(self.store, "den.head", C, cfg.latent_channels, rng,
                           zero_init=True)

        # fixed target-standardization stats (calibrated before training);
        # they carry no gradients and persist through checkpoints
        self.store.add("z_norm.mu", np.zeros((cfg.n_latent_tokens,
                                              cfg.latent_channels)))
        self.store.add("z_norm.sd", np.ones((cfg.n_latent_tokens,
                                             cfg.latent_channels)))

        self._anchor_xy = self.vocab.anchor_xy()          # (N, F, 2)
        self._anchor_flat = self._anchor_xy.reshape(self.vocab.N, -1)

    # -- encoders ---------------------------------------------------------

    def encode_history(self, patches: np.ndarray, frozen: bool = False) -> Tensor:
        """Patch rows (B, n_tok, patch_dim) -> latent tokens (B, n_lat, C_lat)."""
        arr = np.asarray(patches, dtype=self.store.dtype)
        if arr.ndim == 2:
            arr = arr[None]
        if arr.shape[-2:] != (self.cfg.n_tokens, self.cfg.patch_dim):
            raise ShapeMismatch(f"patches {arr.shape}, expected "
                                f"(*, {self.cfg.n_tokens}, {self.cfg.patch_dim})")
        get = self.store.const if frozen else self.store.tensor
        tok = self.patch_proj(Tensor(arr), frozen) + get("enc.pos")
        pooled = self.pool_block(get("enc.pool_q"), tok, frozen=frozen)
        return self.out_proj(pooled, frozen)

    def encode_future_targets(self, mid_patches: np.ndarray,
                              end_patches: np.ndarray) -> np.ndarray:
        """Standardized future latents: half channels midpoint, half endpoint.

        Runs under stop-gradient; the fixed standardization keeps the
        informative (scene- and motion-dependent) variation at unit scale
        so a denoiser cannot explain the targets with biases alone.
        """
        half = self.cfg.latent_channels // 2
        mid = self.encode_history(np.asarray(mid_patches, dtype=self.store.dtype),
                                  frozen=True).data
        end = self.encode_history(np.asarray(end_patches, dtype=self.store.dtype),
                                  frozen=True).data
        z0 = np.concatenate([mid[:, :, :half], end[:, :, :half]], axis=2)
        return (z0 - self.store["z_norm.mu"]) / self.store["z_norm.sd"]

    def calibrate_target_norm(self, bundles: list, max_samples: int = 256) -> None:
        """Fit the target standardization on (scene, variant) futures."""
        mids, ends = [], []
        for b in bundles:
            for v in range(b.n_variants):
                mids.append(b.fut_mid_patches[v])
                ends.append(b.fut_end_patches[v])
                if len(mids) >= max_samples:
                    break
            if len(mids) >= max_samples:
                break
        half = self.cfg.latent_channels // 2
        mid = self.encode_history(np.stack(mids).astype(self.store.dtype),
                                  frozen=True).data
        end = self.encode_history(np.stack(ends).astype(self.store.dtype),
                                  frozen=True).data
        z0 = np.concatenate([mid[:, :, :half], end[:, :, :half]], axis=2)
        self.store["z_norm.mu"][...] = z0.mean(axis=0)
        self.store["z_norm.sd"][...] = np.maximum(z0.std(axis=0), 0.05)

    def retrieve_anchor_sets(self, ys: np.ndarray) -> np.ndarray:
        """Top-K anchor indices per query (B, F, 2) -> (B, K)."""
        d = np.linalg.norm(self._anchor_xy[None] - ys[:, None], axis=3).mean(axis=2)
        order = np.argsort(d, axis=1, kind="stable")
        return order[:, :self.cfg.topk_condition]

    def encode_motion_xy(self, ys: np.ndarray, anchor_idx: np.ndarray,
                         frozen: bool = False) -> Tensor:
        """Motion rows for (B, F, 2) trajectories with (B, K) anchor sets."""
        B, K = anchor_idx.shape
        flat_anchor = self._anchor_flat[anchor_idx]               # (B, K, 2F)
        residual = ys.reshape(B, 1, -1) - flat_anchor
        a = self.anchor_enc(Tensor(np.asarray(flat_anchor, dtype=self.store.dtype)),
                            frozen)
        o = self.offset_enc(Tensor(np.asarray(residual, dtype=self.store.dtype)),
                            frozen)
        return a + o

    def encode_motion(self, traj, K: int | None = None, frozen: bool = False) -> Tensor:
        """Single ego-frame Trajectory -> (K, C) motion embedding rows."""
        K = K if K is not None else self.cfg.topk_condition
        if not 1 <= K <= self.vocab.N:
            raise KOutOfRange(f"K={K} outside [1, {self.vocab.N}]")
        ys = traj.xy[None]
        d = np.linalg.norm(self._anchor_xy[None] - ys[:, None], axis=3).mean(axis=2)
        idx = np.argsort(d, axis=1, kind="stable")[:, :K]
        return self.encode_motion_xy(ys, idx, frozen)[0]

    # -- denoiser -----------------------------------------------------------

    def denoise(self, z_t: Tensor, f: Tensor, t: np.ndarray, c: Tensor,
                frozen: bool = False) -> Tensor:
        """Predict the injected noise; all tensors in latent token form.

        Timestep and pooled motion embeddings are added to every latent
        token (a single extra context token is too weak a channel for a
        one-head model to amplify); the history latent is cross-attended
        as spatial context.
        """
        instrumentation.bump("denoiser")
        get = self.store.const if frozen else self.store.tensor
        te = self.t_embed(np.asarray(t, dtype=int), frozen)
        if te.ndim == 2:
            te = te.reshape(te.shape[0], 1, te.shape[1])
        cp = self.c_proj(c, frozen).mean(axis=-2, keepdims=True)
        if cp.ndim == 2:
            cp = cp.reshape(1, *cp.shape)
        zt = self.z_proj(z_t, frozen) + get("den.z_pos") + te + cp
        ft = self.f_proj(f, frozen) + get("den.f_pos")
        h = self.block1(zt, concat([zt, ft], axis=1), frozen=frozen)
        h = self.block2(h, concat([h, ft], axis=1), frozen=frozen)
        return self.head(h, frozen)
