"""Anchor-query planner over frozen world-model representations.

All N anchor embeddings act as queries that cross-attend to the frozen
history latent plus an ego-status token; three heads score every anchor
(imitation logit, five simulation sub-scores) and regress per-waypoint
offsets. Candidates are the top-K anchors by combined planning score,
refined by their offsets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import KOutOfRange, ShapeMismatch
from ..geometry import headings_from_xy
from ..nn import AttentionBlock, Linear, Mlp, ParamStore, Tensor, concat
from ..nn.layers import positional_grid
from ..rewards import PlanScoreWeights, DEFAULT_WEIGHTS, combined_plan_scores_batch
from ..worldmodel.model import WorldModel
from ..worldsim.types import Trajectory


@dataclass
class Candidate:
    anchor_index: int
    trajectory: Trajectory        # ego frame, refined
    combined_score: float


@dataclass
class PlannerOutput:
    im_scores: np.ndarray         # (N,) pre-softmax logits
    sim_scores: np.ndarray        # (N, 5) post-sigmoid
    offsets: np.ndarray           # (N, F, 2) meters
    candidates: list[Candidate]   # refined top-K, best first


class Planner:
    """Trainable planner head stack; encoders stay frozen in `wm`."""

    def __init__(self, wm: WorldModel, init_seed: int = 0,
                 store: ParamStore | None = None,
                 weights: PlanScoreWeights = DEFAULT_WEIGHTS):
        self.wm = wm
        self.weights = weights
        self.store = store if store is not None else ParamStore()
        cfg = wm.cfg
        C = cfg.channels
        rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence((init_seed, 202))))
        self.f_kv = Linear(self.store, "plan.f_kv", cfg.latent_channels, C, rng)
        positional_grid(self.store, "plan.kv_pos", cfg.n_latent_tokens, C, rng)
        self.ego_mlp = Mlp(self.store, "plan.ego", 5, 32, C, rng)
        self.block1 = AttentionBlock(self.store, "plan.b1", C, rng)
        self.block2 = AttentionBlock(self.store, "plan.b2", C, rng)
        self.im_head = Linear(self.store, "plan.im", C, 1, rng)
        self.sim_head = Linear(self.store, "plan.sim", C, 5, rng)
        self.offset_head = Linear(self.store, "plan.offset",
                                  C, 2 * cfg.horizon_steps, rng, zero_init=True)
        self._anchor_queries: np.ndarray | None = None

    # -- frozen pieces ------------------------------------------------------

    def anchor_queries(self) -> np.ndarray:
        """E_a of every anchor under the frozen motion encoder, cached."""
        if self._anchor_queries is None:
            flat = Tensor(self.wm._anchor_flat.astype(self.wm.store.dtype))
            self._anchor_queries = self.wm.anchor_enc(flat, frozen=True).data
        return self._anchor_queries

    def encode_scene(self, hist_patches: np.ndarray) -> np.ndarray:
        """Frozen history latent tokens for one or more scenes."""
        return self.wm.encode_history(
            np.asarray(hist_patches, dtype=self.wm.store.dtype), frozen=True).data

    # -- trainable forward ----------------------------------------------------

    def plan_queries(self, f_tokens: np.ndarray, ego_feats: np.ndarray,
                     frozen: bool = False) -> Tensor:
        """(B, n_lat, C_lat) latents + (B, 5) ego status -> (B, N, C)."""
        f_tokens = np.asarray(f_tokens, dtype=self.store.dtype)
        ego_feats = np.asarray(ego_feats, dtype=self.store.dtype)
        if f_tokens.ndim == 2:
            f_tokens = f_tokens[None]
        if ego_feats.ndim == 1:
            ego_feats = ego_feats[None]
        if ego_feats.shape[-1] != 5:
            raise ShapeMismatch(f"ego_feats last dim must be 5, got {ego_feats.shape}")
        get = self.store.const if frozen else self.store.tensor
        kv_f = self.f_kv(Tensor(f_tokens), frozen) + get("plan.kv_pos")
        e = self.ego_mlp(Tensor(ego_feats), frozen)
        e = e.reshape(e.shape[0], 1, e.shape[1])
        kv = concat([kv_f, e], axis=1)
        q = Tensor(self.anchor_queries())
        q = self.block1(q, kv, frozen=frozen)
        return self.block2(q, kv, frozen=frozen)

    def score_heads(self, q_p: Tensor, frozen: bool = False):
        """Per-anchor heads: imitation logits, sim logits, offsets."""
        im = self.im_head(q_p, frozen)
        im = im.reshape(*im.shape[:-1])
        sim_logits = self.sim_head(q_p, frozen)
        offsets = self.offset_head(q_p, frozen)
        F = self.wm.cfg.horizon_steps
        offsets = offsets.reshape(*offsets.shape[:-1], F, 2)
        return im, sim_logits, offsets

    # -- inference -------------------------------------------------------------

    def forward_arrays(self, f_tokens: np.ndarray, ego_feats: np.ndarray):
        q_p = self.plan_queries(f_tokens, ego_feats, frozen=True)
        im, sim_logits, offsets = self.score_heads(q_p, frozen=True)
        return im.data, _sigmoid(sim_logits.data), offsets.data

    def plan(self, f_tokens: np.ndarray, ego_feats: np.ndarray,
             K: int) -> PlannerOutput:
        """Full single-scene inference: scores, offsets, refined top-K."""
        im, sim, offsets = self.forward_arrays(f_tokens, ego_feats)
        im, sim, offsets = im[0], sim[0], offsets[0]
        candidates = topk_candidates(im, sim, offsets, self.wm.vocab, K,
                                     self.weights)
        return PlannerOutput(im_scores=im, sim_scores=sim, offsets=offsets,
                             candidates=candidates)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                    np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))


def topk_candidates(im_scores: np.ndarray, sim_scores: np.ndarray,
                    offsets: np.ndarray, vocab, K: int,
                    weights: PlanScoreWeights = DEFAULT_WEIGHTS) -> list[Candidate]:
    """Select and refine the K anchors with the highest combined scores.

    Combined score feeds the softmax imitation probability and the five
    predicted sub-scores (progress ratio kept soft) through the weighted
    log-sum. Ties break toward the lower anchor index.
    """
    N = vocab.N
    if not 1 <= K <= N:
        raise KOutOfRange(f"K={K} outside [1, {N}]")
    r_im = np.exp(im_scores - im_scores.max())
    r_im = r_im / r_im.sum()
    scores = combined_plan_scores_batch(r_im, sim_scores, weights)
    order = np.lexsort((np.arange(N), -scores))[:K]
    anchor_poses = vocab.anchor_poses()
    out = []
    for idx in order:
        xy = anchor_poses[idx][:, :2] + offsets[idx]
        headings = headings_from_xy(xy, first=0.0)
        traj = Trajectory(np.column_stack([xy, headings]), vocab.dt)
        out.append(Candidate(anchor_index=int(idx), trajectory=traj,
                             combined_score=float(scores[idx])))
    return out
