"""Motion-sensitivity analysis: conditioning distance vs latent similarity."""

from __future__ import annotations

import numpy as np
from scipy import stats

from ..nn.tensor import no_nan_checks
from .model import WorldModel
from .sampling import derived_seed, sample_future_latent


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    a = a.ravel()
    b = b.ravel()
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 1.0 if na == nb else 0.0
    return float(a @ b / (na * nb))


def motion_sensitivity(wm: WorldModel, bundles: list, seed: int,
                       n_probes: int = 12, n_bins: int = 8) -> dict:
    """Sample latents under expert vs anchor conditioning, scene by scene.

    Within a scene every condition shares one noise seed, so latent
    differences are attributable to the conditioning alone. Returns raw
    (distance, cosine similarity) points, a binned curve, and the
    Spearman rank correlation over the pooled points.
    """
    anchor_xy = wm.vocab.anchor_xy()
    N = anchor_xy.shape[0]
    probe_ranks = np.unique(np.linspace(0, N - 1, n_probes).round().astype(int))
    distances, sims = [], []

    with no_nan_checks():
        for b in bundles:
            f = wm.encode_history(b.hist_patches[None].astype(wm.store.dtype),
                                  frozen=True).data
            d_all = np.linalg.norm(anchor_xy - b.expert_xy[None], axis=2).mean(axis=1)
            order = np.argsort(d_all, kind="stable")
            probes = order[probe_ranks]
            ys = np.concatenate([b.expert_xy[None], anchor_xy[probes]], axis=0)
            idx = wm.retrieve_anchor_sets(ys)
            c = wm.encode_motion_xy(ys, idx, frozen=True).data
            f_rep = np.repeat(f, len(ys), axis=0)
            scene_seed = derived_seed(seed, b.seed)
            z = sample_future_latent(wm, f_rep, c, wm.cfg.sample_steps,
                                     scene_seed)
            for j, a_idx in enumerate(probes):
                distances.append(float(d_all[a_idx]))
                sims.append(_cosine(z[0], z[j + 1]))

    distances = np.asarray(distances)
    sims = np.asarray(sims)
    edges = np.quantile(distances, np.linspace(0.0, 1.0, n_bins + 1))
    edges[-1] += 1e-9
    which = np.clip(np.searchsorted(edges, distances, side="right") - 1, 0,
                    n_bins - 1)
    curve = []
    for k in range(n_bins):
        mask = which == k
        if mask.any():
            curve.append((float(distances[mask].mean()), float(sims[mask].mean())))
    rho = float(stats.spearmanr(distances, sims).statistic) if len(distances) > 2 else 0.0
    return {"distances": distances, "similarities": sims,
            "curve": curve, "spearman": rho}
