"""Preference-pair mining over the planner's candidate pool."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import TooFewCandidates


@dataclass(frozen=True)
class PreferencePair:
    pos_index: int
    neg_index: int
    pos_oracle: float
    neg_oracle: float

    def __post_init__(self):
        if not self.pos_oracle > self.neg_oracle:
            raise ValueError("preference pairs require pos_oracle > neg_oracle")


def build_preference_pairs(oracle_scores, seed: int,
                           n_hard: int = 3, n_random: int = 3
                           ) -> tuple[list[PreferencePair], list[int]]:
    """Select {planner top-1, hard negatives, random fillers}; pair them all.

    `oracle_scores` follows the planner's candidate order (index 0 is the
    top-scored plan). Hard negatives are the lowest-oracle candidates;
    the random picks are seeded. Every ordered pair with strictly
    different oracle scores is emitted, oriented so pos beats neg; exact
    ties are dropped. Returns (pairs, selected candidate indices).
    """
    scores = np.asarray(oracle_scores, dtype=float)
    n = len(scores)
    if n < 1 + n_hard + n_random:
        raise TooFewCandidates(f"need >= {1 + n_hard + n_random} candidates, got {n}")
    selected = [0]
    rest = [i for i in range(n) if i != 0]
    hard = sorted(rest, key=lambda i: (scores[i], i))[:n_hard]
    selected += hard
    pool = [i for i in rest if i not in hard]
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    pick = rng.choice(len(pool), size=min(n_random, len(pool)), replace=False)
    selected += [pool[i] for i in sorted(pick)]

    pairs = []
    for ai in range(len(selected)):
        for bi in range(ai + 1, len(selected)):
            a, b = selected[ai], selected[bi]
            if scores[a] == scores[b]:
                continue
            if scores[a] > scores[b]:
                pairs.append(PreferencePair(a, b, float(scores[a]), float(scores[b])))
            else:
                pairs.append(PreferencePair(b, a, float(scores[b]), float(scores[a])))
    return pairs, selected
