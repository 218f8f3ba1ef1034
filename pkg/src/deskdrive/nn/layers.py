"""Trainable building blocks over ParamStore-backed tensors.

Each layer registers its parameters under a dotted name prefix at
construction and rebuilds its piece of the graph at every forward call.
`frozen=True` forwards route through stop-gradient views of the same
arrays, which is how encoder inheritance and stop-gradient targets are
realized everywhere in the artifact.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch
from .params import ParamStore
from .tensor import Tensor, concat


def _uniform_init(rng: np.random.Generator, d_in: int, d_out: int) -> np.ndarray:
    # scaled-uniform (Glorot-style) keeps pre-activations O(1) at any width
    a = np.sqrt(6.0 / (d_in + d_out))
    return rng.uniform(-a, a, size=(d_in, d_out))


class Linear:
    def __init__(self, store: ParamStore, name: str, d_in: int, d_out: int,
                 rng: np.random.Generator, zero_init: bool = False,
                 bias: bool = True):
        self.store, self.name = store, name
        self.d_in, self.d_out = d_in, d_out
        self.bias = bias
        w = np.zeros((d_in, d_out)) if zero_init else _uniform_init(rng, d_in, d_out)
        store.add(f"{name}.W", w)
        if bias:
            store.add(f"{name}.b", np.zeros(d_out))

    def __call__(self, x: Tensor, frozen: bool = False) -> Tensor:
        if x.shape[-1] != self.d_in:
            raise ShapeMismatch(f"{self.name}: input {x.shape} expects last dim {self.d_in}")
        get = self.store.const if frozen else self.store.tensor
        out = x @ get(f"{self.name}.W")
        if self.bias:
            out = out + get(f"{self.name}.b")
        return out


class LayerNorm:
    """Normalization over the last axis with learned affine."""

    def __init__(self, store: ParamStore, name: str, dim: int, eps: float = 1e-6):
        self.store, self.name, self.dim, self.eps = store, name, dim, eps
        store.add(f"{name}.g", np.ones(dim))
        store.add(f"{name}.b", np.zeros(dim))

    def normalize(self, x: Tensor) -> Tensor:
        mu = x.mean(axis=-1, keepdims=True)
        centered = x - mu
        var = (centered * centered).mean(axis=-1, keepdims=True)
        return centered * (var + self.eps).power(-0.5)

    def __call__(self, x: Tensor, frozen: bool = False) -> Tensor:
        get = self.store.const if frozen else self.store.tensor
        return self.normalize(x) * get(f"{self.name}.g") + get(f"{self.name}.b")


class Mlp:
    """Two-layer tanh MLP; optional zero-initialized output layer."""

    def __init__(self, store: ParamStore, name: str, d_in: int, d_hidden: int,
                 d_out: int, rng: np.random.Generator, zero_out: bool = False):
        self.fc1 = Linear(store, f"{name}.fc1", d_in, d_hidden, rng)
        self.fc2 = Linear(store, f"{name}.fc2", d_hidden, d_out, rng, zero_init=zero_out)

    def __call__(self, x: Tensor, frozen: bool = False) -> Tensor:
        return self.fc2(self.fc1(x, frozen).tanh(), frozen)


class AttentionBlock:
    """Single-head scaled dot-product cross-attention decoder block.

    Learned Q/K/V/output projections, then post-norm residual wiring:
    x = LN(q_in + proj(attn)), y = LN(x + FFN(x)). Queries interact with
    keys/values only, so per-query-row outputs are independent of the
    other query rows.
    """

    def __init__(self, store: ParamStore, name: str, dim: int,
                 rng: np.random.Generator, ffn_hidden: int | None = None):
        self.dim = dim
        self.wq = Linear(store, f"{name}.wq", dim, dim, rng)
        # a key bias shifts every score in a query row equally, which the
        # row softmax cancels; the parameter would be exactly gradient-free
        self.wk = Linear(store, f"{name}.wk", dim, dim, rng, bias=False)
        self.wv = Linear(store, f"{name}.wv", dim, dim, rng)
        self.wo = Linear(store, f"{name}.wo", dim, dim, rng)
        self.ln1 = LayerNorm(store, f"{name}.ln1", dim)
        self.ln2 = LayerNorm(store, f"{name}.ln2", dim)
        self.ffn = Mlp(store, f"{name}.ffn", dim, ffn_hidden or 2 * dim, dim, rng)
        self._last_weights: np.ndarray | None = None

    def __call__(self, q_in: Tensor, k_in: Tensor, v_in: Tensor | None = None,
                 frozen: bool = False) -> Tensor:
        if v_in is None:
            v_in = k_in
        if q_in.shape[-1] != self.dim or k_in.shape[-1] != self.dim:
            raise ShapeMismatch(f"attention expects channel dim {self.dim}, "
                                f"got {q_in.shape} / {k_in.shape}")
        q = self.wq(q_in, frozen)
        k = self.wk(k_in, frozen)
        v = self.wv(v_in, frozen)
        scores = (q @ k.swapaxes(-1, -2)) * (1.0 / np.sqrt(self.dim))
        weights = scores.softmax(axis=-1)
        self._last_weights = weights.data
        pooled = weights @ v
        x = self.ln1(q_in + self.wo(pooled, frozen), frozen)
        return self.ln2(x + self.ffn(x, frozen), frozen)


class EmbeddingTable:
    """Row lookup table (used for diffusion timestep embeddings)."""

    def __init__(self, store: ParamStore, name: str, rows: int, dim: int,
                 rng: np.random.Generator):
        self.store, self.name = store, name
        store.add(f"{name}.table", rng.normal(0.0, 0.5, size=(rows, dim)))

    def __call__(self, indices, frozen: bool = False) -> Tensor:
        from .tensor import gather_rows
        get = self.store.const if frozen else self.store.tensor
        return gather_rows(get(f"{self.name}.table"), indices)


def positional_grid(store: ParamStore, name: str, rows: int, dim: int,
                    rng: np.random.Generator) -> None:
    store.add(name, rng.normal(0.0, 0.02, size=(rows, dim)))
