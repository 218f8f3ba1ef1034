"""Central finite-difference verification of reverse-mode gradients."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .params import ParamStore
from .tensor import Tensor


def grad_check(fn: Callable[[], Tensor], store: ParamStore,
               rng: np.random.Generator, max_coords: int = 1000,
               h: float = 1e-5, extra_leaves: dict | None = None) -> float:
    """Max relative error between analytic and numeric gradients.

    `fn` rebuilds a scalar-loss graph from the live parameter arrays in
    `store` (and any `extra_leaves` tensors). Up to `max_coords`
    coordinates are sampled across all leaves; each is perturbed by
    +/-h for a central difference. Relative error uses denominator
    max(|analytic|, |numeric|, 1e-8).
    """
    leaves: dict[str, np.ndarray] = {n: store[n] for n in store.names()}
    if extra_leaves:
        for k, t in extra_leaves.items():
            leaves[f"<input>{k}"] = t.data

    store.zero_grad()
    if extra_leaves:
        for t in extra_leaves.values():
            t.grad = None
    loss = fn()
    if loss.data.size != 1:
        raise ValueError("grad_check expects a scalar loss")
    loss.backward()
    analytic: dict[str, np.ndarray] = {}
    for n in store.names():
        g = store._grad_cache.get(n)
        analytic[n] = g.grad if g is not None and g.grad is not None else np.zeros_like(store[n])
    if extra_leaves:
        for k, t in extra_leaves.items():
            analytic[f"<input>{k}"] = t.grad if t.grad is not None else np.zeros_like(t.data)

    coords = [(name, i) for name, arr in leaves.items() for i in range(arr.size)]
    if len(coords) > max_coords:
        pick = rng.choice(len(coords), size=max_coords, replace=False)
        coords = [coords[i] for i in pick]

    max_rel = 0.0
    for name, idx in coords:
        arr = leaves[name]
        orig = arr.flat[idx]
        arr.flat[idx] = orig + h
        lp = float(fn().data)
        arr.flat[idx] = orig - h
        lm = float(fn().data)
        arr.flat[idx] = orig
        numeric = (lp - lm) / (2.0 * h)
        a = float(analytic[name].flat[idx])
        rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
        max_rel = max(max_rel, rel)
    return max_rel


_REGISTRY: dict[str, Callable] = {}


def register_block(name: str):
    """Register a builder returning (loss_fn, store, rng) for the CI suite."""
    def deco(builder):
        _REGISTRY[name] = builder
        return builder
    return deco


def registered_blocks() -> dict[str, Callable]:
    return dict(_REGISTRY)


def _rand_tensor(rng, *shape) -> Tensor:
    return Tensor(rng.normal(0.0, 1.0, size=shape))


@register_block("linear")
def _build_linear():
    from .layers import Linear
    rng = np.random.default_rng(11)
    store = ParamStore()
    lin = Linear(store, "lin", 5, 4, rng)
    x = _rand_tensor(rng, 3, 5)
    return (lambda: lin(x).sum()), store, rng


@register_block("layer_norm")
def _build_layer_norm():
    from .layers import LayerNorm
    rng = np.random.default_rng(12)
    store = ParamStore()
    ln = LayerNorm(store, "ln", 6)
    x = _rand_tensor(rng, 4, 6)
    return (lambda: (ln(x) * _fixed_mix(6)).sum()), store, rng


@register_block("softmax")
def _build_softmax():
    rng = np.random.default_rng(13)
    store = ParamStore()
    store.add("logits", rng.normal(0.0, 0.01, size=(8,)))
    mix = _fixed_mix(8)
    return (lambda: (store.tensor("logits").softmax() * mix).sum()), store, rng


@register_block("sigmoid")
def _build_sigmoid():
    rng = np.random.default_rng(14)
    store = ParamStore()
    store.add("x", rng.normal(0.0, 1.0, size=(10,)))
    mix = _fixed_mix(10)
    return (lambda: (store.tensor("x").sigmoid() * mix).sum()), store, rng


@register_block("softplus")
def _build_softplus():
    rng = np.random.default_rng(15)
    store = ParamStore()
    store.add("x", rng.normal(0.0, 3.0, size=(10,)))
    mix = _fixed_mix(10)
    return (lambda: (store.tensor("x").softplus() * mix).sum()), store, rng


@register_block("mlp")
def _build_mlp():
    from .layers import Mlp
    rng = np.random.default_rng(16)
    store = ParamStore()
    mlp = Mlp(store, "mlp", 4, 7, 3, rng)
    x = _rand_tensor(rng, 5, 4)
    return (lambda: (mlp(x) * _fixed_mix(3)).sum()), store, rng


@register_block("attention")
def _build_attention():
    from .layers import AttentionBlock
    rng = np.random.default_rng(17)
    store = ParamStore()
    blk = AttentionBlock(store, "attn", 6, rng)
    q = _rand_tensor(rng, 3, 6)
    kv = _rand_tensor(rng, 5, 6)
    return (lambda: (blk(q, kv) * _fixed_mix(6)).sum()), store, rng


@register_block("embedding")
def _build_embedding():
    from .layers import EmbeddingTable
    rng = np.random.default_rng(18)
    store = ParamStore()
    emb = EmbeddingTable(store, "emb", 9, 4, rng)
    idx = np.array([1, 4, 4, 7])
    mix = _fixed_mix(4)
    return (lambda: (emb(idx) * mix).sum()), store, rng


def _fixed_mix(dim: int) -> Tensor:
    # deterministic non-uniform output weighting so reductions do not
    # hide sign errors that cancel under a plain sum
    return Tensor(np.linspace(0.5, 1.5, dim))
