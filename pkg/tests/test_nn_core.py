import numpy as np
import pytest

from deskdrive.errors import NonFiniteValue, ShapeMismatch
from deskdrive.nn import (AttentionBlock, LayerNorm, Linear, Mlp, ParamStore,
                          Tensor, adam_step, grad_check, load_checkpoint,
                          registered_blocks, save_checkpoint)


def test_identity_gradient_is_ones():
    x = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
    y = x.sum()
    y.backward()
    np.testing.assert_array_equal(x.grad, np.ones((2, 3)))


def test_linear_gradient_matches_hand_formula():
    # y = x W, loss = sum(y) => dW = sum over batch of outer(x, 1)
    rng = np.random.default_rng(0)
    store = ParamStore()
    lin = Linear(store, "lin", 3, 4, rng)
    x = Tensor(rng.normal(size=(5, 3)))
    store.zero_grad()
    lin(x).sum().backward()
    dW = store._grad_cache["lin.W"].grad
    expected = x.data.T @ np.ones((5, 4))
    np.testing.assert_allclose(dW, expected, atol=1e-12)
    db = store._grad_cache["lin.b"].grad
    np.testing.assert_allclose(db, np.full(4, 5.0), atol=1e-12)


def test_all_registered_blocks_pass_grad_check():
    for name, builder in registered_blocks().items():
        fn, store, rng = builder()
        err = grad_check(fn, store, rng, max_coords=400)
        assert err < 1e-4, f"{name}: {err}"


def test_linear_block_error_below_1e6():
    fn, store, rng = registered_blocks()["linear"]()
    assert grad_check(fn, store, rng) < 1e-6


def test_layer_norm_block_error_below_1e4():
    fn, store, rng = registered_blocks()["layer_norm"]()
    assert grad_check(fn, store, rng) < 1e-4


def test_softmax_near_uniform_error_below_1e5():
    fn, store, rng = registered_blocks()["softmax"]()
    assert grad_check(fn, store, rng) < 1e-5


def test_attention_single_key_weights_are_one():
    rng = np.random.default_rng(1)
    store = ParamStore()
    blk = AttentionBlock(store, "attn", 8, rng)
    q = Tensor(rng.normal(size=(4, 8)))
    kv = Tensor(rng.normal(size=(1, 8)))
    blk(q, kv)
    np.testing.assert_array_equal(blk._last_weights, np.ones((4, 1)))


def test_attention_rows_sum_to_one():
    rng = np.random.default_rng(2)
    store = ParamStore()
    blk = AttentionBlock(store, "attn", 8, rng)
    blk(Tensor(rng.normal(size=(6, 8))), Tensor(rng.normal(size=(9, 8))))
    np.testing.assert_allclose(blk._last_weights.sum(axis=-1), 1.0, atol=1e-9)


def test_attention_kv_permutation_invariance():
    rng = np.random.default_rng(3)
    store = ParamStore()
    blk = AttentionBlock(store, "attn", 8, rng)
    q = Tensor(rng.normal(size=(3, 8)))
    kv = rng.normal(size=(7, 8))
    out1 = blk(q, Tensor(kv)).data
    perm = rng.permutation(7)
    out2 = blk(q, Tensor(kv[perm])).data
    np.testing.assert_allclose(out1, out2, atol=1e-12)


def test_layer_norm_row_statistics():
    rng = np.random.default_rng(4)
    store = ParamStore()
    ln = LayerNorm(store, "ln", 16)
    x = Tensor(rng.normal(2.0, 3.0, size=(5, 16)))
    normed = ln.normalize(x).data
    np.testing.assert_allclose(normed.mean(axis=-1), 0.0, atol=1e-9)
    np.testing.assert_allclose(normed.var(axis=-1), 1.0, atol=1e-6)


def test_adam_first_step_is_sign_scaled():
    rng = np.random.default_rng(5)
    store = ParamStore()
    store.add("p", rng.normal(size=(6,)))
    before = store["p"].copy()
    g = np.array([3.0, -2.0, 10.0, -0.5, 1.0, -7.0])
    adam_step(store, {"p": g}, lr=1e-3)
    update = store["p"] - before
    np.testing.assert_allclose(update, -1e-3 * np.sign(g), rtol=1e-5)


def test_adam_zero_gradient_keeps_params():
    store = ParamStore()
    store.add("p", np.array([1.0, 2.0]))
    adam_step(store, {"p": np.zeros(2)}, lr=1e-2)
    np.testing.assert_array_equal(store["p"], [1.0, 2.0])


def test_adam_determinism():
    def run():
        rng = np.random.default_rng(6)
        store = ParamStore()
        store.add("p", rng.normal(size=(4,)))
        for i in range(10):
            g = np.sin(np.arange(4.0) + i)
            adam_step(store, {"p": g}, lr=1e-2)
        return store["p"].copy()
    np.testing.assert_array_equal(run(), run())


def test_adam_shape_mismatch_raises():
    store = ParamStore()
    store.add("p", np.zeros((2, 2)))
    with pytest.raises(ShapeMismatch):
        adam_step(store, {"p": np.zeros(3)}, lr=1e-3)


def test_nonfinite_values_raise():
    with pytest.raises(NonFiniteValue):
        Tensor(np.array([1.0, np.inf]))
    x = Tensor(np.array([0.0, 1.0]), requires_grad=True)
    with pytest.raises(NonFiniteValue):
        x.log()  # log(0) = -inf trips the check


def test_checkpoint_roundtrip(tmp_path):
    rng = np.random.default_rng(7)
    store = ParamStore()
    store.add("a.W", rng.normal(size=(3, 4)))
    store.add("b", rng.normal(size=(5,)))
    store.step_count = 42
    save_checkpoint(store, tmp_path / "ck")
    loaded = load_checkpoint(tmp_path / "ck")
    assert loaded.step_count == 42
    for name in store.names():
        np.testing.assert_array_equal(loaded[name], store[name])


def test_forward_determinism():
    def run():
        rng = np.random.default_rng(8)
        store = ParamStore()
        mlp = Mlp(store, "m", 4, 8, 2, rng)
        x = Tensor(rng.normal(size=(3, 4)))
        return mlp(x).data.copy()
    np.testing.assert_array_equal(run(), run())


def test_frozen_forward_collects_no_grads():
    rng = np.random.default_rng(9)
    store = ParamStore()
    mlp = Mlp(store, "m", 4, 8, 2, rng)
    x = Tensor(rng.normal(size=(3, 4)))
    store.zero_grad()
    mlp(x, frozen=True).sum().backward()
    assert store.grads() == {}
