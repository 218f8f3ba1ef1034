import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deskdrive.errors import KOutOfRange, LengthMismatch, TooFewTrajectories
from deskdrive.vocab import (denormalize_from_ego_frame, kmeans_cluster,
                             nearest_anchors, normalize_to_ego_frame,
                             save_vocabulary, load_vocabulary, traj_distance)
from deskdrive.worldsim.types import EgoState, Trajectory


def _traj(xy, dt=0.5):
    xy = np.asarray(xy, dtype=float)
    return Trajectory(np.column_stack([xy, np.zeros(len(xy))]), dt)


def _ego(pos=(0.0, 0.0), heading=0.0):
    return EgoState(position=pos, heading=heading, speed=0.0, accel=0.0,
                    command="straight")


def _random_trajs(rng, count, F=8):
    out = []
    for _ in range(count):
        steps = rng.normal(1.5, 0.5, size=(F - 1, 2))
        xy = np.vstack([[0.0, 0.0], np.cumsum(steps, axis=0)])
        out.append(_traj(xy))
    return out


# -- normalization ------------------------------------------------------------


def test_normalize_identity():
    t = _traj([[0, 0], [1, 0], [2, 0]])
    out = normalize_to_ego_frame(t, _ego())
    np.testing.assert_array_equal(out.poses, t.poses)


def test_normalize_rotation_hand_case():
    t = _traj([[0, 0], [0, 5]])
    out = normalize_to_ego_frame(t, _ego(heading=np.pi / 2))
    np.testing.assert_allclose(out.xy[1], [5.0, 0.0], atol=1e-9)


def test_normalize_roundtrip():
    rng = np.random.default_rng(0)
    ego = _ego(pos=(3.2, -1.7), heading=0.83)
    for t in _random_trajs(rng, 10):
        back = denormalize_from_ego_frame(normalize_to_ego_frame(t, ego), ego)
        np.testing.assert_allclose(back.poses, t.poses, atol=1e-9)


# -- distance -----------------------------------------------------------------


def test_distance_identity_zero():
    t = _traj([[0, 0], [1, 1], [2, 2]])
    assert traj_distance(t, t) == 0.0


def test_distance_translation_345():
    a = _traj([[0, 0], [1, 0], [2, 0]])
    b = _traj(a.xy + np.array([3.0, 4.0]))
    assert traj_distance(a, b) == pytest.approx(5.0, abs=1e-12)


def test_distance_symmetry_random_pairs():
    rng = np.random.default_rng(1)
    trajs = _random_trajs(rng, 12)
    for a, b in zip(trajs[:6], trajs[6:]):
        assert traj_distance(a, b) == pytest.approx(traj_distance(b, a), abs=1e-15)


def test_distance_ignores_heading():
    rng = np.random.default_rng(2)
    a, b = _random_trajs(rng, 2)
    d0 = traj_distance(a, b)
    poses = b.poses.copy()
    poses[:, 2] = rng.uniform(-np.pi, np.pi, size=len(poses))
    assert traj_distance(a, Trajectory(poses, b.dt)) == d0


def test_distance_length_mismatch():
    with pytest.raises(LengthMismatch):
        traj_distance(_traj([[0, 0], [1, 0]]), _traj([[0, 0], [1, 0], [2, 0]]))


@given(st.integers(0, 10_000))
@settings(deadline=None, max_examples=30)
def test_distance_nonnegative(seed):
    rng = np.random.default_rng(seed)
    a, b = _random_trajs(rng, 2)
    assert traj_distance(a, b) >= 0.0


# -- k-means ------------------------------------------------------------------


def test_kmeans_single_cluster_is_mean():
    rng = np.random.default_rng(3)
    trajs = _random_trajs(rng, 20)
    vocab = kmeans_cluster(trajs, N=1, seed=0)
    mean_xy = np.mean([t.xy for t in trajs], axis=0)
    np.testing.assert_allclose(vocab.anchors[0].xy, mean_xy, atol=1e-9)


def test_kmeans_n_equals_inputs_zero_inertia():
    rng = np.random.default_rng(4)
    trajs = _random_trajs(rng, 8)
    vocab = kmeans_cluster(trajs, N=8, seed=0)
    assert vocab.inertia == pytest.approx(0.0, abs=1e-18)


def test_kmeans_determinism():
    rng = np.random.default_rng(5)
    trajs = _random_trajs(rng, 40)
    v1 = kmeans_cluster(trajs, N=6, seed=9)
    v2 = kmeans_cluster(trajs, N=6, seed=9)
    np.testing.assert_array_equal(v1.anchor_poses(), v2.anchor_poses())
    assert v1.inertia == v2.inertia


def test_kmeans_inertia_non_increasing():
    # instrumented re-run of Lloyd's iterations
    rng = np.random.default_rng(6)
    trajs = _random_trajs(rng, 60)
    flat = np.stack([t.xy.ravel() for t in trajs])
    from deskdrive.vocab import _kmeans_pp_init
    gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(3)))
    centers = _kmeans_pp_init(flat, 5, gen)
    inertias = []
    assign = None
    for _ in range(30):
        d2 = ((flat[:, None, :] - centers[None]) ** 2).sum(axis=2)
        assign = np.argmin(d2, axis=1)
        inertias.append(d2[np.arange(len(flat)), assign].sum())
        for k in range(5):
            members = flat[assign == k]
            if len(members):
                centers[k] = members.mean(axis=0)
    diffs = np.diff(inertias)
    assert np.all(diffs <= 1e-9)


def test_kmeans_too_few_inputs():
    rng = np.random.default_rng(7)
    with pytest.raises(TooFewTrajectories):
        kmeans_cluster(_random_trajs(rng, 3), N=5, seed=0)


def test_anchors_start_at_origin_with_zero_heading():
    rng = np.random.default_rng(8)
    vocab = kmeans_cluster(_random_trajs(rng, 50), N=10, seed=1)
    for a in vocab.anchors:
        np.testing.assert_allclose(a.xy[0], [0.0, 0.0], atol=1e-12)
        assert a.headings[0] == 0.0
    # pairwise distinct
    for i in range(vocab.N):
        for j in range(i + 1, vocab.N):
            assert traj_distance(vocab.anchors[i], vocab.anchors[j]) > 0.0


# -- retrieval ----------------------------------------------------------------


def test_nearest_exact_match():
    rng = np.random.default_rng(9)
    vocab = kmeans_cluster(_random_trajs(rng, 50), N=20, seed=2)
    idx, dist = nearest_anchors(vocab, vocab.anchors[17], K=1)
    assert idx == [17]
    assert dist == [0.0]


def test_nearest_full_sort():
    rng = np.random.default_rng(10)
    vocab = kmeans_cluster(_random_trajs(rng, 40), N=12, seed=3)
    query = _random_trajs(rng, 1)[0]
    idx, dist = nearest_anchors(vocab, query, K=vocab.N)
    assert sorted(idx) == list(range(vocab.N))
    assert np.all(np.diff(dist) >= 0.0)


def test_nearest_matches_bruteforce_100_queries():
    rng = np.random.default_rng(11)
    vocab = kmeans_cluster(_random_trajs(rng, 60), N=16, seed=4)
    for query in _random_trajs(rng, 100):
        d = np.array([traj_distance(a, query) for a in vocab.anchors])
        brute = sorted(range(len(d)), key=lambda i: (d[i], i))[:5]
        idx, dist = nearest_anchors(vocab, query, K=5)
        assert idx == brute
        np.testing.assert_allclose(dist, d[brute], atol=1e-12)


def test_nearest_k1_is_argmin():
    rng = np.random.default_rng(12)
    vocab = kmeans_cluster(_random_trajs(rng, 30), N=10, seed=5)
    for query in _random_trajs(rng, 20):
        d = [traj_distance(a, query) for a in vocab.anchors]
        idx, _ = nearest_anchors(vocab, query, K=1)
        assert idx[0] == int(np.argmin(d))


def test_nearest_k_out_of_range():
    rng = np.random.default_rng(13)
    vocab = kmeans_cluster(_random_trajs(rng, 20), N=5, seed=6)
    with pytest.raises(KOutOfRange):
        nearest_anchors(vocab, vocab.anchors[0], K=6)
    with pytest.raises(KOutOfRange):
        nearest_anchors(vocab, vocab.anchors[0], K=0)


def test_vocabulary_file_roundtrip(tmp_path):
    rng = np.random.default_rng(14)
    vocab = kmeans_cluster(_random_trajs(rng, 30), N=8, seed=7)
    save_vocabulary(vocab, tmp_path / "vocab.json")
    loaded = load_vocabulary(tmp_path / "vocab.json")
    np.testing.assert_array_equal(loaded.anchor_poses(), vocab.anchor_poses())
    assert loaded.inertia == vocab.inertia
    assert loaded.clustering_seed == vocab.clustering_seed
