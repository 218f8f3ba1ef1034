import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deskdrive.rewards import (DEFAULT_WEIGHTS, RewardBreakdown,
                               combined_plan_score, combined_plan_scores_batch,
                               driving_score, imitation_target, plan_cost,
                               subscores)
from deskdrive.worldsim import generate_scene, expert_policy, rollout
from deskdrive.worldsim.types import Trajectory


def _breakdown(nc=1, dac=1, ttc=1, comf=1, ep=1.0):
    return RewardBreakdown(nc=nc, dac=dac, ttc=ttc, comf=comf, ep=ep)


# -- subscores ---------------------------------------------------------------


def test_smooth_onroad_rollout_scores_all_ones():
    scene = generate_scene(11, "empty")
    traj = expert_policy(scene)
    result = rollout(scene, traj)
    b = subscores(result, scene, expert_progress=result.progress)
    assert (b.nc, b.dac, b.ttc, b.comf) == (1.0, 1.0, 1.0, 1.0)
    assert b.ep == pytest.approx(1.0)


def test_collision_flag_zeroes_nc():
    scene = generate_scene(11, "sparse")
    traj = expert_policy(scene)
    result = rollout(scene, traj)
    result.collided_step = 2
    assert subscores(result, scene, 1.0).nc == 0.0


def test_ep_is_progress_ratio():
    scene = generate_scene(11, "empty")
    traj = expert_policy(scene)
    result = rollout(scene, traj)
    b = subscores(result, scene, expert_progress=2.0 * result.progress)
    assert b.ep == pytest.approx(result.progress / (2.0 * result.progress), abs=1e-9)


def test_heading_jump_fails_comfort():
    # single 90-degree heading jump in one 0.5 s step: yaw rate pi > 1.0
    scene = generate_scene(11, "empty")
    start = np.asarray(scene.ego.position)
    h = scene.ego.heading
    poses = np.tile([start[0], start[1], h], (8, 1))
    poses[4:, 2] = h + np.pi / 2.0
    result = rollout(scene, Trajectory(poses, 0.5))
    b = subscores(result, scene, 1.0)
    assert b.comf == 0.0


def test_stationary_rollout_scores():
    scene = generate_scene(5, "empty")
    start = np.asarray(scene.ego.position)
    poses = np.tile([start[0], start[1], scene.ego.heading], (8, 1))
    result = rollout(scene, Trajectory(poses, 0.5))
    assert result.collided_step is None and result.offroad_step is None
    assert result.progress == 0.0


# -- imitation target --------------------------------------------------------


def test_imitation_target_uniform_for_equal_distances():
    np.testing.assert_allclose(imitation_target([0.0, 0.0, 0.0]),
                               np.full(3, 1.0 / 3.0), atol=1e-15)


def test_imitation_target_hand_softmax():
    out = imitation_target([0.0, np.log(2.0)])
    np.testing.assert_allclose(out, [2.0 / 3.0, 1.0 / 3.0], atol=1e-12)


def test_imitation_target_shift_invariance():
    rng = np.random.default_rng(0)
    d = rng.uniform(0, 10, size=16)
    np.testing.assert_allclose(imitation_target(d), imitation_target(d + 5.0),
                               atol=1e-12)


@given(st.lists(st.floats(0.0, 100.0), min_size=1, max_size=64))
@settings(deadline=None, max_examples=60)
def test_imitation_target_is_simplex(distances):
    p = imitation_target(distances)
    assert np.all(p >= 0.0)
    assert abs(p.sum() - 1.0) <= 1e-12


# -- combined plan score ------------------------------------------------------


def test_combined_score_log12_case():
    s = combined_plan_score(1.0, _breakdown())
    assert s == pytest.approx(np.log(12.0), abs=1e-9)


def test_combined_score_eps_guard_case():
    s = combined_plan_score(1.0, _breakdown(nc=0))
    assert s == pytest.approx(0.5 * np.log(1e-6) + np.log(12.0), abs=1e-9)
    assert s == pytest.approx(-4.4223, abs=1e-3)


def test_driving_score_values():
    assert driving_score(_breakdown()) == pytest.approx(1.0)
    assert driving_score(_breakdown(nc=0)) == 0.0
    assert driving_score(_breakdown(ep=0.0)) == pytest.approx(7.0 / 12.0, abs=1e-12)


def test_gate_property():
    rng = np.random.default_rng(1)
    for _ in range(50):
        vals = rng.uniform(0, 1, size=3)
        assert driving_score(_breakdown(nc=0, ttc=vals[0], comf=vals[1], ep=vals[2])) == 0.0
        assert driving_score(_breakdown(dac=0, ttc=vals[0], comf=vals[1], ep=vals[2])) == 0.0


def _random_candidates(rng, n):
    r_im = rng.uniform(1e-4, 1.0, size=n)
    flags = rng.integers(0, 2, size=(n, 2)).astype(float)
    soft = rng.uniform(0, 1, size=(n, 3))
    return [(float(r_im[i]),
             _breakdown(nc=flags[i, 0], dac=flags[i, 1], ttc=soft[i, 0],
                        comf=soft[i, 1], ep=soft[i, 2])) for i in range(n)]


def test_argmax_score_equals_argmin_cost_1000_sets():
    rng = np.random.default_rng(2)
    checked = 0
    for _ in range(1000):
        cands = _random_candidates(rng, 8)
        scores = [combined_plan_score(r, b) for r, b in cands]
        costs = [plan_cost(r, b) for r, b in cands]
        if len({round(s, 12) for s in scores}) < len(scores):
            continue  # exact ties excluded
        assert int(np.argmax(scores)) == int(np.argmin(costs))
        checked += 1
    assert checked > 900


def test_monotonicity_in_each_subreward():
    rng = np.random.default_rng(3)
    fields = ["nc", "dac", "ttc", "comf", "ep"]
    for _ in range(100):
        vals = dict(zip(fields, rng.uniform(0.05, 0.95, size=5)))
        r_im = float(rng.uniform(0.05, 0.95))
        base_s = combined_plan_score(r_im, RewardBreakdown(**vals))
        base_d = driving_score(RewardBreakdown(**vals))
        for f in fields:
            bumped = dict(vals)
            bumped[f] = min(1.0, vals[f] + 0.04)
            assert combined_plan_score(r_im, RewardBreakdown(**bumped)) >= base_s
            assert driving_score(RewardBreakdown(**bumped)) >= base_d
        assert combined_plan_score(min(1.0, r_im + 0.04), RewardBreakdown(**vals)) >= base_s


def test_batch_scores_match_scalar_path():
    rng = np.random.default_rng(4)
    cands = _random_candidates(rng, 32)
    r_im = np.array([c[0] for c in cands])
    mat = np.stack([c[1].as_array() for c in cands])
    batch = combined_plan_scores_batch(r_im, mat)
    single = np.array([combined_plan_score(r, b) for r, b in cands])
    np.testing.assert_allclose(batch, single, atol=1e-12)


def test_breakdown_range_validation():
    with pytest.raises(ValueError):
        RewardBreakdown(nc=1.0, dac=1.0, ttc=1.0, comf=1.0, ep=1.5)
