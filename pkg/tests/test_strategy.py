import math

import numpy as np
import pytest

from pftrl.strategy import (
    AnchorStore,
    AverageAccumulator,
    BehaviorProfile,
    accumulate_average,
    own_reach,
    random_profile,
    uniform_profile,
)


def test_uniform_profile(kuhn):
    p = uniform_profile(kuhn)
    assert p.simplex_violations() == []
    assert np.all(p.probs == 0.5)


def test_indexing_by_player_and_local_id(toy):
    p = random_profile(toy, np.random.default_rng(0))
    first_p1 = toy.info_base[1]
    np.testing.assert_array_equal(p[1, 0], p.vector(first_p1))


def test_csv_roundtrip_is_lossless(kuhn, tmp_path):
    p = random_profile(kuhn, np.random.default_rng(1))
    path = tmp_path / "p.csv"
    text = p.to_csv(path)
    assert text.splitlines()[0] == "player,infoset,action,prob"
    assert BehaviorProfile.from_csv(kuhn, path) == p
    assert BehaviorProfile.from_csv(kuhn, text) == p


def test_simplex_violation_reported(kuhn):
    p = uniform_profile(kuhn)
    p.probs[0] = 0.7
    assert p.simplex_violations() == [0]
    with pytest.raises(ValueError):
        p.check()


def test_random_profile_floor(kuhn):
    p = random_profile(kuhn, np.random.default_rng(2), floor=0.1)
    assert p.probs.min() >= 0.1 - 1e-15
    p.check(1e-12)


def test_anchor_updates_on_interval(kuhn):
    store = AnchorStore(uniform_profile(kuhn), update_interval=3)
    new = np.array([0.9, 0.1])
    assert not store.record_visit_and_maybe_anchor(0, new)
    assert not store.record_visit_and_maybe_anchor(0, new)
    assert store.record_visit_and_maybe_anchor(0, new)
    np.testing.assert_array_equal(store.sigma.vector(0), new)
    assert store.visit_counts[0] == 0


def test_anchor_interval_inf_never_updates(kuhn):
    store = AnchorStore(uniform_profile(kuhn), math.inf)
    for _ in range(10):
        assert not store.record_visit_and_maybe_anchor(0, np.array([1.0, 0.0]))
    assert store.interval_code == -1
    np.testing.assert_array_equal(store.sigma.vector(0), [0.5, 0.5])


def test_anchor_interval_validated(kuhn):
    for bad in (0, 2.5, -1):
        with pytest.raises(ValueError):
            AnchorStore(uniform_profile(kuhn), bad)


def test_own_reach_uniform_kuhn(kuhn):
    reach = own_reach(kuhn, uniform_profile(kuhn))
    for x in range(kuhn.num_infosets):
        # the second player-0 decision (after pass-bet) follows one own action
        expected = 0.5 if kuhn.info_seq_len[x] == 1 else 1.0
        assert reach[x] == expected


def test_average_of_constant_profile_is_that_profile(kuhn):
    p = random_profile(kuhn, np.random.default_rng(3))
    acc = AverageAccumulator(kuhn)
    for _ in range(5):
        accumulate_average(acc, p, kuhn)
    np.testing.assert_allclose(acc.average().probs, p.probs, rtol=1e-14)


def test_average_is_reach_weighted(toy):
    # Two profiles that differ on player 0's first choice: the later infoset's
    # average must weight each iterate by how often player 0 reached it.
    acc = AverageAccumulator(toy)
    a, b = uniform_profile(toy), uniform_profile(toy)
    x_root = next(x for x in toy.infosets_of(0) if toy.info_parent[x] < 0)
    x_later = next(x for x in toy.infosets_of(0) if toy.info_parent[x] == x_root)
    a.set(x_root, [1.0, 0.0])  # always check: later infoset reached
    a.set(x_later, [1.0, 0.0])
    b.set(x_root, [0.0, 1.0])  # always bet: later infoset unreachable
    b.set(x_later, [0.0, 1.0])
    acc.accumulate(a)
    acc.accumulate(b)
    np.testing.assert_allclose(acc.average().vector(x_later), [1.0, 0.0])
    np.testing.assert_allclose(acc.average().vector(x_root), [0.5, 0.5])


def test_unreached_infosets_average_to_uniform(kuhn):
    assert np.all(AverageAccumulator(kuhn).average().probs == 0.5)
