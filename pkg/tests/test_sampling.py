import numpy as np
import pytest

from pftrl import games
from pftrl.game_core import Decision, GameTree, Terminal
from pftrl.sampling import (
    SamplingScheme,
    Step,
    Trajectory,
    UniformStream,
    estimate_external,
    estimate_outcome,
    trajectory_probability,
)
from pftrl.strategy import random_profile, uniform_profile
from pftrl.values_exact import perturbed_counterfactual_values


def test_scheme_validation():
    assert SamplingScheme.outcome(0.5).code == 1
    assert SamplingScheme.external().tag == "external"
    with pytest.raises(ValueError):
        SamplingScheme.outcome(1.5)
    with pytest.raises(ValueError):
        SamplingScheme("bandit")


def test_trajectory_probability():
    assert trajectory_probability(Trajectory([Step(0, 0, 0, 1.0), Step(1, 1, 0, 1.0)], (0.0, 0.0))) == 1.0
    assert trajectory_probability(Trajectory([Step(0, 0, 0, 0.5), Step(1, 1, 1, 0.5)], (1.0, -1.0))) == 0.25


def test_single_action_game_estimate_is_the_payoff():
    tree = GameTree.from_nodes([Decision(0, "only", (("go", 1, (3.0, -3.0)),)), Terminal()])
    p = uniform_profile(tree)
    res = estimate_outcome(tree, p, p, 0.0, "rkl", 0, 1.0, rng=0)
    assert res.values[0, 0] == 3.0
    assert res.trajectory.probability == 1.0
    assert res.trajectory.payoff == (3.0, -3.0)


def test_external_without_opponent_or_chance_is_exact():
    # a one-player tree: player 0 chooses twice
    tree = GameTree.from_nodes([
        Decision(0, "a", (("l", 1, 0.0), ("r", 2, (1.0, -1.0)))),
        Decision(0, "b", (("l", 3, (2.0, -2.0)), ("r", 4, (-1.0, 1.0)))),
        Terminal(), Terminal(), Terminal(),
    ])
    rng = np.random.default_rng(0)
    pi, sigma = random_profile(tree, rng), random_profile(tree, rng)
    res = estimate_external(tree, pi, sigma, 0.3, "kl", 0, rng=1)
    exact = perturbed_counterfactual_values(tree, pi, sigma, 0.3, "kl", 0)
    np.testing.assert_allclose(res.values.values, exact.values, rtol=1e-14)


def test_outcome_values_only_on_the_path(kuhn):
    p = uniform_profile(kuhn)
    res = estimate_outcome(kuhn, p, p, 0.1, "rkl", 0, 1.0, rng=7)
    visited = {kuhn.node_infoset[v] for v in res.visited_nodes}
    assert set(res.values.infosets) == visited
    assert all(kuhn.info_player[x] == 0 for x in visited)
    path_nodes = {s.node for s in res.trajectory.steps}
    assert set(res.visited_nodes) <= path_nodes


def test_rkl_sample_perturbation_is_closed_form(toy):
    rng = np.random.default_rng(5)
    pi, sigma = random_profile(toy, rng), random_profile(toy, rng)
    for seed in range(30):
        res = estimate_outcome(toy, pi, sigma, 0.1, "rkl", 0, 1.0, rng=seed)
        for v, delta in res.delta_tilde.items():
            x = toy.node_infoset[v]
            np.testing.assert_allclose(delta, sigma.vector(x) / pi.vector(x) - 1, atol=1e-12)


def test_estimates_reproducible_from_seed(kuhn):
    p = random_profile(kuhn, np.random.default_rng(0))
    a = estimate_outcome(kuhn, p, p, 0.1, "kl", 1, 0.6, rng=42)
    b = estimate_outcome(kuhn, p, p, 0.1, "kl", 1, 0.6, rng=42)
    assert a.trajectory == b.trajectory
    np.testing.assert_array_equal(a.values.values, b.values.values)


def test_monte_carlo_mean_approaches_exact_on_kuhn(kuhn):
    rng = np.random.default_rng(9)
    pi, sigma = random_profile(kuhn, rng), random_profile(kuhn, rng)
    exact = perturbed_counterfactual_values(kuhn, pi, sigma, 0.1, "rkl", 1).values
    total = np.zeros_like(exact)
    n = 4000
    for _ in range(n):
        res = estimate_external(kuhn, pi, sigma, 0.1, "rkl", 1, rng=rng)
        total += np.where(np.repeat(res.values.coverage, kuhn.info_nactions), res.values.values, 0.0)
    mask = np.repeat(kuhn.info_player == 1, kuhn.info_nactions)
    np.testing.assert_allclose(total[mask] / n, exact[mask], atol=0.08)


def test_uniform_stream_is_buffer_size_independent():
    a, b = UniformStream(3, size=5), UniformStream(3, size=64)
    drawn_a, drawn_b = [], []
    for need in (4, 9, 2, 30):
        for s, out in ((a, drawn_a), (b, drawn_b)):
            s.ensure(need)
            out.extend(s.buf[s.pos : s.pos + need])
            s.pos += need
    np.testing.assert_array_equal(drawn_a, drawn_b)
    np.testing.assert_array_equal(drawn_a, np.random.default_rng(3).random(45))
