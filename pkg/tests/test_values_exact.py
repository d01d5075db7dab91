import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pftrl import games
from pftrl.game_core import KIND_DECISION
from pftrl.strategy import BehaviorProfile, random_profile, uniform_profile
from pftrl.values_exact import (
    DegenerateSupportError,
    DivergenceKind,
    counterfactual_values,
    cumulative_perturbation,
    cumulative_perturbation_all,
    divergence_term,
    expected_payoff,
    perturbed_counterfactual_values,
    q_value,
)

seeds = st.integers(0, 2**32 - 1)


def test_divergence_terms():
    pi, sigma = np.array([0.25, 0.75]), np.array([0.5, 0.5])
    assert divergence_term("rkl", pi, sigma, 0) == pytest.approx(1.0)
    assert divergence_term("rkl", pi, sigma, 1) == pytest.approx(-1 / 3)
    assert divergence_term("kl", pi, sigma, 0) == pytest.approx(math.log(2))
    assert divergence_term("kl", pi, sigma, 0, acting=False) == 0.0
    assert divergence_term(DivergenceKind.NONE, pi, sigma, 0) == 0.0
    assert divergence_term("rkl", sigma, sigma, 1) == 0.0


def test_divergence_zero_support_raises():
    with pytest.raises(DegenerateSupportError):
        divergence_term("rkl", np.array([0.0, 1.0]), np.array([0.5, 0.5]), 0)
    with pytest.raises(DegenerateSupportError):
        divergence_term("kl", np.array([0.5, 0.5]), np.array([0.0, 1.0]), 0)


def test_perturbed_values_need_interior(kuhn):
    p = uniform_profile(kuhn)
    p.probs[:2] = [1.0, 0.0]
    with pytest.raises(DegenerateSupportError):
        perturbed_counterfactual_values(kuhn, p, uniform_profile(kuhn), 0.1, "rkl", 0)
    # without a perturbation a pure strategy is fine
    counterfactual_values(kuhn, p, 0)


def test_matching_pennies_q_values(pennies):
    p = uniform_profile(pennies)
    p.set(pennies.info_base[1], [0.8, 0.2])
    assert q_value(pennies, p, pennies.root, 0) == pytest.approx(0.6)
    assert q_value(pennies, p, pennies.root, 1) == pytest.approx(-0.6)
    cf = counterfactual_values(pennies, p, 0)
    np.testing.assert_allclose(cf.vector(0), [0.6, -0.6])


def test_counterfactual_values_of_player_one_include_opponent_reach(pennies):
    p = uniform_profile(pennies)
    p.set(0, [0.8, 0.2])
    # player 1 gains when the coins differ; its two histories are reached with 0.8 and 0.2
    cf = counterfactual_values(pennies, p, 1)
    np.testing.assert_allclose(cf.vector(pennies.info_base[1]), [0.2 - 0.8, 0.8 - 0.2])


def test_expected_payoff_kuhn_uniform(kuhn):
    # independent enumeration of every root-to-terminal path
    p = uniform_profile(kuhn)
    total = 0.0
    stack = [(kuhn.root, 1.0)]
    while stack:
        v, r = stack.pop()
        s = kuhn.edge_start[v]
        for j in range(kuhn.edge_count[v]):
            w = kuhn.edge_prob[s + j] if kuhn.kind[v] == 1 else 0.5
            total += r * w * kuhn.edge_payoff[s + j, 0]
            stack.append((kuhn.edge_child[s + j], r * w))
    assert expected_payoff(kuhn, p, 0) == pytest.approx(total, abs=1e-15)
    assert expected_payoff(kuhn, p, 1) == pytest.approx(-total, abs=1e-15)


def test_rkl_cumulative_perturbation_closed_form(toy, rng):
    pi, sigma = random_profile(toy, rng), random_profile(toy, rng)
    for h in np.flatnonzero(toy.kind == KIND_DECISION):
        x = toy.node_infoset[h]
        for a in range(toy.edge_count[h]):
            expect = sigma.vector(x)[a] / pi.vector(x)[a] - 1
            assert cumulative_perturbation(toy, pi, sigma, "rkl", h, a) == pytest.approx(expect, abs=1e-12)


def test_kl_cumulative_perturbation_includes_descendants(toy):
    pi, sigma = uniform_profile(toy), uniform_profile(toy)
    x_root = next(x for x in toy.infosets_of(0) if toy.info_parent[x] < 0)
    x_later = next(x for x in toy.infosets_of(0) if toy.info_parent[x] == x_root)
    pi.set(x_later, [0.3, 0.7])
    h = toy.members(x_root)[0]
    immediate = divergence_term("kl", pi.vector(x_root), sigma.vector(x_root), 0)
    later = sum(p * math.log(0.5 / p) for p in (0.3, 0.7))
    # after a check (action 0) player 0 reaches the later infoset only if player 1 bets (prob 0.5)
    assert cumulative_perturbation(toy, pi, sigma, "kl", h, 0) == pytest.approx(immediate + 0.5 * later)


def test_mu_zero_gives_plain_counterfactual_values(kuhn, rng):
    pi, sigma = random_profile(kuhn, rng), random_profile(kuhn, rng)
    for player in (0, 1):
        a = perturbed_counterfactual_values(kuhn, pi, sigma, 0.0, "kl", player).values
        b = counterfactual_values(kuhn, pi, player).values
        np.testing.assert_array_equal(a, b)


@given(seed=seeds, mu=st.floats(0.0, 2.0))
def test_perturbed_values_are_affine_in_mu(seed, mu):
    tree = games.build("one_card_toy")
    rng = np.random.default_rng(seed)
    pi, sigma = random_profile(tree, rng), random_profile(tree, rng)
    for kind in ("rkl", "kl"):
        v0 = perturbed_counterfactual_values(tree, pi, sigma, 0.0, kind, 0).values
        v1 = perturbed_counterfactual_values(tree, pi, sigma, 1.0, kind, 0).values
        vm = perturbed_counterfactual_values(tree, pi, sigma, mu, kind, 0).values
        np.testing.assert_allclose(vm, v0 + mu * (v1 - v0), atol=1e-12)


@given(seed=seeds)
def test_rkl_zero_mean_property(seed):
    for name in ("matching_pennies", "one_card_toy", "kuhn"):
        tree = games.build(name)
        rng = np.random.default_rng(seed)
        pi, sigma = random_profile(tree, rng), random_profile(tree, rng)
        delta = cumulative_perturbation_all(tree, pi, sigma, "rkl")
        for h in np.flatnonzero(tree.kind == KIND_DECISION):
            s, c = tree.edge_start[h], tree.edge_count[h]
            assert abs(pi.vector(tree.node_infoset[h]) @ delta[s : s + c]) < 1e-12


def test_kl_is_not_zero_mean(toy):
    pi = BehaviorProfile(toy, np.full(toy.num_actions_total, 0.5))
    pi.probs[: 2] = [0.3, 0.7]
    sigma = uniform_profile(toy)
    delta = cumulative_perturbation_all(toy, pi, sigma, "kl")
    h = toy.members(0)[0]
    s, c = toy.edge_start[h], toy.edge_count[h]
    assert pi.vector(0) @ delta[s : s + c] < -1e-3  # minus a KL divergence


def test_value_table_coverage(kuhn):
    vt = counterfactual_values(kuhn, uniform_profile(kuhn), 1)
    assert set(vt.infosets) == set(kuhn.infosets_of(1))
    with pytest.raises(KeyError):
        vt.vector(0)
