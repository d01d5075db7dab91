import numpy as np
import pytest

from pftrl import games
from pftrl.game_core import KIND_DECISION
from pftrl.oracle import (
    OracleError,
    enumerate_outcome_trajectories,
    path_sum_values,
    sampling_profile,
    verify_conditional_variance,
    verify_unbiasedness,
    zero_mean_residuals,
)
from pftrl.sampling import SamplingScheme
from pftrl.strategy import random_profile, uniform_profile
from pftrl.values_exact import perturbed_counterfactual_values


def test_matching_pennies_has_four_equiprobable_trajectories(pennies):
    trajs = enumerate_outcome_trajectories(pennies, uniform_profile(pennies))
    assert len(trajs) == 4
    assert all(p == 0.25 for _, p in trajs)
    assert sorted(t.payoff[0] for t, _ in trajs) == [-1.0, -1.0, 1.0, 1.0]


def test_trajectory_probabilities_sum_to_one(toy, rng):
    prof = random_profile(toy, rng)
    for player in (0, 1):
        for eps in (1.0, 0.4):
            trajs = enumerate_outcome_trajectories(toy, sampling_profile(prof, player, eps))
            assert sum(p for _, p in trajs) == pytest.approx(1.0, abs=1e-12)
            for t, p in trajs:
                assert t.probability == pytest.approx(p, rel=1e-12)


def test_size_cap_rejects_large_games():
    big = games.build("goofspiel5")
    with pytest.raises(OracleError):
        enumerate_outcome_trajectories(big, uniform_profile(big))
    with pytest.raises(OracleError):
        path_sum_values(big, uniform_profile(big), None, 0.0, "rkl", 0)


def test_full_traversal_has_nothing_to_enumerate(pennies):
    p = uniform_profile(pennies)
    with pytest.raises(OracleError):
        verify_unbiasedness(pennies, p, p, 0.1, "rkl", SamplingScheme.full())


@pytest.mark.parametrize("kind", ["rkl", "kl"])
@pytest.mark.parametrize("mu", [0.0, 0.3])
def test_path_sum_agrees_with_recursion(toy, rng, kind, mu):
    for _ in range(5):
        pi, sigma = random_profile(toy, rng), random_profile(toy, rng)
        for player in (0, 1):
            exact = perturbed_counterfactual_values(toy, pi, sigma, mu, kind, player).values
            np.testing.assert_allclose(path_sum_values(toy, pi, sigma, mu, kind, player), exact, atol=1e-9)


@pytest.mark.parametrize("scheme", [SamplingScheme.outcome(1.0), SamplingScheme.outcome(0.6), SamplingScheme.external()])
def test_estimators_are_unbiased_on_toy(toy, rng, scheme):
    pi, sigma = random_profile(toy, rng), random_profile(toy, rng)
    rep = verify_unbiasedness(toy, pi, sigma, 0.1, "rkl", scheme)
    assert rep.max_gap < 1e-9
    assert rep.max_oracle_gap < 1e-9
    assert rep.max_probability_error < 1e-12
    assert rep.to_csv().splitlines()[0] == "infoset,action,exact,expected_estimate,gap"
    assert "max_gap" in rep.summary()


def test_rkl_perturbation_has_zero_conditional_variance(toy, rng):
    pi, sigma = random_profile(toy, rng), random_profile(toy, rng)
    rep = verify_conditional_variance(toy, pi, sigma, "rkl", SamplingScheme.outcome(1.0))
    assert rep.max_variance < 1e-18
    assert rep.max_closed_form_gap < 1e-12


def test_kl_perturbation_has_positive_conditional_variance(toy):
    pi = uniform_profile(toy)
    for x in range(toy.num_infosets):
        if toy.info_nactions[x] == 2:
            pi.set(x, [0.3, 0.7])
    rep = verify_conditional_variance(toy, pi, uniform_profile(toy), "kl", SamplingScheme.outcome(1.0))
    assert rep.max_variance > 1e-6
    assert np.isnan(rep.max_closed_form_gap)


def test_zero_mean_residuals_vanish(toy, kuhn, rng):
    for tree in (toy, kuhn):
        res = zero_mean_residuals(tree, random_profile(tree, rng), random_profile(tree, rng))
        assert np.nanmax(res) < 1e-12
        assert np.isnan(res[tree.kind != KIND_DECISION]).all()
