"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Exploitability figures in criteria 5-7 are on the reporting scale (half the
summed best-response gains), the scale the published curves use.

Run alone with ``pytest tests/test_acceptance.py -s`` or
``python tests/test_acceptance.py``.
"""

import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pftrl import games
from pftrl.harness import ExperimentConfig, run_experiment
from pftrl.learners import LearnerConfig, Solver, ftrl_strategy, run
from pftrl.metrics import exploitability
from pftrl.oracle import verify_conditional_variance, verify_unbiasedness, zero_mean_residuals
from pftrl.sampling import SamplingScheme
from pftrl.strategy import random_profile, uniform_profile

SCHEMES = (SamplingScheme.outcome(1.0), SamplingScheme.external())
PAIRS = 20


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail, started):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}  ({time.perf_counter() - started:.1f}s)"
        with capsys.disabled():
            print("\n" + line)
        return ok

    return emit


def _log10(x):
    return math.log10(max(x, 1e-12))


def test_criterion_1_infoset_counts(report):
    t0 = time.perf_counter()
    counts = {name: games.build(name).num_infosets for name in games.BENCHMARKS}
    elapsed = time.perf_counter() - t0
    ok = counts == games.EXPECTED_INFOSETS and elapsed < 10
    detail = " ".join(f"{k}={v}" for k, v in counts.items())
    assert report(1, ok, detail, t0), (counts, elapsed)


def test_criterion_2_unbiased_estimates(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = 0.0
    for name in games.MICRO:
        tree = games.build(name)
        for _ in range(PAIRS):
            pi, sigma = random_profile(tree, rng), random_profile(tree, rng)
            for mu in (0.0, 0.1):
                for kind in ("rkl", "kl"):
                    for scheme in SCHEMES:
                        rep = verify_unbiasedness(tree, pi, sigma, mu, kind, scheme)
                        worst = max(worst, rep.max_gap)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-9 and elapsed < 30
    assert report(2, ok, f"max |E[v~] - v| = {worst:.2e}", t0), (worst, elapsed)


def test_criterion_3_conditional_variance(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    var = closed = 0.0
    for name in games.MICRO:
        tree = games.build(name)
        for _ in range(PAIRS):
            pi, sigma = random_profile(tree, rng), random_profile(tree, rng)
            for scheme in SCHEMES:
                rep = verify_conditional_variance(tree, pi, sigma, "rkl", scheme)
                var = max(var, rep.max_variance)
                closed = max(closed, rep.max_closed_form_gap)
    toy = games.build("one_card_toy")
    pi = uniform_profile(toy)
    for x in range(toy.num_infosets):
        if toy.info_nactions[x] == 2:
            pi.set(x, [0.3, 0.7])
    kl_var = verify_conditional_variance(toy, pi, uniform_profile(toy), "kl", SCHEMES[0]).max_variance
    elapsed = time.perf_counter() - t0
    ok = var < 1e-18 and closed < 1e-12 and kl_var > 1e-6 and elapsed < 30
    detail = f"RKL max var = {var:.2e}, closed-form gap = {closed:.2e}; KL max var = {kl_var:.2e}"
    assert report(3, ok, detail, t0), detail


def test_criterion_4_zero_mean_perturbation(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    worst = 0.0
    for name in games.MICRO + games.BENCHMARKS:
        tree = games.build(name)
        for _ in range(10):
            res = zero_mean_residuals(tree, random_profile(tree, rng), random_profile(tree, rng))
            worst = max(worst, float(np.nanmax(res)))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-12 and elapsed < 60
    assert report(4, ok, f"max |sum_a pi delta| = {worst:.2e}", t0), (worst, elapsed)


def _full_walk_final(game, algo, mu, iterations, eta=1e-4):
    cfg = LearnerConfig(algo, eta=eta, mu=mu, anchor_interval=math.inf, scheme=SamplingScheme.full(),
                        iterations=iterations)
    return run(cfg, games.build(game), eval_every=iterations)[-1].exploit_last


def test_criterion_5_full_walk_plateau_weak_perturbation(report):
    t0 = time.perf_counter()
    iters = 500_000
    rkl = _log10(_full_walk_final("kuhn", "pftrl-rkl", 0.05, iters))
    kl = _log10(_full_walk_final("kuhn", "pftrl-kl", 0.010147, iters))
    ok = abs(rkl + 1.7) <= 0.3 and abs(kl - rkl) <= 0.15
    detail = f"log10 RKL(0.05) = {rkl:.3f} (target -1.7 +/- 0.3), KL(0.010147) = {kl:.3f} (gap {abs(kl - rkl):.3f}, limit 0.15)"
    assert report(5, ok, detail, t0), detail


def test_criterion_6_full_walk_plateau_middle(report):
    t0 = time.perf_counter()
    iters = 500_000
    rkl = _log10(_full_walk_final("kuhn", "pftrl-rkl", 0.1, iters))
    kl = _log10(_full_walk_final("kuhn", "pftrl-kl", 0.17, iters))
    ok = abs(rkl + 1.419) <= 0.3 and abs(kl + 1.419) <= 0.3
    detail = f"log10 RKL(0.1) = {rkl:.3f}, KL(0.17) = {kl:.3f} (target -1.419 +/- 0.3)"
    assert report(6, ok, detail, t0), detail


ORDERING_ITERATIONS = 3_000_000
ORDERING_SEEDS = list(range(10))


def _final_mean(game, algo, mu, t_sigma):
    cfg = ExperimentConfig(game=game, algorithm=algo, scheme="outcome", eta=1e-4, mu=mu, t_sigma=t_sigma,
                           iterations=ORDERING_ITERATIONS, seeds=ORDERING_SEEDS,
                           eval_every=ORDERING_ITERATIONS)
    rows = [r for r in run_experiment(cfg).rows if r.iteration == ORDERING_ITERATIONS]
    assert len(rows) == len(ORDERING_SEEDS)
    return math.fsum(r.exploit_last for r in rows) / len(rows)


def test_criterion_7_sampled_ordering(report):
    t0 = time.perf_counter()
    ok = True
    parts = []
    for game in ("kuhn", "leduc"):
        ftrl = _final_mean(game, "ftrl", 0.0, math.inf)
        rkl = _final_mean(game, "pftrl-rkl", 0.1, 100_000)
        kl = _final_mean(game, "pftrl-kl", 0.1, 100_000)
        ok &= rkl < ftrl and kl < ftrl
        if game == "leduc":
            ok &= rkl <= kl
        parts.append(f"{game}: FTRL {_log10(ftrl):.3f} RKL+ {_log10(rkl):.3f} KL+ {_log10(kl):.3f}")
    assert report(7, ok, "; ".join(parts) + " (log10 mean, 10 seeds)", t0), parts


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31))
def _fuzz_exploitability(seed):
    rng = np.random.default_rng(seed)
    for name in ("kuhn", "leduc", "goofspiel4", "liars4") + games.MICRO:
        tree = games.build(name)
        prof = random_profile(tree, rng)
        prof.probs[:] = prof.probs ** rng.uniform(1, 10)
        prof.probs /= np.repeat(np.add.reduceat(prof.probs, tree.info_offset), tree.info_nactions)
        assert exploitability(tree, prof) >= -1e-9


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=2, max_size=6), st.floats(1e-2, 10.0))
def _softmax_characterization(values, eta):
    s = np.array(values)
    p = ftrl_strategy(s, eta)
    assert abs(p.sum() - 1) < 1e-12
    # the entropy-regularized argmax: log-odds equal eta times value gaps
    keep = p > 1e-300
    logs = np.log(p[keep])
    np.testing.assert_allclose(logs - logs[0], eta * (s[keep] - s[keep][0]), atol=1e-6)


def test_criterion_8_property_suite(report, tmp_path):
    t0 = time.perf_counter()
    _fuzz_exploitability()
    _softmax_characterization()

    kuhn = games.build("kuhn")
    for scheme in (SamplingScheme.full(), SamplingScheme.outcome(1.0), SamplingScheme.external()):
        solver = Solver(kuhn, LearnerConfig("cfr-plus", scheme=scheme, seed=1))
        for _ in range(50):
            solver.step(1)
            assert solver.cumulative.min() >= 0.0

    outputs = []
    for name in ("a.csv", "b.csv"):
        cfg = ExperimentConfig(game="kuhn", algorithm="pftrl-kl", scheme="outcome", iterations=2000,
                               seeds=[0, 1], eval_every=500, t_sigma=300, out=tmp_path / name)
        run_experiment(cfg)
        outputs.append((tmp_path / name).read_bytes())
    assert outputs[0] == outputs[1]

    for algo in ("pftrl-rkl", "pftrl-kl"):
        a = Solver(kuhn, LearnerConfig(algo, eta=0.05, mu=0.0, scheme=SamplingScheme.full(), anchor_interval=10))
        b = Solver(kuhn, LearnerConfig("ftrl", eta=0.05, scheme=SamplingScheme.full()))
        a.step(500)
        b.step(500)
        assert np.array_equal(a.profile.probs, b.profile.probs)
        assert np.array_equal(a.cumulative, b.cumulative)

    elapsed = time.perf_counter() - t0
    ok = elapsed < 60
    assert report(8, ok, "fuzzed exploitability, softmax, CFR+ regrets, determinism, mu=0 identity", t0), elapsed


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
