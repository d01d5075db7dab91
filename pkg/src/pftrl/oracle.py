"""Exhaustive verification of the sampled estimators on micro games.

Every sampling outcome is enumerated with its probability, the shipped
estimator is replayed on it (by forcing its choices), and the
probability-weighted estimates are compared with exact values.  Exact values
come from two independent routes: the node-value recursion in
:mod:`pftrl.values_exact` and a pure-Python sum over descendant paths here.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field

import numpy as np

from .game_core import CHANCE, KIND_CHANCE, KIND_DECISION, KIND_TERMINAL, GameTree
from .sampling import SamplingScheme, Step, Trajectory, estimate_external, estimate_outcome
from .strategy import BehaviorProfile
from .values_exact import (
    DivergenceKind,
    cumulative_perturbation_all,
    divergence_term,
    perturbed_counterfactual_values,
)

MAX_ENUMERATION_NODES = 10_000
MAX_EXTERNAL_COMBINATIONS = 1_000_000


class OracleError(RuntimeError):
    pass


def _check_size(tree: GameTree) -> None:
    if tree.num_nodes > MAX_ENUMERATION_NODES:
        raise OracleError(
            f"{tree.name} has {tree.num_nodes} nodes; enumeration is capped at {MAX_ENUMERATION_NODES}"
        )


def sampling_profile(profile: BehaviorProfile, player: int, epsilon: float) -> BehaviorProfile:
    """The outcome-sampling distribution: epsilon-mixed for ``player``, actual for the opponent."""
    tree = profile.tree
    out = profile.copy()
    for x in tree.infosets_of(player):
        pi = profile.vector(x)
        out.set(x, (1.0 - epsilon) * pi + epsilon / len(pi))
    return out


def enumerate_outcome_trajectories(tree: GameTree, sampler: BehaviorProfile) -> list[tuple[Trajectory, float]]:
    """Every root-to-terminal path with positive probability under ``sampler`` (chance from the tree)."""
    _check_size(tree)
    out = []

    def walk(v, steps, payoff, prob):
        if tree.kind[v] == KIND_TERMINAL:
            out.append((Trajectory(list(steps), (payoff[0], payoff[1])), prob))
            return
        s = int(tree.edge_start[v])
        chance = tree.kind[v] == KIND_CHANCE
        dist = tree.edge_prob[s : s + tree.edge_count[v]] if chance else sampler.vector(tree.node_infoset[v])
        actor = CHANCE if chance else int(tree.player[v])
        for a, pa in enumerate(dist):
            if pa <= 0.0:
                continue
            u = tree.edge_payoff[s + a]
            steps.append(Step(int(v), actor, a, float(pa)))
            walk(int(tree.edge_child[s + a]), steps, (payoff[0] + u[0], payoff[1] + u[1]), prob * float(pa))
            steps.pop()

    walk(tree.root, [], (0.0, 0.0), 1.0)
    return out


def _external_outcomes(tree: GameTree, profile: BehaviorProfile, player: int):
    """Cross product of choices at every opponent and chance node, with probabilities."""
    nodes, choices = [], []
    for v in range(tree.num_nodes):
        k = tree.kind[v]
        if k == KIND_TERMINAL or (k == KIND_DECISION and tree.player[v] == player):
            continue
        s = int(tree.edge_start[v])
        dist = tree.edge_prob[s : s + tree.edge_count[v]] if k == KIND_CHANCE else profile.vector(tree.node_infoset[v])
        nodes.append(v)
        choices.append([(a, float(p)) for a, p in enumerate(dist) if p > 0.0])
    count = int(np.prod([len(c) for c in choices], dtype=np.float64))
    if count > MAX_EXTERNAL_COMBINATIONS:
        raise OracleError(f"{count} opponent/chance combinations exceed the enumeration cap")
    for combo in itertools.product(*choices):
        forced = np.full(tree.num_nodes, -1, dtype=np.int64)
        prob = 1.0
        for v, (a, p) in zip(nodes, combo):
            forced[v] = a
            prob *= p
        yield forced, prob


def _outcomes(tree, profile, player, scheme: SamplingScheme):
    """Yield ``(forced choices, probability)`` for every sampling outcome of ``scheme``."""
    if scheme.tag == "outcome":
        sampler = sampling_profile(profile, player, scheme.epsilon)
        for traj, prob in enumerate_outcome_trajectories(tree, sampler):
            forced = np.full(tree.num_nodes, -1, dtype=np.int64)
            for st in traj.steps:
                forced[st.node] = st.action
            yield forced, prob
    elif scheme.tag == "external":
        _check_size(tree)
        yield from _external_outcomes(tree, profile, player)
    else:
        raise OracleError("full traversal has nothing to enumerate")


def _estimate(tree, profile, sigma, mu, kind, player, scheme, forced):
    if scheme.tag == "outcome":
        return estimate_outcome(tree, profile, sigma, mu, kind, player, scheme.epsilon, rng=0, forced=forced)
    return estimate_external(tree, profile, sigma, mu, kind, player, rng=0, forced=forced)


def path_sum_values(tree: GameTree, profile: BehaviorProfile, sigma, mu: float, kind, player: int) -> np.ndarray:
    """Perturbed counterfactual values by explicit enumeration of descendant paths.

    For each own node ``h`` and action ``a`` this sums, over every edge at or
    below ``(h, a)``, the reach probability from ``h`` times the edge payoff
    plus ``mu`` times the player's immediate perturbation, then weights by the
    opponent-and-chance reach of ``h``.
    """
    _check_size(tree)
    kind = DivergenceKind.parse(kind)
    sigma = profile if sigma is None else sigma
    out = np.zeros(tree.num_actions_total)

    def edge_prob(v, a):
        if tree.kind[v] == KIND_CHANCE:
            return float(tree.edge_prob[tree.edge_start[v] + a])
        return float(profile.vector(tree.node_infoset[v])[a])

    def edge_term(v, a):
        u = float(tree.edge_payoff[tree.edge_start[v] + a, player])
        if tree.kind[v] == KIND_DECISION and tree.player[v] == player:
            x = tree.node_infoset[v]
            u += mu * divergence_term(kind, profile.vector(x), sigma.vector(x), a)
        return u

    def below(v, a):
        """Sum over edges at or below (v, a), each weighted by its reach from v after a."""
        total = edge_term(v, a)
        stack = [(int(tree.edge_child[tree.edge_start[v] + a]), 1.0)]
        while stack:
            w, r = stack.pop()
            if tree.kind[w] == KIND_TERMINAL:
                continue
            for b in range(int(tree.edge_count[w])):
                rb = r * edge_prob(w, b)
                total += rb * edge_term(w, b)
                stack.append((int(tree.edge_child[tree.edge_start[w] + b]), rb))
        return total

    stack = [(tree.root, 1.0)]
    while stack:
        v, other = stack.pop()
        if tree.kind[v] == KIND_TERMINAL:
            continue
        own = tree.kind[v] == KIND_DECISION and tree.player[v] == player
        x = tree.node_infoset[v]
        for a in range(int(tree.edge_count[v])):
            if own:
                out[tree.info_offset[x] + a] += other * below(v, a)
            nxt = other if own else other * edge_prob(v, a)
            stack.append((int(tree.edge_child[tree.edge_start[v] + a]), nxt))
    return out


@dataclass
class ValueRow:
    player: int
    infoset: int
    action: int
    exact: float
    path_sum: float
    expected_estimate: float

    @property
    def gap(self) -> float:
        return abs(self.expected_estimate - self.exact)


@dataclass
class VarianceRow:
    node: int
    action: int
    mean: float
    variance: float
    closed_form_gap: float
    samples: int


@dataclass
class EnumerationReport:
    game: str
    scheme: str
    kind: str
    values: list[ValueRow] = field(default_factory=list)
    variances: list[VarianceRow] = field(default_factory=list)
    total_probability: list[float] = field(default_factory=list)

    @property
    def max_gap(self) -> float:
        return max((r.gap for r in self.values), default=0.0)

    @property
    def max_oracle_gap(self) -> float:
        """Disagreement between the recursion and the path-sum route."""
        return max((abs(r.exact - r.path_sum) for r in self.values), default=0.0)

    @property
    def max_variance(self) -> float:
        return max((r.variance for r in self.variances), default=0.0)

    @property
    def max_closed_form_gap(self) -> float:
        return max((r.closed_form_gap for r in self.variances), default=0.0)

    @property
    def max_probability_error(self) -> float:
        return max((abs(p - 1.0) for p in self.total_probability), default=0.0)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["infoset", "action", "exact", "expected_estimate", "gap"])
        for r in self.values:
            w.writerow([r.infoset, r.action, format(r.exact, ".17g"),
                        format(r.expected_estimate, ".17g"), format(r.gap, ".17g")])
        return buf.getvalue()

    def summary(self) -> str:
        parts = [f"{self.game} {self.scheme} {self.kind}"]
        if self.values:
            parts.append(f"max_gap={self.max_gap:.3e} oracle_gap={self.max_oracle_gap:.3e}")
        if self.variances:
            parts.append(f"max_cond_var={self.max_variance:.3e} closed_form_gap={self.max_closed_form_gap:.3e}")
        parts.append(f"prob_err={self.max_probability_error:.1e}")
        return "  ".join(parts)


def _scheme_label(scheme: SamplingScheme) -> str:
    return f"outcome(eps={scheme.epsilon:g})" if scheme.tag == "outcome" else scheme.tag


def verify_unbiasedness(tree, profile, sigma, mu, kind, scheme: SamplingScheme) -> EnumerationReport:
    """Compare the exact expectation of the shipped estimator with exact values."""
    kind = DivergenceKind.parse(kind)
    report = EnumerationReport(tree.name, _scheme_label(scheme), kind.name)
    for player in (0, 1):
        expected = np.zeros(tree.num_actions_total)
        total = 0.0
        for forced, prob in _outcomes(tree, profile, player, scheme):
            res = _estimate(tree, profile, sigma, mu, kind, player, scheme, forced)
            mask = np.repeat(res.values.coverage, tree.info_nactions)
            expected += prob * np.where(mask, res.values.values, 0.0)
            total += prob
        report.total_probability.append(total)
        exact = perturbed_counterfactual_values(tree, profile, sigma, mu, kind, player).values
        paths = path_sum_values(tree, profile, sigma, mu, kind, player)
        for x in tree.infosets_of(player):
            o = tree.info_offset[x]
            for a in range(tree.info_nactions[x]):
                report.values.append(
                    ValueRow(player, int(x), a, float(exact[o + a]), float(paths[o + a]), float(expected[o + a]))
                )
    return report


def verify_conditional_variance(tree, profile, sigma, kind, scheme: SamplingScheme) -> EnumerationReport:
    """Variance of the estimated cumulative perturbation, conditioned on reaching each node.

    ``closed_form_gap`` is the largest deviation of any conditional sample from
    ``sigma/pi - 1`` (only meaningful for RKL; NaN otherwise).
    """
    kind = DivergenceKind.parse(kind)
    report = EnumerationReport(tree.name, _scheme_label(scheme), kind.name)
    samples: dict[int, list[tuple[float, np.ndarray]]] = {}
    for player in (0, 1):
        total = 0.0
        for forced, prob in _outcomes(tree, profile, player, scheme):
            res = _estimate(tree, profile, sigma, 1.0, kind, player, scheme, forced)
            for v, delta in res.delta_tilde.items():
                samples.setdefault(v, []).append((prob, delta))
            total += prob
        report.total_probability.append(total)
    for v in sorted(samples):
        x = tree.node_infoset[v]
        pi, s = profile.vector(x), sigma.vector(x)
        probs = np.array([p for p, _ in samples[v]])
        deltas = np.array([d for _, d in samples[v]])
        w = probs / probs.sum()
        mean = w @ deltas
        var = w @ (deltas - mean) ** 2
        closed = s / pi - 1.0
        for a in range(len(pi)):
            gap = float(np.max(np.abs(deltas[:, a] - closed[a]))) if kind is DivergenceKind.RKL else float("nan")
            report.variances.append(VarianceRow(int(v), a, float(mean[a]), float(var[a]), gap, len(probs)))
    return report


def zero_mean_residuals(tree, profile, sigma) -> np.ndarray:
    """``|sum_a pi(a|x) delta(h, a)|`` under RKL at every decision node (NaN elsewhere)."""
    delta = cumulative_perturbation_all(tree, profile, sigma, DivergenceKind.RKL)
    owner = np.repeat(np.arange(tree.num_nodes), tree.edge_count)
    out = np.full(tree.num_nodes, np.nan)
    dec = np.flatnonzero(tree.kind == KIND_DECISION)
    sel = tree.kind[owner] == KIND_DECISION
    flat = tree.info_offset[tree.node_infoset[owner[sel]]] + (np.flatnonzero(sel) - tree.edge_start[owner[sel]])
    weighted = np.zeros(len(owner))
    weighted[sel] = profile.probs[flat] * delta[sel]
    sums = np.add.reduceat(weighted, tree.edge_start[dec]) if len(dec) else np.zeros(0)
    out[dec] = np.abs(sums)
    return out
