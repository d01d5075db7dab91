"""Exact (full-traversal) Q-values, counterfactual values and perturbations.

The traversal keeps two running quantities per node instead of one: the
expected continuation payoff and the expected cumulative perturbation below
the node.  Their combination ``payoff + mu * perturbation`` is exactly the
perturbed continuation value, and keeping them apart lets the same pass answer
Q-value and cumulative-perturbation queries.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .game_core import KIND_CHANCE, KIND_DECISION, KIND_TERMINAL, GameTree
from .strategy import BehaviorProfile

D_NONE = 0
D_RKL = 1
D_KL = 2


class DegenerateSupportError(ArithmeticError):
    """A divergence was evaluated where the current strategy has zero mass."""


class DivergenceKind(enum.Enum):
    NONE = D_NONE
    RKL = D_RKL
    KL = D_KL

    @classmethod
    def parse(cls, value) -> "DivergenceKind":
        if isinstance(value, cls):
            return value
        if value is None:
            return cls.NONE
        return cls[str(value).upper()]

    @property
    def code(self) -> int:
        return self.value


def divergence_term(kind, pi, sigma, a: int, acting: bool = True) -> float:
    """Immediate perturbation of action ``a``: (s-p)/p for RKL, ln(s/p) for KL."""
    kind = DivergenceKind.parse(kind)
    if not acting or kind is DivergenceKind.NONE:
        return 0.0
    p, s = float(pi[a]), float(sigma[a])
    if p <= 0.0:
        raise DegenerateSupportError(f"current strategy puts no mass on action {a}")
    if kind is DivergenceKind.RKL:
        return (s - p) / p
    if s <= 0.0:
        raise DegenerateSupportError(f"anchor puts no mass on action {a}")
    return math.log(s / p)


@numba.njit(cache=True, error_model="numpy", inline="always")
def d_term(kind, p, s):
    if kind == D_RKL:
        return (s - p) / p
    if kind == D_KL:
        return np.log(s / p)
    return 0.0


@numba.njit(cache=True, error_model="numpy")
def other_reach_kernel(t, probs, player, out):
    """Opponent-and-chance reach of every node from ``player``'s perspective."""
    out[t.order[0]] = 1.0
    for v in t.order:
        k = t.kind[v]
        if k == KIND_TERMINAL:
            continue
        s = t.edge_start[v]
        r = out[v]
        if k == KIND_CHANCE:
            for j in range(t.edge_count[v]):
                out[t.edge_child[s + j]] = r * t.edge_prob[s + j]
        elif t.player[v] == player:
            for j in range(t.edge_count[v]):
                out[t.edge_child[s + j]] = r
        else:
            o = t.info_offset[t.infoset[v]]
            for j in range(t.edge_count[v]):
                out[t.edge_child[s + j]] = r * probs[o + j]


@numba.njit(cache=True, error_model="numpy")
def full_walk_kernel(t, probs, sigma, mu, kind, player, vals, node_u, node_d, reach):
    """Perturbed counterfactual values of ``player`` for every own infoset.

    Writes ``vals`` at ``player``'s action slots only.  ``node_u``/``node_d``
    receive the expected continuation payoff / perturbation of every node.
    """
    other_reach_kernel(t, probs, player, reach)
    for x in range(len(t.info_offset)):
        if t.info_player[x] == player:
            o = t.info_offset[x]
            for a in range(t.info_nactions[x]):
                vals[o + a] = 0.0
    n = len(t.order)
    for idx in range(n - 1, -1, -1):
        v = t.order[idx]
        k = t.kind[v]
        if k == KIND_TERMINAL:
            node_u[v] = 0.0
            node_d[v] = 0.0
            continue
        s = t.edge_start[v]
        c = t.edge_count[v]
        su = 0.0
        sd = 0.0
        if k == KIND_CHANCE:
            for j in range(c):
                ch = t.edge_child[s + j]
                w = t.edge_prob[s + j]
                su += w * (node_u[ch] + t.edge_payoff[s + j, player])
                sd += w * node_d[ch]
        else:
            o = t.info_offset[t.infoset[v]]
            if t.player[v] != player:
                for j in range(c):
                    ch = t.edge_child[s + j]
                    w = probs[o + j]
                    su += w * (node_u[ch] + t.edge_payoff[s + j, player])
                    sd += w * node_d[ch]
            else:
                r = reach[v]
                for j in range(c):
                    ch = t.edge_child[s + j]
                    w = probs[o + j]
                    qu = node_u[ch] + t.edge_payoff[s + j, player]
                    qd = node_d[ch] + d_term(kind, w, sigma[o + j])
                    vals[o + j] += r * (qu + mu * qd)
                    su += w * qu
                    sd += w * qd
        node_u[v] = su
        node_d[v] = sd


@dataclass
class ValueTable:
    """Per-(infoset, action) values with the set of infosets they cover."""

    tree: GameTree
    values: np.ndarray
    coverage: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.coverage is None:
            self.coverage = np.ones(self.tree.num_infosets, dtype=bool)

    def vector(self, x: int) -> np.ndarray:
        if not self.coverage[x]:
            raise KeyError(f"infoset {x} has no value in this table")
        o = self.tree.info_offset[x]
        return self.values[o : o + self.tree.info_nactions[x]]

    def __getitem__(self, key):
        x, a = key
        return self.vector(x)[a]

    @property
    def infosets(self) -> np.ndarray:
        return np.flatnonzero(self.coverage)


def _require_interior(profile: BehaviorProfile, sigma, kind: DivergenceKind, player=None):
    if kind is DivergenceKind.NONE:
        return
    tree = profile.tree
    mask = np.ones(tree.num_actions_total, dtype=bool)
    if player is not None:
        mask = np.repeat(tree.info_player == player, tree.info_nactions)
    if (profile.probs[mask] <= 0).any():
        raise DegenerateSupportError("perturbation needs a strictly positive strategy")
    if kind is DivergenceKind.KL and (sigma.probs[mask] <= 0).any():
        raise DegenerateSupportError("KL perturbation needs a strictly positive anchor")


def node_values(tree, profile, sigma=None, kind=DivergenceKind.NONE, player: int = 0):
    """Expected continuation payoff and cumulative perturbation at every node."""
    kind = DivergenceKind.parse(kind)
    sigma = profile if sigma is None else sigma
    _require_interior(profile, sigma, kind, player)
    n = tree.num_nodes
    node_u, node_d = np.empty(n), np.empty(n)
    full_walk_kernel(
        tree.arrays, profile.probs, sigma.probs, 0.0, kind.code, player,
        np.empty(tree.num_actions_total), node_u, node_d, np.empty(n),
    )
    return node_u, node_d


def perturbed_counterfactual_values(tree, profile, sigma, mu, kind, player: int) -> ValueTable:
    kind = DivergenceKind.parse(kind)
    sigma = profile if sigma is None else sigma
    _require_interior(profile, sigma, kind, player)
    n = tree.num_nodes
    vals = np.zeros(tree.num_actions_total)
    full_walk_kernel(
        tree.arrays, profile.probs, sigma.probs, float(mu), kind.code, player,
        vals, np.empty(n), np.empty(n), np.empty(n),
    )
    return ValueTable(tree, vals, tree.info_player == player)


def counterfactual_values(tree, profile, player: int) -> ValueTable:
    return perturbed_counterfactual_values(tree, profile, None, 0.0, DivergenceKind.NONE, player)


def expected_payoff(tree, profile, player: int = 0) -> float:
    node_u, _ = node_values(tree, profile, player=player)
    return float(node_u[tree.root])


def _edge(tree, h, a):
    if tree.kind[h] != KIND_DECISION:
        raise ValueError(f"node {h} is not a decision node")
    if not 0 <= a < tree.edge_count[h]:
        raise ValueError(f"action {a} is not legal at node {h}")
    return int(tree.edge_start[h] + a)


def q_value(tree, profile, h: int, a: int, player: int | None = None) -> float:
    """Expected payoff to ``player`` (default: the actor at ``h``) after playing ``a`` at ``h``."""
    e = _edge(tree, h, a)
    player = int(tree.player[h]) if player is None else player
    node_u, _ = node_values(tree, profile, player=player)
    return float(tree.edge_payoff[e, player] + node_u[tree.edge_child[e]])


def cumulative_perturbation(tree, profile, sigma, kind, h: int, a: int, player: int | None = None) -> float:
    """Reach-weighted sum of ``player``'s perturbations from ``(h, a)`` downward, ``(h, a)`` included."""
    kind = DivergenceKind.parse(kind)
    e = _edge(tree, h, a)
    player = int(tree.player[h]) if player is None else player
    _, node_d = node_values(tree, profile, sigma, kind, player)
    x = tree.node_infoset[h]
    here = divergence_term(kind, profile.vector(x), sigma.vector(x), a, tree.player[h] == player)
    return float(here + node_d[tree.edge_child[e]])


def cumulative_perturbation_all(tree, profile, sigma, kind) -> np.ndarray:
    """Cumulative perturbation of the acting player for every decision edge (NaN elsewhere)."""
    kind = DivergenceKind.parse(kind)
    delta = np.full(len(tree.edge_child), np.nan)
    owner = np.repeat(np.arange(tree.num_nodes), tree.edge_count)
    decision = tree.kind[owner] == KIND_DECISION
    flat = np.where(
        decision,
        tree.info_offset[np.maximum(tree.node_infoset[owner], 0)]
        + (np.arange(len(owner)) - tree.edge_start[owner]),
        0,
    )
    for p in (0, 1):
        _, node_d = node_values(tree, profile, sigma, kind, p)
        sel = decision & (tree.player[owner] == p)
        pi, s = profile.probs[flat[sel]], sigma.probs[flat[sel]]
        if kind is DivergenceKind.RKL:
            here = (s - pi) / pi
        elif kind is DivergenceKind.KL:
            here = np.log(s / pi)
        else:
            here = np.zeros(sel.sum())
        delta[sel] = here + node_d[tree.edge_child[sel]]
    return delta
