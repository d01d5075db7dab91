"""Best-response values and exploitability.

Exploitability here is the sum of both players' best-response gains,
``BR_0(pi_1) + BR_1(pi_0)``, which is zero exactly at a Nash equilibrium of a
zero-sum game.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .game_core import KIND_CHANCE, KIND_TERMINAL, GameTree
from .strategy import BehaviorProfile
from .values_exact import other_reach_kernel


@numba.njit(cache=True, error_model="numpy")
def _br_pass(t, probs, responder, reach, node_val, scores, br_action, level):
    """One bottom-up pass; infosets at ``level`` accumulate action scores."""
    n = len(t.order)
    for idx in range(n - 1, -1, -1):
        v = t.order[idx]
        k = t.kind[v]
        if k == KIND_TERMINAL:
            node_val[v] = 0.0
            continue
        s = t.edge_start[v]
        c = t.edge_count[v]
        total = 0.0
        if k == KIND_CHANCE:
            for j in range(c):
                total += t.edge_prob[s + j] * (node_val[t.edge_child[s + j]] + t.edge_payoff[s + j, responder])
        elif t.player[v] != responder:
            o = t.info_offset[t.infoset[v]]
            for j in range(c):
                total += probs[o + j] * (node_val[t.edge_child[s + j]] + t.edge_payoff[s + j, responder])
        else:
            x = t.infoset[v]
            b = br_action[x]
            if b >= 0:
                total = node_val[t.edge_child[s + b]] + t.edge_payoff[s + b, responder]
            elif t.info_seq_len[x] == level:
                o = t.info_offset[x]
                r = reach[v]
                for j in range(c):
                    scores[o + j] += r * (node_val[t.edge_child[s + j]] + t.edge_payoff[s + j, responder])
        node_val[v] = total


@numba.njit(cache=True, error_model="numpy")
def best_response_kernel(t, probs, responder, br_action):
    """Fill ``br_action`` for ``responder``'s infosets; return the BR value."""
    n = len(t.order)
    reach = np.empty(n)
    node_val = np.empty(n)
    scores = np.zeros(len(probs))
    other_reach_kernel(t, probs, responder, reach)
    max_level = 0
    for x in range(len(t.info_offset)):
        br_action[x] = -1
        if t.info_player[x] == responder and t.info_seq_len[x] > max_level:
            max_level = t.info_seq_len[x]
    # Deepest own-sequence level first: those infosets only have opponent and
    # chance nodes (or already-decided own infosets) beneath them.
    for level in range(max_level, -1, -1):
        _br_pass(t, probs, responder, reach, node_val, scores, br_action, level)
        for x in range(len(t.info_offset)):
            if t.info_player[x] == responder and t.info_seq_len[x] == level:
                o = t.info_offset[x]
                best = 0
                for j in range(1, t.info_nactions[x]):
                    if scores[o + j] > scores[o + best]:
                        best = j
                br_action[x] = best
    _br_pass(t, probs, responder, reach, node_val, scores, br_action, -1)
    return node_val[t.order[0]]


def best_response(tree: GameTree, profile: BehaviorProfile, responder: int):
    """Return ``(value, actions)``: the responder's BR value and chosen action per infoset."""
    actions = np.empty(tree.num_infosets, dtype=np.int64)
    value = best_response_kernel(tree.arrays, profile.probs, responder, actions)
    return float(value), actions


def best_response_value(tree: GameTree, profile: BehaviorProfile, responder: int) -> float:
    return best_response(tree, profile, responder)[0]


def nash_conv(tree: GameTree, profile: BehaviorProfile) -> float:
    """Sum of both players' best-response values."""
    return best_response_value(tree, profile, 0) + best_response_value(tree, profile, 1)


def exploitability(tree: GameTree, profile: BehaviorProfile) -> float:
    return nash_conv(tree, profile)


@dataclass(frozen=True)
class ExploitRecord:
    iteration: int
    exploit_last: float
    exploit_avg: float
