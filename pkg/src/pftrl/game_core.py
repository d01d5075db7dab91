"""Extensive-form game trees stored as flat arrays.

A :class:`GameTree` is fully enumerated at construction time.  Nodes are
numbered in depth-first preorder, so every parent has a smaller index than its
children; forward passes walk ``tree.order`` and backward passes walk it in
reverse.  Edges of a node are contiguous (``edge_start[n] .. edge_start[n] +
edge_count[n]``) and, for decision nodes, edge ``edge_start[n] + a`` is action
``a`` of the node's information set.

Players are numbered 0 and 1.  Chance is :data:`CHANCE`.  Payoffs live on
edges as a ``(u0, u1)`` pair; only terminal-leading edges are expected to
carry nonzero values.

Information sets get dense global ids: player 0's sets first, then player
1's, each in order of first encounter.  Per-player dense ids are
``gid - tree.info_base[player]``.
"""

from __future__ import annotations

from collections import namedtuple
from dataclasses import dataclass
from typing import Hashable, Protocol, Sequence

import numpy as np

CHANCE = -1
TERMINAL = -2

KIND_TERMINAL = 0
KIND_CHANCE = 1
KIND_DECISION = 2

_PROB_TOL = 1e-12


class GameError(ValueError):
    """Raised for malformed games or unsupported game names."""


# Flat view handed to the numba kernels.
TreeArrays = namedtuple(
    "TreeArrays",
    [
        "order",
        "kind",
        "player",
        "infoset",
        "edge_start",
        "edge_count",
        "edge_child",
        "edge_payoff",
        "edge_prob",
        "info_player",
        "info_offset",
        "info_nactions",
        "info_parent_action",
        "info_parent",
        "info_seq_len",
    ],
)


@dataclass(frozen=True)
class Decision:
    player: int
    infoset: Hashable
    actions: tuple  # (label, child index, payoff increment)


@dataclass(frozen=True)
class Chance:
    outcomes: tuple  # (probability, child index, payoff increment)


@dataclass(frozen=True)
class Terminal:
    pass


@dataclass(frozen=True)
class Node:
    kind: Decision | Chance | Terminal
    depth: int


@dataclass(frozen=True)
class InfoSet:
    id: int
    player: int
    local_id: int
    actions: int
    labels: tuple
    member_histories: tuple
    own_sequence: tuple  # ((infoset gid, action index), ...) from the root
    key: Hashable = None


class GameState(Protocol):
    """What :func:`build_tree` needs from a game implementation."""

    def current_player(self) -> int: ...

    def legal_actions(self) -> Sequence[Hashable]: ...

    def chance_outcomes(self) -> Sequence[tuple[Hashable, float]]: ...

    def child(self, action: Hashable) -> "GameState": ...

    def returns(self) -> tuple[float, float]: ...

    def infoset_key(self) -> Hashable: ...


def _as_pair(payoff) -> tuple[float, float]:
    if np.ndim(payoff) == 0:
        return float(payoff), -float(payoff)
    u0, u1 = payoff
    return float(u0), float(u1)


class GameTree:
    """Immutable enumerated game tree.

    Construct with :func:`build_tree` (from a game-state object) or
    :meth:`GameTree.from_nodes` (hand-built trees, used for micro games and
    for exercising :func:`validate`).
    """

    def __init__(
        self,
        *,
        name: str,
        kind,
        player,
        info_key,
        parent,
        depth,
        edge_start,
        edge_count,
        edge_child,
        edge_payoff,
        edge_prob,
        edge_label,
        order=None,
        root: int = 0,
    ):
        self.name = name
        self.root = root
        self.num_players = 2
        n = len(kind)
        self.kind = np.asarray(kind, dtype=np.int8)
        self.player = np.asarray(player, dtype=np.int32)
        self.parent = np.asarray(parent, dtype=np.int32)
        self.depth = np.asarray(depth, dtype=np.int32)
        self.edge_start = np.asarray(edge_start, dtype=np.int32)
        self.edge_count = np.asarray(edge_count, dtype=np.int32)
        self.edge_child = np.asarray(edge_child, dtype=np.int32)
        self.edge_payoff = np.asarray(edge_payoff, dtype=np.float64).reshape(-1, 2)
        self.edge_prob = np.asarray(edge_prob, dtype=np.float64)
        self.edge_label = list(edge_label)
        self.order = (
            np.arange(n, dtype=np.int32) if order is None else np.asarray(order, dtype=np.int32)
        )
        self._assign_infosets(list(info_key))
        self.payoff_bound = float(np.abs(self.edge_payoff).max()) if len(self.edge_payoff) else 0.0
        self.max_depth = int(self.depth.max()) if n else 0
        self.arrays = TreeArrays(
            self.order,
            self.kind,
            self.player,
            self.node_infoset,
            self.edge_start,
            self.edge_count,
            self.edge_child,
            self.edge_payoff,
            self.edge_prob,
            self.info_player,
            self.info_offset,
            self.info_nactions,
            self.info_parent_action,
            self.info_parent,
            self.info_seq_len,
        )

    # -- construction helpers -------------------------------------------------

    def _assign_infosets(self, info_key):
        local: list[dict] = [{}, {}]
        first_member: list[list[int]] = [[], []]
        node_local = [-1] * len(self.kind)
        kinds, players = self.kind.tolist(), self.player.tolist()
        for n in self.order.tolist():
            if kinds[n] != KIND_DECISION:
                continue
            p = players[n]
            if p not in (0, 1):
                raise GameError(f"node {n}: decision player must be 0 or 1, got {p}")
            ids = local[p]
            key = info_key[n]
            if key not in ids:
                ids[key] = len(ids)
                first_member[p].append(n)
            node_local[n] = ids[key]
        node_local = np.array(node_local, dtype=np.int64)
        self.info_base = (0, len(local[0]))
        self.num_infosets = len(local[0]) + len(local[1])
        node_gid = np.where(
            node_local >= 0, node_local + np.where(self.player == 1, self.info_base[1], 0), -1
        )
        self.node_infoset = node_gid.astype(np.int32)

        heads = first_member[0] + first_member[1]
        keys = [info_key[h] for h in heads]
        self.info_player = np.array([self.player[h] for h in heads], dtype=np.int32)
        self.info_nactions = np.array([self.edge_count[h] for h in heads], dtype=np.int32)
        self.info_offset = np.zeros(self.num_infosets, dtype=np.int32)
        if self.num_infosets:
            self.info_offset[1:] = np.cumsum(self.info_nactions)[:-1]
        self.num_actions_total = int(self.info_nactions.sum())

        # Flat index of each player's most recent own action on the path to
        # every node (-1 before the player's first move).
        n = len(self.kind)
        self.parent_slot = np.full(n, -1, dtype=np.int64)
        self.parent_slot[self.edge_child] = np.arange(len(self.edge_child))
        last = np.full((2, n), -1, dtype=np.int64)
        kind, plr, gid = self.kind.tolist(), self.player.tolist(), self.node_infoset.tolist()
        start, count = self.edge_start.tolist(), self.edge_count.tolist()
        child, offset = self.edge_child.tolist(), self.info_offset.tolist()
        l0, l1 = last[0].tolist(), last[1].tolist()
        for v in self.order.tolist():
            s = start[v]
            for k in range(s, s + count[v]):
                w = child[k]
                l0[w], l1[w] = l0[v], l1[v]
                if kind[v] == KIND_DECISION:
                    flat = offset[gid[v]] + (k - s)
                    if plr[v] == 0:
                        l0[w] = flat
                    else:
                        l1[w] = flat
        self.last_own_action = np.array([l0, l1], dtype=np.int64)

        self.info_parent_action = np.array(
            [self.last_own_action[self.info_player[g], h] for g, h in enumerate(heads)],
            dtype=np.int32,
        )
        self.info_seq_len = np.zeros(self.num_infosets, dtype=np.int32)
        self.info_parent = np.full(self.num_infosets, -1, dtype=np.int32)
        for g in range(self.num_infosets):
            pa = self.info_parent_action[g]
            if pa >= 0:
                px = self.action_infoset(pa)
                self.info_parent[g] = px
                self.info_seq_len[g] = self.info_seq_len[px] + 1
        self._info_keys = keys
        self._key_to_gid = {
            (int(self.info_player[g]), k): g for g, k in enumerate(keys)
        }
        self._members = None

    def action_infoset(self, flat: int) -> int:
        """Infoset owning flat action index ``flat``."""
        return int(np.searchsorted(self.info_offset, flat, side="right") - 1)

    @classmethod
    def from_nodes(cls, nodes: Sequence, root: int = 0, name: str = "custom") -> "GameTree":
        """Build a tree from a list of :class:`Decision`/:class:`Chance`/:class:`Terminal`.

        Child references are list indices.  The tree is not validated here so
        that malformed inputs can be inspected with :func:`validate`.
        """
        n = len(nodes)
        kind, player, info_key = [], [], []
        edge_start, edge_count = [], []
        e_child, e_pay, e_prob, e_label = [], [], [], []
        for node in nodes:
            edge_start.append(len(e_child))
            if isinstance(node, Terminal):
                kind.append(KIND_TERMINAL)
                player.append(TERMINAL)
                info_key.append(None)
                edge_count.append(0)
            elif isinstance(node, Chance):
                kind.append(KIND_CHANCE)
                player.append(CHANCE)
                info_key.append(None)
                edge_count.append(len(node.outcomes))
                for j, (prob, child, pay) in enumerate(node.outcomes):
                    e_child.append(child)
                    e_pay.append(_as_pair(pay))
                    e_prob.append(float(prob))
                    e_label.append(j)
            elif isinstance(node, Decision):
                kind.append(KIND_DECISION)
                player.append(node.player)
                info_key.append(node.infoset)
                edge_count.append(len(node.actions))
                for label, child, pay in node.actions:
                    e_child.append(child)
                    e_pay.append(_as_pair(pay))
                    e_prob.append(0.0)
                    e_label.append(label)
            else:
                raise GameError(f"unknown node type {type(node).__name__}")

        parent = [-1] * n
        for k, c in enumerate(e_child):
            if not 0 <= c < n:
                raise GameError(f"edge {k} points to missing node {c}")
            if parent[c] == -1:
                parent[c] = _edge_owner(edge_start, edge_count, k)
        # Preorder from the root; nodes outside it (or reached twice) are
        # appended and reported by validate().
        order, seen, depth = [], [False] * n, [0] * n
        stack = [root]
        while stack:
            v = stack.pop()
            if seen[v]:
                continue
            seen[v] = True
            order.append(v)
            s, c = edge_start[v], edge_count[v]
            for k in range(s + c - 1, s - 1, -1):
                w = e_child[k]
                if not seen[w]:
                    depth[w] = depth[v] + 1
                    stack.append(w)
        order += [v for v in range(n) if not seen[v]]
        return cls(
            name=name,
            kind=kind,
            player=player,
            info_key=info_key,
            parent=parent,
            depth=depth,
            edge_start=edge_start,
            edge_count=edge_count,
            edge_child=e_child,
            edge_payoff=e_pay if e_pay else np.zeros((0, 2)),
            edge_prob=e_prob,
            edge_label=e_label,
            order=order,
            root=root,
        )

    # -- queries ----------------------------------------------------------------

    @property
    def num_nodes(self) -> int:
        return len(self.kind)

    def num_infosets_of(self, player: int) -> int:
        if player == 0:
            return self.info_base[1]
        return self.num_infosets - self.info_base[1]

    def infosets_of(self, player: int) -> range:
        if player == 0:
            return range(0, self.info_base[1])
        return range(self.info_base[1], self.num_infosets)

    def infoset_id(self, player: int, key: Hashable) -> int:
        return self._key_to_gid[(player, key)]

    def members(self, x: int) -> tuple:
        if self._members is None:
            groups: list[list[int]] = [[] for _ in range(self.num_infosets)]
            gid = self.node_infoset.tolist()
            for n in self.order.tolist():
                if gid[n] >= 0:
                    groups[gid[n]].append(n)
            self._members = [tuple(m) for m in groups]
        return self._members[x]

    def own_sequence(self, x: int) -> tuple:
        seq = []
        flat = int(self.info_parent_action[x])
        while flat >= 0:
            px = self.action_infoset(flat)
            seq.append((px, flat - int(self.info_offset[px])))
            flat = int(self.info_parent_action[px])
        return tuple(reversed(seq))

    def infoset(self, x: int) -> InfoSet:
        p = int(self.info_player[x])
        head = self.members(x)[0]
        s = self.edge_start[head]
        labels = tuple(self.edge_label[s : s + self.edge_count[head]])
        return InfoSet(
            id=x,
            player=p,
            local_id=x - self.info_base[p],
            actions=int(self.info_nactions[x]),
            labels=labels,
            member_histories=self.members(x),
            own_sequence=self.own_sequence(x),
            key=self._info_keys[x],
        )

    @property
    def infosets(self) -> tuple[list[InfoSet], list[InfoSet]]:
        return (
            [self.infoset(x) for x in self.infosets_of(0)],
            [self.infoset(x) for x in self.infosets_of(1)],
        )

    def node(self, n: int) -> Node:
        s, c = int(self.edge_start[n]), int(self.edge_count[n])
        k = self.kind[n]
        edges = range(s, s + c)
        if k == KIND_TERMINAL:
            body = Terminal()
        elif k == KIND_CHANCE:
            body = Chance(
                tuple(
                    (float(self.edge_prob[e]), int(self.edge_child[e]), tuple(self.edge_payoff[e]))
                    for e in edges
                )
            )
        else:
            body = Decision(
                int(self.player[n]),
                int(self.node_infoset[n]),
                tuple(
                    (self.edge_label[e], int(self.edge_child[e]), tuple(self.edge_payoff[e]))
                    for e in edges
                ),
            )
        return Node(body, int(self.depth[n]))

    def children(self, n: int) -> np.ndarray:
        s = self.edge_start[n]
        return self.edge_child[s : s + self.edge_count[n]]

    def action_labels(self, x: int) -> tuple:
        return self.infoset(x).labels

    def __repr__(self) -> str:
        return (
            f"GameTree({self.name!r}, nodes={self.num_nodes}, "
            f"infosets={self.num_infosets_of(0)}+{self.num_infosets_of(1)})"
        )


def _edge_owner(edge_start, edge_count, k):
    # edge_start is nondecreasing by construction
    lo, hi = 0, len(edge_start) - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if edge_start[mid] <= k:
            lo = mid
        else:
            hi = mid - 1
    while edge_count[lo] == 0 or k >= edge_start[lo] + edge_count[lo]:
        lo -= 1
    return lo


def build_tree(root: GameState, name: str = "") -> GameTree:
    """Enumerate every history reachable from ``root`` into a :class:`GameTree`."""
    kind: list[int] = []
    player: list[int] = []
    info_key: list = []
    parent: list[int] = []
    depth: list[int] = []
    edge_start: list[int] = []
    edge_count: list[int] = []
    e_child: list[int] = []
    e_pay: list[tuple[float, float]] = []
    e_prob: list[float] = []
    e_label: list = []
    zero = (0.0, 0.0)

    def visit(state, d, par) -> int:
        n = len(kind)
        parent.append(par)
        depth.append(d)
        edge_start.append(len(e_child))
        cp = state.current_player()
        if cp == TERMINAL:
            kind.append(KIND_TERMINAL)
            player.append(TERMINAL)
            info_key.append(None)
            edge_count.append(0)
            return n
        if cp == CHANCE:
            kind.append(KIND_CHANCE)
            info_key.append(None)
            branches = list(state.chance_outcomes())
        else:
            kind.append(KIND_DECISION)
            info_key.append(state.infoset_key())
            branches = [(a, 0.0) for a in state.legal_actions()]
        player.append(cp)
        m = len(branches)
        edge_count.append(m)
        k0 = len(e_child)
        e_child.extend([-1] * m)
        e_pay.extend([zero] * m)
        e_prob.extend(p for _, p in branches)
        e_label.extend(a for a, _ in branches)
        for j, (a, _) in enumerate(branches):
            nxt = state.child(a)
            if nxt.current_player() == TERMINAL:
                e_pay[k0 + j] = tuple(nxt.returns())
            e_child[k0 + j] = visit(nxt, d + 1, n)
        return n

    visit(root, 0, -1)
    return GameTree(
        name=name,
        kind=kind,
        player=player,
        info_key=info_key,
        parent=parent,
        depth=depth,
        edge_start=edge_start,
        edge_count=edge_count,
        edge_child=e_child,
        edge_payoff=e_pay,
        edge_prob=e_prob,
        edge_label=e_label,
    )


def _probs_of(profile) -> np.ndarray:
    return profile.probs if hasattr(profile, "probs") else np.asarray(profile)


def reach_probability(tree: GameTree, profile, h: int, player: int | None = None):
    """Split the reach probability of history ``h`` into ``(own, other)``.

    ``own`` is the product of ``player``'s action probabilities on the path;
    ``other`` collects the opponent's and chance's.  ``player`` defaults to the
    player acting at ``h`` (player 0 for chance and terminal nodes).
    """
    probs = _probs_of(profile)
    if player is None:
        player = int(tree.player[h]) if tree.kind[h] == KIND_DECISION else 0
    own = other = 1.0
    child = h
    node = int(tree.parent[h])
    while node >= 0:
        k = int(tree.parent_slot[child])
        if tree.kind[node] == KIND_CHANCE:
            other *= tree.edge_prob[k]
        else:
            x = tree.node_infoset[node]
            p = probs[tree.info_offset[x] + (k - tree.edge_start[node])]
            if tree.player[node] == player:
                own *= p
            else:
                other *= p
        child = node
        node = int(tree.parent[node])
    return own, other


def infoset_reach(tree: GameTree, profile, x: int):
    """``(own reach of x, sum of opponent+chance reach over members of x)``."""
    player = int(tree.info_player[x])
    own = None
    other_sum = 0.0
    for h in tree.members(x):
        o, r = reach_probability(tree, profile, h, player)
        if own is None:
            own = o
        other_sum += r
    return own, other_sum


def validate(tree: GameTree) -> list[str]:
    """Return every invariant violation found in ``tree`` (empty when valid)."""
    out: list[str] = []
    n = tree.num_nodes
    indeg = np.zeros(n, dtype=np.int64)
    np.add.at(indeg, tree.edge_child, 1)
    expected = np.ones(n, dtype=np.int64)
    expected[tree.root] = 0
    for v in np.flatnonzero(indeg != expected):
        out.append(f"node {v}: tree structure: {indeg[v]} parents (expected {expected[v]})")
    if len(tree.order) != n or len(set(tree.order.tolist())) != n:
        out.append("tree structure: node order is not a permutation")

    owner = np.repeat(np.arange(n), tree.edge_count)
    slot = np.arange(len(tree.edge_child)) - tree.edge_start[owner]
    chance = np.flatnonzero(tree.kind == KIND_CHANCE)
    if len(chance):
        sums = np.zeros(n)
        np.add.at(sums, owner, tree.edge_prob)
        negative = np.zeros(n, dtype=bool)
        np.logical_or.at(negative, owner, tree.edge_prob < 0)
        for v in chance[(np.abs(sums[chance] - 1.0) > _PROB_TOL) | negative[chance]]:
            out.append(f"node {v}: chance normalization: probabilities sum to {sums[v]!r}")
    for v in np.flatnonzero((tree.kind == KIND_DECISION) & (tree.edge_count < 1)):
        out.append(f"node {v}: decision node has no actions")
    pay = tree.edge_payoff
    for e in np.flatnonzero(np.abs(pay.sum(axis=1)) > _PROB_TOL):
        out.append(f"node {owner[e]} edge {slot[e]}: zero-sum: payoffs {tuple(pay[e])}")
    inner = tree.kind[tree.edge_child] != KIND_TERMINAL
    for e in np.flatnonzero(inner & (pay != 0.0).any(axis=1)):
        out.append(f"node {owner[e]} edge {slot[e]}: payoff on a non-terminal edge")

    start, count = tree.edge_start.tolist(), tree.edge_count.tolist()
    last = tree.last_own_action.tolist()
    for x in range(tree.num_infosets):
        members = tree.members(x)
        head = members[0]
        head_labels = tree.edge_label[start[head] : start[head] + count[head]]
        p = int(tree.info_player[x])
        head_prev = last[p][head]
        for h in members[1:]:
            labels = tree.edge_label[start[h] : start[h] + count[h]]
            if labels != head_labels:
                out.append(
                    f"infoset {x}: perfect recall/action set: node {h} has actions "
                    f"{list(labels)} but node {head} has {list(head_labels)}"
                )
                continue
            if last[p][h] != head_prev:
                out.append(
                    f"infoset {x}: perfect recall/own sequence: node {h} differs from node {head}"
                )
    return out
