"""Monte Carlo estimates of perturbed counterfactual values.

Outcome sampling follows one root-to-terminal path: the traverser samples its
own actions from ``(1 - eps) * pi + eps / |A|``, opponents and chance sample
from their actual distributions.  At each own node the sampled action's
continuation is importance-weighted by its sampling probability, every action
receives the immediate perturbation ``mu * d``, and the whole vector is divided
by the traverser's sampling reach before the node.

External sampling samples one action at every opponent and chance node and
traverses every own action, so no importance weights appear.

Both kernels take a ``forced`` array (one entry per node, -1 meaning "draw")
so exhaustive enumeration can drive exactly the same code along chosen paths.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .game_core import CHANCE, KIND_CHANCE, KIND_TERMINAL, GameTree
from .strategy import BehaviorProfile
from .values_exact import DivergenceKind, ValueTable, _require_interior, d_term

SCHEME_FULL = 0
SCHEME_OUTCOME = 1
SCHEME_EXTERNAL = 2


@dataclass(frozen=True)
class SamplingScheme:
    tag: str = "full"
    epsilon: float = 1.0

    def __post_init__(self):
        if self.tag not in ("full", "outcome", "external"):
            raise ValueError(f"unknown sampling scheme {self.tag!r}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")

    @classmethod
    def full(cls) -> "SamplingScheme":
        return cls("full")

    @classmethod
    def outcome(cls, epsilon: float = 1.0) -> "SamplingScheme":
        return cls("outcome", epsilon)

    @classmethod
    def external(cls) -> "SamplingScheme":
        return cls("external")

    @property
    def code(self) -> int:
        return {"full": SCHEME_FULL, "outcome": SCHEME_OUTCOME, "external": SCHEME_EXTERNAL}[self.tag]


@dataclass(frozen=True)
class Step:
    node: int
    actor: int  # player id, or CHANCE
    action: int
    prob: float


@dataclass
class Trajectory:
    steps: list[Step]
    payoff: tuple[float, float]

    @property
    def probability(self) -> float:
        return trajectory_probability(self)


def trajectory_probability(traj: Trajectory) -> float:
    p = 1.0
    for step in traj.steps:
        p *= step.prob
    return p


@dataclass
class EstimateResult:
    """Estimated values on the visited own infosets.

    ``delta_tilde`` maps each visited own node to the estimated cumulative
    perturbation of its actions; ``trajectory`` is set under outcome sampling.
    """

    values: ValueTable
    visited_nodes: list[int]
    delta_tilde: dict[int, np.ndarray] = field(default_factory=dict)
    trajectory: Trajectory | None = None


class UniformStream:
    """Buffered uniform draws whose sequence does not depend on buffer size."""

    def __init__(self, seed, size: int = 1 << 16):
        self.rng = np.random.default_rng(seed)
        self.buf = self.rng.random(max(size, 1))
        self.pos = 0

    def ensure(self, need: int) -> None:
        if self.pos + need <= len(self.buf):
            return
        rest = self.buf[self.pos :]
        size = max(len(self.buf), 2 * need)
        self.buf = np.concatenate([rest, self.rng.random(size - len(rest))])
        self.pos = 0


@numba.njit(cache=True, error_model="numpy")
def _sampling_prob(t, probs, eps, traverser, v, j):
    if t.kind[v] == KIND_CHANCE:
        p = t.edge_prob[t.edge_start[v] + j]
    else:
        p = probs[t.info_offset[t.infoset[v]] + j]
        if t.player[v] == traverser:
            p = (1.0 - eps) * p + eps / t.edge_count[v]
    return p


# Written with a single exit: numba compiles early returns from inside the
# loop (through nested helpers) into much slower code.
@numba.njit(cache=True, error_model="numpy")
def _choose(t, probs, eps, traverser, v, u):
    """Sample an action at ``v`` from uniform ``u``; returns (action, prob)."""
    s = t.edge_start[v]
    c = t.edge_count[v]
    chance = t.kind[v] == KIND_CHANCE
    own = (not chance) and t.player[v] == traverser
    o = 0 if chance else t.info_offset[t.infoset[v]]
    acc = 0.0
    a = -1
    pa = 0.0
    for j in range(c):
        if chance:
            pj = t.edge_prob[s + j]
        else:
            pj = probs[o + j]
            if own:
                pj = (1.0 - eps) * pj + eps / c
        if pj > 0.0:
            a = j
            pa = pj
            acc += pj
            if u < acc:
                break
    return a, pa


@numba.njit(cache=True, error_model="numpy")
def outcome_kernel(t, probs, sigma, mu, kind, player, eps, unif, cursor, forced,
                   path_node, path_act, path_prob, path_rho, vals, qd_out, vis, vis_node):
    """One outcome-sampling traversal for ``player``.

    Returns ``(path length, number of visited own infosets, new cursor)``.
    ``vals``/``qd_out`` are written at the visited infosets' action slots.
    """
    v = t.order[0]
    depth = 0
    rho = 1.0
    while t.kind[v] != KIND_TERMINAL:
        f = forced[v]
        if f >= 0:
            a = f
            pa = _sampling_prob(t, probs, eps, player, v, a)
        else:
            a, pa = _choose(t, probs, eps, player, v, unif[cursor])
            cursor += 1
        path_node[depth] = v
        path_act[depth] = a
        path_prob[depth] = pa
        path_rho[depth] = rho
        if t.kind[v] != KIND_CHANCE and t.player[v] == player:
            rho *= pa
        depth += 1
        v = t.edge_child[t.edge_start[v] + a]

    ret_u = 0.0
    ret_d = 0.0
    nvis = 0
    for k in range(depth - 1, -1, -1):
        v = path_node[k]
        a = path_act[k]
        s = t.edge_start[v]
        u = t.edge_payoff[s + a, player]
        if t.kind[v] == KIND_CHANCE or t.player[v] != player:
            ret_u += u
            continue
        x = t.infoset[v]
        o = t.info_offset[x]
        pa = path_prob[k]
        r = path_rho[k]
        su = 0.0
        sd = 0.0
        for b in range(t.edge_count[v]):
            w = probs[o + b]
            if b == a:
                qu = (ret_u + u) / pa
                qd = ret_d / pa
            else:
                qu = 0.0
                qd = 0.0
            qd += d_term(kind, w, sigma[o + b])
            vals[o + b] = (qu + mu * qd) / r
            qd_out[o + b] = qd
            su += w * qu
            sd += w * qd
        ret_u = su
        ret_d = sd
        vis[nvis] = x
        vis_node[nvis] = v
        nvis += 1
    return depth, nvis, cursor


@numba.njit(cache=True, error_model="numpy")
def _external_rec(t, probs, sigma, mu, kind, player, v, unif, cur, forced,
                  vals, qd_out, seen, vis, vis_node, nvis):
    if t.kind[v] == KIND_TERMINAL:
        return 0.0, 0.0
    s = t.edge_start[v]
    if t.kind[v] == KIND_CHANCE or t.player[v] != player:
        f = forced[v]
        if f >= 0:
            a = f
        else:
            a, _ = _choose(t, probs, 0.0, player, v, unif[cur[0]])
            cur[0] += 1
        cu, cd = _external_rec(t, probs, sigma, mu, kind, player, t.edge_child[s + a],
                               unif, cur, forced, vals, qd_out, seen, vis, vis_node, nvis)
        return cu + t.edge_payoff[s + a, player], cd
    x = t.infoset[v]
    o = t.info_offset[x]
    c = t.edge_count[v]
    if not seen[x]:
        seen[x] = True
        vis[nvis[0]] = x
        vis_node[nvis[0]] = v
        nvis[0] += 1
        for b in range(c):
            vals[o + b] = 0.0
    su = 0.0
    sd = 0.0
    for b in range(c):
        cu, cd = _external_rec(t, probs, sigma, mu, kind, player, t.edge_child[s + b],
                               unif, cur, forced, vals, qd_out, seen, vis, vis_node, nvis)
        w = probs[o + b]
        qu = cu + t.edge_payoff[s + b, player]
        qd = cd + d_term(kind, w, sigma[o + b])
        vals[o + b] += qu + mu * qd
        qd_out[o + b] = qd
        su += w * qu
        sd += w * qd
    return su, sd


@numba.njit(cache=True, error_model="numpy")
def external_kernel(t, probs, sigma, mu, kind, player, unif, cursor, forced,
                    vals, qd_out, seen, vis, vis_node):
    """One external-sampling traversal; returns ``(visited count, new cursor)``.

    ``seen`` must be all False on entry and is restored before returning.
    """
    cur = np.empty(1, dtype=np.int64)
    cur[0] = cursor
    nvis = np.zeros(1, dtype=np.int64)
    _external_rec(t, probs, sigma, mu, kind, player, t.order[0], unif, cur, forced,
                  vals, qd_out, seen, vis, vis_node, nvis)
    for j in range(nvis[0]):
        seen[vis[j]] = False
    return nvis[0], cur[0]


def _no_forcing(tree: GameTree) -> np.ndarray:
    return np.full(tree.num_nodes, -1, dtype=np.int64)


def _coverage(tree, infosets) -> np.ndarray:
    cov = np.zeros(tree.num_infosets, dtype=bool)
    cov[np.asarray(infosets, dtype=np.int64)] = True
    return cov


def _deltas(tree, nodes, qd):
    out = {}
    for v in nodes:
        x = tree.node_infoset[v]
        o = tree.info_offset[x]
        out[int(v)] = qd[o : o + tree.info_nactions[x]].copy()
    return out


def estimate_outcome(tree, profile, sigma, mu, kind, player, epsilon=1.0, rng=None, forced=None) -> EstimateResult:
    """Outcome-sampling estimate for ``player``.

    ``rng`` is a ``numpy.random.Generator`` (or seed); ``forced`` optionally
    fixes the choice at some nodes (``-1`` entries are drawn).
    """
    kind = DivergenceKind.parse(kind)
    sigma = profile if sigma is None else sigma
    _require_interior(profile, sigma, kind, player)
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    depth = tree.max_depth + 1
    unif = rng.random(depth)
    forced = _no_forcing(tree) if forced is None else np.asarray(forced, dtype=np.int64)
    path_node = np.empty(depth, dtype=np.int64)
    path_act = np.empty(depth, dtype=np.int64)
    path_prob = np.empty(depth)
    path_rho = np.empty(depth)
    vals = np.zeros(tree.num_actions_total)
    qd = np.zeros(tree.num_actions_total)
    vis = np.empty(depth, dtype=np.int64)
    vis_node = np.empty(depth, dtype=np.int64)
    length, nvis, _ = outcome_kernel(
        tree.arrays, profile.probs, sigma.probs, float(mu), kind.code, int(player),
        float(epsilon), unif, 0, forced, path_node, path_act, path_prob, path_rho,
        vals, qd, vis, vis_node,
    )
    steps = []
    for k in range(length):
        v = int(path_node[k])
        actor = CHANCE if tree.kind[v] == KIND_CHANCE else int(tree.player[v])
        steps.append(Step(v, actor, int(path_act[k]), float(path_prob[k])))
    payoff = np.zeros(2)
    for st in steps:
        payoff += tree.edge_payoff[tree.edge_start[st.node] + st.action]
    traj = Trajectory(steps, (float(payoff[0]), float(payoff[1])))
    nodes = vis_node[:nvis].tolist()
    return EstimateResult(ValueTable(tree, vals, _coverage(tree, vis[:nvis])), nodes, _deltas(tree, nodes, qd), traj)


def estimate_external(tree, profile, sigma, mu, kind, player, rng=None, forced=None) -> EstimateResult:
    """External-sampling estimate for ``player`` (all own actions traversed)."""
    kind = DivergenceKind.parse(kind)
    sigma = profile if sigma is None else sigma
    _require_interior(profile, sigma, kind, player)
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    unif = rng.random(tree.num_nodes)
    forced = _no_forcing(tree) if forced is None else np.asarray(forced, dtype=np.int64)
    vals = np.zeros(tree.num_actions_total)
    qd = np.zeros(tree.num_actions_total)
    cap = tree.num_infosets_of(player) + 1
    vis = np.empty(cap, dtype=np.int64)
    vis_node = np.empty(cap, dtype=np.int64)
    seen = np.zeros(tree.num_infosets, dtype=np.bool_)
    nvis, _ = external_kernel(
        tree.arrays, profile.probs, sigma.probs, float(mu), kind.code, int(player),
        unif, 0, forced, vals, qd, seen, vis, vis_node,
    )
    nodes = vis_node[:nvis].tolist()
    return EstimateResult(ValueTable(tree, vals, _coverage(tree, vis[:nvis])), nodes, _deltas(tree, nodes, qd))
