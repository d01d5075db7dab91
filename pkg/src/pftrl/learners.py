"""Iteration engines: FTRL / perturbed FTRL with anchor updates, CFR and CFR+.

Every iteration both players estimate their (perturbed) counterfactual values
against the same current profile, then update the infosets they visited.  The
inner loop runs inside numba in chunks of iterations; the Python side only
refills random draws and calls evaluation hooks between chunks.

CFR conventions: vanilla CFR updates both players simultaneously and averages
with reach weights; CFR+ alternates players, clamps regrets at zero and weights
iteration ``t`` by ``t`` in the average.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numba
import numpy as np

from .game_core import GameTree
from .metrics import ExploitRecord, nash_conv
from .sampling import (
    SCHEME_EXTERNAL,
    SCHEME_FULL,
    SCHEME_OUTCOME,
    SamplingScheme,
    UniformStream,
    external_kernel,
    outcome_kernel,
)
from .strategy import AnchorStore, AverageAccumulator, BehaviorProfile, accumulate_average_kernel, uniform_profile
from .values_exact import D_KL, D_NONE, D_RKL, DegenerateSupportError, full_walk_kernel

ALGORITHMS = ("ftrl", "pftrl-kl", "pftrl-rkl", "cfr", "cfr-plus")
_DIVERGENCE = {"ftrl": D_NONE, "pftrl-kl": D_KL, "pftrl-rkl": D_RKL}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class LearnerConfig:
    algorithm: str = "pftrl-rkl"
    eta: float = 1e-4
    mu: float = 0.1
    anchor_interval: float = 100_000
    scheme: SamplingScheme = SamplingScheme.outcome(1.0)
    iterations: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        # Plain FTRL has no perturbation, whatever strength was passed in.
        if self.algorithm == "ftrl":
            object.__setattr__(self, "mu", 0.0)
        if not (self.eta > 0 and math.isfinite(self.eta)):
            raise ConfigError(f"eta must be positive and finite, got {self.eta}")
        if not (self.mu >= 0 and math.isfinite(self.mu)):
            raise ConfigError(f"mu must be nonnegative and finite, got {self.mu}")
        ti = self.anchor_interval
        if not (ti == math.inf or (ti >= 1 and int(ti) == ti)):
            raise ConfigError(f"anchor interval must be a positive integer or inf, got {ti}")
        if int(self.iterations) != self.iterations or self.iterations < 0:
            raise ConfigError(f"iterations must be a nonnegative integer, got {self.iterations}")
        if not isinstance(self.scheme, SamplingScheme):
            raise ConfigError("scheme must be a SamplingScheme")

    @property
    def is_cfr(self) -> bool:
        return self.algorithm.startswith("cfr")

    @property
    def divergence(self) -> int:
        return _DIVERGENCE.get(self.algorithm, D_NONE)

    def with_(self, **kw) -> "LearnerConfig":
        return replace(self, **kw)


def ftrl_strategy(cumulative, eta: float) -> np.ndarray:
    """Exponential weights ``softmax(eta * cumulative)``, computed without overflow."""
    z = eta * np.asarray(cumulative, dtype=np.float64)
    z = np.exp(z - z.max())
    return z / z.sum()


def regret_matching(regrets) -> np.ndarray:
    pos = np.maximum(np.asarray(regrets, dtype=np.float64), 0.0)
    total = pos.sum()
    if total <= 0.0:
        return np.full(len(pos), 1.0 / len(pos))
    return pos / total


@numba.njit(cache=True, error_model="numpy")
def _softmax_update(t, x, S, probs, eta):
    o = t.info_offset[x]
    c = t.info_nactions[x]
    m = -np.inf
    for a in range(c):
        z = eta * S[o + a]
        if z > m:
            m = z
    total = 0.0
    for a in range(c):
        e = np.exp(eta * S[o + a] - m)
        probs[o + a] = e
        total += e
    for a in range(c):
        probs[o + a] /= total


@numba.njit(cache=True, error_model="numpy")
def _rm_update(t, x, R, probs):
    o = t.info_offset[x]
    c = t.info_nactions[x]
    total = 0.0
    for a in range(c):
        if R[o + a] > 0.0:
            total += R[o + a]
    for a in range(c):
        probs[o + a] = (R[o + a] / total if R[o + a] > 0.0 else 0.0) if total > 0.0 else 1.0 / c


class _Buffers:
    """Scratch arrays shared by the chunk kernels."""

    def __init__(self, tree: GameTree):
        n, A, X = tree.num_nodes, tree.num_actions_total, tree.num_infosets
        d = tree.max_depth + 1
        self.vals = np.zeros(A)
        self.qd = np.zeros(A)
        self.node_u = np.empty(n)
        self.node_d = np.empty(n)
        self.reach = np.empty(n)
        self.info_reach = np.empty(X)
        self.forced = np.full(n, -1, dtype=np.int64)
        self.path_node = np.empty(d, dtype=np.int64)
        self.path_act = np.empty(d, dtype=np.int64)
        self.path_prob = np.empty(d)
        self.path_rho = np.empty(d)
        self.seen = np.zeros(X, dtype=np.bool_)
        self.vis = np.empty((2, X + 1), dtype=np.int64)
        self.vis_node = np.empty(X + 1, dtype=np.int64)


@numba.njit(cache=True, error_model="numpy")
def _estimate(t, probs, sigma, mu, kind, player, scheme, eps, unif, cursor, b_vals, b_qd,
              node_u, node_d, reach, forced, path_node, path_act, path_prob, path_rho,
              seen, vis, vis_node):
    """Fill ``vals`` for ``player``; returns (number of visited infosets, cursor).

    Visited infoset ids are written to ``vis``.
    """
    n = 0
    if scheme == SCHEME_FULL:
        full_walk_kernel(t, probs, sigma, mu, kind, player, b_vals, node_u, node_d, reach)
        for x in range(len(t.info_offset)):
            if t.info_player[x] == player:
                vis[n] = x
                n += 1
    elif scheme == SCHEME_OUTCOME:
        _, n, cursor = outcome_kernel(t, probs, sigma, mu, kind, player, eps, unif, cursor, forced,
                                      path_node, path_act, path_prob, path_rho, b_vals, b_qd, vis, vis_node)
    else:
        n, cursor = external_kernel(t, probs, sigma, mu, kind, player, unif, cursor, forced,
                                    b_vals, b_qd, seen, vis, vis_node)
    return n, cursor


@numba.njit(cache=True, error_model="numpy")
def pftrl_chunk(t, S, probs, sigma, kappa, t_sigma, w_sum, w_strat, info_reach,
                eta, mu, kind, scheme, eps, unif, cursor, n_iters, need,
                vals, qd, node_u, node_d, reach, forced, path_node, path_act, path_prob,
                path_rho, seen, vis, vis_node):
    """Run up to ``n_iters`` iterations; stops early when draws or values run out.

    Returns ``(iterations done, cursor, status)``; status 1 flags a non-finite
    cumulative value.
    """
    done = 0
    status = 0
    nvis = np.zeros(2, dtype=np.int64)
    while status == 0 and done < n_iters and cursor + need <= len(unif):
        accumulate_average_kernel(t, probs, w_sum, w_strat, 1.0, -1, info_reach)
        for p in range(2):
            n, cursor = _estimate(t, probs, sigma, mu, kind, p, scheme, eps, unif, cursor, vals, qd,
                                  node_u, node_d, reach, forced, path_node, path_act, path_prob,
                                  path_rho, seen, vis[p], vis_node)
            nvis[p] = n
        for p in range(2):
            for j in range(nvis[p]):
                x = vis[p, j]
                o = t.info_offset[x]
                for a in range(t.info_nactions[x]):
                    S[o + a] += vals[o + a]
                    if not np.isfinite(S[o + a]):
                        status = 1
                _softmax_update(t, x, S, probs, eta)
                if t_sigma > 0:
                    kappa[x] += 1
                    if kappa[x] == t_sigma:
                        for a in range(t.info_nactions[x]):
                            sigma[o + a] = probs[o + a]
                        kappa[x] = 0
        done += 1
    return done, cursor, status


@numba.njit(cache=True, error_model="numpy")
def cfr_chunk(t, R, probs, w_sum, w_strat, info_reach, plus, first_iter, scheme, eps,
              unif, cursor, n_iters, need, vals, qd, node_u, node_d, reach, forced,
              path_node, path_act, path_prob, path_rho, seen, vis, vis_node):
    done = 0
    nvis = np.zeros(2, dtype=np.int64)
    while done < n_iters and cursor + need <= len(unif):
        it = first_iter + done
        if plus:
            for p in range(2):
                accumulate_average_kernel(t, probs, w_sum, w_strat, float(it), p, info_reach)
                n, cursor = _estimate(t, probs, probs, 0.0, D_NONE, p, scheme, eps, unif, cursor, vals, qd,
                                      node_u, node_d, reach, forced, path_node, path_act, path_prob,
                                      path_rho, seen, vis[p], vis_node)
                for j in range(n):
                    x = vis[p, j]
                    o = t.info_offset[x]
                    c = t.info_nactions[x]
                    ev = 0.0
                    for a in range(c):
                        ev += probs[o + a] * vals[o + a]
                    for a in range(c):
                        R[o + a] = max(R[o + a] + vals[o + a] - ev, 0.0)
                    _rm_update(t, x, R, probs)
        else:
            accumulate_average_kernel(t, probs, w_sum, w_strat, 1.0, -1, info_reach)
            for p in range(2):
                n, cursor = _estimate(t, probs, probs, 0.0, D_NONE, p, scheme, eps, unif, cursor, vals, qd,
                                      node_u, node_d, reach, forced, path_node, path_act, path_prob,
                                      path_rho, seen, vis[p], vis_node)
                nvis[p] = n
            for p in range(2):
                for j in range(nvis[p]):
                    x = vis[p, j]
                    o = t.info_offset[x]
                    c = t.info_nactions[x]
                    ev = 0.0
                    for a in range(c):
                        ev += probs[o + a] * vals[o + a]
                    for a in range(c):
                        R[o + a] += vals[o + a] - ev
                    _rm_update(t, x, R, probs)
        done += 1
    return done, cursor, 0


class Solver:
    """Mutable learner state for one run: cumulative table, profile, anchor, average."""

    def __init__(self, tree: GameTree, config: LearnerConfig):
        self.tree = tree
        self.config = config
        self.profile = uniform_profile(tree)
        # Cumulative values (FTRL family) or cumulative regrets (CFR family).
        self.cumulative = np.zeros(tree.num_actions_total)
        self.anchors = AnchorStore(uniform_profile(tree), config.anchor_interval)
        self.average = AverageAccumulator(tree)
        self.iteration = 0
        scheme = config.scheme
        if scheme.code == SCHEME_OUTCOME:
            self._need = 2 * (tree.max_depth + 1)
        elif scheme.code == SCHEME_EXTERNAL:
            self._need = 2 * tree.num_nodes
        else:
            self._need = 0
        self._stream = UniformStream(config.seed, max(1 << 16, 4 * self._need))
        self._buf = _Buffers(tree)

    def step(self, n: int = 1) -> None:
        """Advance ``n`` iterations."""
        cfg, t, b = self.config, self.tree.arrays, self._buf
        remaining = int(n)
        while remaining > 0:
            self._stream.ensure(self._need)
            s = self._stream
            if cfg.is_cfr:
                done, s.pos, status = cfr_chunk(
                    t, self.cumulative, self.profile.probs, self.average.weight_sum,
                    self.average.weighted_strategy_sum, b.info_reach, cfg.algorithm == "cfr-plus",
                    self.iteration + 1, cfg.scheme.code, cfg.scheme.epsilon, s.buf, s.pos, remaining,
                    self._need, b.vals, b.qd, b.node_u, b.node_d, b.reach, b.forced, b.path_node,
                    b.path_act, b.path_prob, b.path_rho, b.seen, b.vis, b.vis_node,
                )
            else:
                done, s.pos, status = pftrl_chunk(
                    t, self.cumulative, self.profile.probs, self.anchors.sigma.probs,
                    self.anchors.visit_counts, self.anchors.interval_code, self.average.weight_sum,
                    self.average.weighted_strategy_sum, b.info_reach, cfg.eta, cfg.mu, cfg.divergence,
                    cfg.scheme.code, cfg.scheme.epsilon, s.buf, s.pos, remaining, self._need,
                    b.vals, b.qd, b.node_u, b.node_d, b.reach, b.forced, b.path_node, b.path_act,
                    b.path_prob, b.path_rho, b.seen, b.vis, b.vis_node,
                )
            self.iteration += done
            remaining -= done
            if status:
                raise DegenerateSupportError(
                    f"non-finite cumulative value at iteration {self.iteration + 1}"
                )

    def last_iterate(self) -> BehaviorProfile:
        return self.profile.copy()

    def average_iterate(self) -> BehaviorProfile:
        return self.average.average()


def pftrl_step(solver: Solver) -> Solver:
    if solver.config.is_cfr:
        raise ConfigError("pftrl_step needs an FTRL-family configuration")
    solver.step(1)
    return solver


def cfr_step(solver: Solver) -> Solver:
    if not solver.config.is_cfr:
        raise ConfigError("cfr_step needs a CFR-family configuration")
    solver.step(1)
    return solver


def evaluation_points(iterations: int, every: int | None) -> list[int]:
    """Iterations at which to evaluate: 0, every ``every`` iterations, and the last one."""
    every = max(1, iterations // 200) if every is None else int(every)
    if every < 1:
        raise ConfigError(f"evaluation interval must be positive, got {every}")
    points = list(range(0, iterations + 1, every))
    if points[-1] != iterations:
        points.append(iterations)
    return points


def evaluate(solver: Solver) -> ExploitRecord:
    """Exploitability of the last and average iterates, on the reporting scale.

    The reporting scale is half of the summed best-response gains, i.e. the
    mean gain per player.
    """
    tree = solver.tree
    return ExploitRecord(
        solver.iteration,
        0.5 * nash_conv(tree, solver.profile),
        0.5 * nash_conv(tree, solver.average_iterate()),
    )


def run(config: LearnerConfig, tree: GameTree, eval_every: int | None = None,
        on_record: Callable[[ExploitRecord], None] | None = None) -> list[ExploitRecord]:
    """Run ``config.iterations`` iterations, evaluating at a fixed cadence."""
    solver = Solver(tree, config)
    log = []
    for point in evaluation_points(config.iterations, eval_every):
        solver.step(point - solver.iteration)
        rec = evaluate(solver)
        log.append(rec)
        if on_record is not None:
            on_record(rec)
    return log
