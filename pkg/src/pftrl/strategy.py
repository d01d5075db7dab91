"""Behavior strategies, anchoring strategies and average-iterate accumulation.

Strategies are stored flat: the probability of action ``a`` at infoset ``x``
lives at ``probs[tree.info_offset[x] + a]``.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

import numba
import numpy as np

from .game_core import GameTree

SIMPLEX_TOL = 1e-12


class BehaviorProfile:
    """One probability vector per information set, for both players."""

    def __init__(self, tree: GameTree, probs: np.ndarray):
        probs = np.asarray(probs, dtype=np.float64)
        if probs.shape != (tree.num_actions_total,):
            raise ValueError(
                f"expected {tree.num_actions_total} action probabilities, got {probs.shape}"
            )
        self.tree = tree
        self.probs = probs

    def vector(self, x: int) -> np.ndarray:
        o = self.tree.info_offset[x]
        return self.probs[o : o + self.tree.info_nactions[x]]

    def __getitem__(self, key) -> np.ndarray:
        player, local = key
        return self.vector(self.tree.info_base[player] + local)

    def set(self, x: int, vec) -> None:
        self.vector(x)[:] = vec

    def copy(self) -> "BehaviorProfile":
        return BehaviorProfile(self.tree, self.probs.copy())

    def simplex_violations(self, tol: float = SIMPLEX_TOL) -> list[int]:
        sums = np.add.reduceat(self.probs, self.tree.info_offset) if len(self.probs) else []
        bad = np.flatnonzero(np.abs(np.asarray(sums) - 1.0) > tol).tolist()
        if (self.probs < 0).any():
            owners = np.repeat(np.arange(self.tree.num_infosets), self.tree.info_nactions)
            bad = sorted(set(bad) | set(owners[self.probs < 0].tolist()))
        return bad

    def check(self, tol: float = SIMPLEX_TOL) -> None:
        bad = self.simplex_violations(tol)
        if bad:
            raise ValueError(f"not a simplex at infosets {bad[:10]}")

    def is_interior(self) -> bool:
        return bool((self.probs > 0).all())

    def rows(self):
        tree = self.tree
        for x in range(tree.num_infosets):
            p = int(tree.info_player[x])
            for a, prob in enumerate(self.vector(x)):
                yield p, x - tree.info_base[p], a, float(prob)

    def to_csv(self, path: str | Path | None = None) -> str:
        """Write ``player,infoset,action,prob`` rows; returns the text."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["player", "infoset", "action", "prob"])
        for p, x, a, prob in self.rows():
            w.writerow([p, x, a, format(prob, ".17g")])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, tree: GameTree, source: str | Path) -> "BehaviorProfile":
        text = Path(source).read_text() if isinstance(source, Path) else source
        if "\n" not in text and Path(text).exists():
            text = Path(text).read_text()
        probs = np.full(tree.num_actions_total, np.nan)
        for row in csv.DictReader(io.StringIO(text)):
            x = tree.info_base[int(row["player"])] + int(row["infoset"])
            probs[tree.info_offset[x] + int(row["action"])] = float(row["prob"])
        if np.isnan(probs).any():
            raise ValueError("profile CSV does not cover every action")
        return cls(tree, probs)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BehaviorProfile)
            and other.tree is self.tree
            and np.array_equal(other.probs, self.probs)
        )


def uniform_profile(tree: GameTree) -> BehaviorProfile:
    n = np.repeat(tree.info_nactions, tree.info_nactions).astype(np.float64)
    return BehaviorProfile(tree, 1.0 / n)


def random_profile(tree: GameTree, rng: np.random.Generator, floor: float = 0.0) -> BehaviorProfile:
    """Random interior profile; every probability is at least ``floor``."""
    raw = rng.random(tree.num_actions_total) + 1e-3
    sums = np.add.reduceat(raw, tree.info_offset)
    probs = raw / np.repeat(sums, tree.info_nactions)
    if floor:
        k = np.repeat(tree.info_nactions, tree.info_nactions)
        probs = floor + (1.0 - floor * k) * probs
    return BehaviorProfile(tree, probs)


class AnchorStore:
    """Anchoring strategy with per-infoset visit counters.

    ``update_interval`` may be ``math.inf`` to keep the anchor fixed forever.
    """

    def __init__(self, sigma: BehaviorProfile, update_interval: float = math.inf):
        if not (update_interval == math.inf or (int(update_interval) == update_interval and update_interval >= 1)):
            raise ValueError(f"update interval must be a positive integer or inf, got {update_interval}")
        self.sigma = sigma
        self.update_interval = update_interval
        self.visit_counts = np.zeros(sigma.tree.num_infosets, dtype=np.int64)

    @property
    def interval_code(self) -> int:
        """Interval as the kernels expect it: -1 means never update."""
        return -1 if self.update_interval == math.inf else int(self.update_interval)

    def record_visit_and_maybe_anchor(self, x: int, current) -> bool:
        if self.update_interval == math.inf:
            return False
        self.visit_counts[x] += 1
        if self.visit_counts[x] == self.update_interval:
            self.sigma.set(x, current)
            self.visit_counts[x] = 0
            return True
        return False


class AverageAccumulator:
    """Reach-weighted running average of behavior strategies."""

    def __init__(self, tree: GameTree):
        self.tree = tree
        self.weight_sum = np.zeros(tree.num_infosets)
        self.weighted_strategy_sum = np.zeros(tree.num_actions_total)

    def accumulate(self, profile: BehaviorProfile, scale: float = 1.0, player: int = -1) -> None:
        """Add ``scale * own_reach(x) * profile(x)`` for every infoset of ``player`` (-1: both)."""
        accumulate_average_kernel(
            self.tree.arrays, profile.probs, self.weight_sum, self.weighted_strategy_sum,
            float(scale), int(player), np.empty(self.tree.num_infosets),
        )

    def average(self) -> BehaviorProfile:
        """Extract the average; infosets never reached fall back to uniform."""
        tree = self.tree
        w = np.repeat(self.weight_sum, tree.info_nactions)
        uniform = 1.0 / np.repeat(tree.info_nactions, tree.info_nactions)
        with np.errstate(invalid="ignore", divide="ignore"):
            probs = np.where(w > 0, self.weighted_strategy_sum / w, uniform)
        return BehaviorProfile(tree, probs)


def accumulate_average(acc: AverageAccumulator, profile: BehaviorProfile, tree: GameTree | None = None) -> None:
    acc.accumulate(profile)
    if __debug__:
        acc.average().check(1e-9)


@numba.njit(cache=True, error_model="numpy")
def own_reach_kernel(t, probs, out):
    """Own reach probability of every infoset (parents precede children)."""
    for x in range(len(t.info_offset)):
        pa = t.info_parent_action[x]
        out[x] = 1.0 if pa < 0 else out[t.info_parent[x]] * probs[pa]


@numba.njit(cache=True, error_model="numpy")
def accumulate_average_kernel(t, probs, w_sum, w_strat, scale, player, reach):
    own_reach_kernel(t, probs, reach)
    for x in range(len(t.info_offset)):
        if player >= 0 and t.info_player[x] != player:
            continue
        w = scale * reach[x]
        w_sum[x] += w
        o = t.info_offset[x]
        for a in range(t.info_nactions[x]):
            w_strat[o + a] += w * probs[o + a]


def own_reach(tree: GameTree, profile: BehaviorProfile) -> np.ndarray:
    out = np.empty(tree.num_infosets)
    own_reach_kernel(tree.arrays, profile.probs, out)
    return out
