"""Benchmark and micro game constructors.

``build("leduc")`` or ``build(GameSpec("goofspiel", 4))`` returns a validated
:class:`~pftrl.game_core.GameTree`.  Trees are immutable, so builds are cached.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

from ..game_core import GameError, GameTree, build_tree, validate
from . import goofspiel, kuhn, leduc, liars_dice, micro

BENCHMARKS = ("kuhn", "leduc", "goofspiel4", "goofspiel5", "liars4", "liars6")
MICRO = ("matching_pennies", "one_card_toy")

# Information-set totals the builders must reproduce.
EXPECTED_INFOSETS = {
    "kuhn": 12,
    "leduc": 936,
    "goofspiel4": 162,
    "goofspiel5": 2124,
    "liars4": 1024,
    "liars6": 24576,
}


@dataclass(frozen=True)
class GameSpec:
    name: str
    param: int | None = None

    @property
    def label(self) -> str:
        if self.name == "goofspiel":
            return f"goofspiel{self.param}"
        if self.name == "liars_dice":
            return f"liars{self.param}"
        return self.name


_SUPPORTED = {
    ("kuhn", None),
    ("leduc", None),
    ("goofspiel", 4),
    ("goofspiel", 5),
    ("liars_dice", 4),
    ("liars_dice", 6),
    ("matching_pennies", None),
    ("one_card_toy", None),
}


def parse_game(name: str | GameSpec) -> GameSpec:
    """Map CLI names (``kuhn``, ``goofspiel4``, ``liars6`` ...) to a :class:`GameSpec`."""
    if isinstance(name, GameSpec):
        spec = name
    elif name.startswith("goofspiel") and name[9:].isdigit():
        spec = GameSpec("goofspiel", int(name[9:]))
    elif name.startswith("liars") and name[5:].isdigit():
        spec = GameSpec("liars_dice", int(name[5:]))
    else:
        spec = GameSpec(name)
    if (spec.name, spec.param) not in _SUPPORTED:
        raise GameError(f"unsupported game {name!r}; choose from {BENCHMARKS + MICRO}")
    return spec


def _root_state(spec: GameSpec):
    if spec.name == "kuhn":
        return kuhn.KuhnState()
    if spec.name == "leduc":
        return leduc.LeducState()
    if spec.name == "goofspiel":
        return goofspiel.GoofspielState(spec.param)
    if spec.name == "liars_dice":
        return liars_dice.LiarsDiceState(spec.param)
    if spec.name == "matching_pennies":
        return micro.MatchingPenniesState()
    return micro.OneCardToyState()


@functools.lru_cache(maxsize=None)
def _build(spec: GameSpec) -> GameTree:
    tree = build_tree(_root_state(spec), name=spec.label)
    problems = validate(tree)
    if problems:
        raise GameError(f"{spec.label}: invalid tree: {problems[:5]}")
    return tree


def build(spec: str | GameSpec) -> GameTree:
    return _build(parse_game(spec))


def canonical_rules(spec: str | GameSpec) -> str:
    spec = parse_game(spec)
    if spec.name == "kuhn":
        return kuhn.RULES
    if spec.name == "leduc":
        return leduc.RULES
    if spec.name == "goofspiel":
        return goofspiel.rules(spec.param)
    if spec.name == "liars_dice":
        return liars_dice.rules(spec.param)
    if spec.name == "matching_pennies":
        return micro.MATCHING_PENNIES_RULES
    return micro.ONE_CARD_TOY_RULES
