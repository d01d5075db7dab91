"""Kuhn poker: 3 cards, one betting round, ante 1, bet 1."""

from __future__ import annotations

from ..game_core import CHANCE, TERMINAL

RULES = "3 cards, 1 bet round, ante 1, bet 1"

_TERMINAL = {"pp", "bp", "bb", "pbp", "pbb"}


class KuhnState:
    __slots__ = ("cards", "history")

    def __init__(self, cards=(), history=""):
        self.cards = cards
        self.history = history

    def current_player(self):
        if len(self.cards) < 2:
            return CHANCE
        if self.history in _TERMINAL:
            return TERMINAL
        return len(self.history) % 2

    def legal_actions(self):
        return ("p", "b")

    def chance_outcomes(self):
        rest = [c for c in range(3) if c not in self.cards]
        return [(c, 1.0 / len(rest)) for c in rest]

    def child(self, action):
        if len(self.cards) < 2:
            return KuhnState(self.cards + (action,), self.history)
        return KuhnState(self.cards, self.history + action)

    def infoset_key(self):
        p = len(self.history) % 2
        return (self.cards[p], self.history)

    def returns(self):
        h = self.history
        if h == "bp":
            return (1.0, -1.0)
        if h == "pbp":
            return (-1.0, 1.0)
        stake = 2.0 if "b" in h else 1.0
        u = stake if self.cards[0] > self.cards[1] else -stake
        return (u, -u)
