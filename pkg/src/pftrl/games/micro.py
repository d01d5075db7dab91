"""Tiny games small enough for exhaustive enumeration of sampling outcomes."""

from __future__ import annotations

from ..game_core import CHANCE, TERMINAL

MATCHING_PENNIES_RULES = "one simultaneous choice each (H/T), +1 to player 0 on a match, -1 otherwise"
ONE_CARD_TOY_RULES = (
    "chance deals player 0 a high or low card (0.5 each), player 1 sees nothing; "
    "check/bet with ante 1 and bet 1 as in Kuhn, player 0 may call or fold after check-bet"
)


class MatchingPenniesState:
    __slots__ = ("history",)

    def __init__(self, history=""):
        self.history = history

    def current_player(self):
        return TERMINAL if len(self.history) == 2 else len(self.history)

    def legal_actions(self):
        return ("H", "T")

    def chance_outcomes(self):
        return []

    def child(self, action):
        return MatchingPenniesState(self.history + action)

    def infoset_key(self):
        return ""

    def returns(self):
        u = 1.0 if self.history[0] == self.history[1] else -1.0
        return (u, -u)


class OneCardToyState:
    """Player 0 holds H or L; player 0 can act twice on the check-bet line."""

    __slots__ = ("card", "history")

    _TERMINAL = {"kk", "kbf", "kbc", "bf", "bc"}

    def __init__(self, card=None, history=""):
        self.card = card
        self.history = history

    def current_player(self):
        if self.card is None:
            return CHANCE
        if self.history in self._TERMINAL:
            return TERMINAL
        return len(self.history) % 2

    def legal_actions(self):
        if self.history in ("", "k"):
            return ("k", "b")
        return ("f", "c")

    def chance_outcomes(self):
        return [("H", 0.5), ("L", 0.5)]

    def child(self, action):
        if self.card is None:
            return OneCardToyState(action, self.history)
        return OneCardToyState(self.card, self.history + action)

    def infoset_key(self):
        if len(self.history) % 2 == 0:
            return (self.card, self.history)
        return self.history

    def returns(self):
        h = self.history
        if h == "kbf":
            return (-1.0, 1.0)
        if h == "bf":
            return (1.0, -1.0)
        stake = 1.0 if h == "kk" else 2.0
        u = stake if self.card == "H" else -stake
        return (u, -u)
