"""Turn-based, imperfect-information Goofspiel.

Point cards are revealed in descending order (``k, k-1, ..., 1``).  Each round
player 0 bids a card, then player 1 bids without seeing it.  Neither player
ever learns the opponent's bids, only whether each round was won, lost or
tied.  The higher bid takes the point card; tied bids discard it.  The final
round has a single legal bid for each player and is resolved automatically.
The winner of the point total gets +1, the loser -1, a draw 0.
"""

from __future__ import annotations

from ..game_core import TERMINAL


def rules(k: int) -> str:
    return (
        f"{k} point cards, descending order, players bid from hands 1..{k}, "
        "bids hidden and only win/loss/tie per round observed, tie discards the card, "
        "last round auto-played, win-tiebreak conventions: +1/-1 on total points, 0 on draw"
    )


class GoofspielState:
    __slots__ = ("k", "bids0", "bids1")

    def __init__(self, k, bids0=(), bids1=()):
        self.k = k
        self.bids0 = bids0
        self.bids1 = bids1

    def current_player(self):
        if len(self.bids1) == self.k - 1:
            return TERMINAL
        return 0 if len(self.bids0) == len(self.bids1) else 1

    def _hand(self, bids):
        return [c for c in range(1, self.k + 1) if c not in bids]

    def legal_actions(self):
        return self._hand(self.bids0 if len(self.bids0) == len(self.bids1) else self.bids1)

    def chance_outcomes(self):
        return []

    def child(self, action):
        if len(self.bids0) == len(self.bids1):
            return GoofspielState(self.k, self.bids0 + (action,), self.bids1)
        return GoofspielState(self.k, self.bids0, self.bids1 + (action,))

    def infoset_key(self):
        p = self.current_player()
        own = self.bids0 if p == 0 else self.bids1
        done = len(self.bids1)
        outcomes = tuple(
            (a > b) - (a < b) for a, b in zip(self.bids0[:done], self.bids1[:done])
        )
        return (own, outcomes)

    def returns(self):
        b0 = self.bids0 + tuple(self._hand(self.bids0))
        b1 = self.bids1 + tuple(self._hand(self.bids1))
        score = 0
        for r, (a, b) in enumerate(zip(b0, b1)):
            point = self.k - r
            if a > b:
                score += point
            elif b > a:
                score -= point
        u = float((score > 0) - (score < 0))
        return (u, -u)
