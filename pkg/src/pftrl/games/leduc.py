"""Leduc poker with OpenSpiel's default parameters.

Six cards (two suits of J, Q, K), ante 1, raise size 2 in the first round and
4 in the second, at most two raises per round.  Folding is only legal when
facing a raise.  Player 0 opens both rounds.  A pair with the public card
beats any unpaired hand, otherwise the higher private rank wins; equal ranks
split the pot.
"""

from __future__ import annotations

from ..game_core import CHANCE, TERMINAL

RULES = (
    "6 cards (J,Q,K x 2 suits), 2 bet rounds with a public card dealt between them, "
    "ante 1, raise 2 then 4, max 2 raises per round, fold only when facing a raise, "
    "player 0 opens each round, pair with the public card beats high card"
)

_RAISE = (2, 4)
_MAX_RAISES = 2


def _round_over(seq: str) -> bool:
    return len(seq) >= 2 and seq[-1] == "c"


class LeducState:
    __slots__ = ("cards", "rounds")

    def __init__(self, cards=(), rounds=("",)):
        self.cards = cards
        self.rounds = rounds

    @property
    def _folded(self):
        return self.rounds[-1].endswith("f")

    def current_player(self):
        if len(self.cards) < 2:
            return CHANCE
        if self._folded:
            return TERMINAL
        seq = self.rounds[-1]
        if _round_over(seq):
            return TERMINAL if len(self.rounds) == 2 else CHANCE
        return len(seq) % 2

    def legal_actions(self):
        seq = self.rounds[-1]
        acts = []
        if seq.endswith("r"):
            acts.append("f")
        acts.append("c")
        if seq.count("r") < _MAX_RAISES:
            acts.append("r")
        return acts

    def chance_outcomes(self):
        rest = [c for c in range(6) if c not in self.cards]
        return [(c, 1.0 / len(rest)) for c in rest]

    def child(self, action):
        if len(self.cards) < 2:
            return LeducState(self.cards + (action,), self.rounds)
        if len(self.cards) == 2 and _round_over(self.rounds[0]):
            return LeducState(self.cards + (action,), (self.rounds[0], ""))
        return LeducState(self.cards, self.rounds[:-1] + (self.rounds[-1] + action,))

    def infoset_key(self):
        p = len(self.rounds[-1]) % 2
        public = self.cards[2] if len(self.cards) == 3 else -1
        return (self.cards[p], public) + self.rounds

    def _contributions(self):
        put = [1, 1]
        for r, seq in enumerate(self.rounds):
            for i, a in enumerate(seq):
                p = i % 2
                owed = max(put) - put[p]
                if a == "c":
                    put[p] += owed
                elif a == "r":
                    put[p] += owed + _RAISE[r]
        return put

    def returns(self):
        put = self._contributions()
        if self._folded:
            loser = (len(self.rounds[-1]) - 1) % 2
        else:
            public = self.cards[2] // 2
            strength = []
            for p in (0, 1):
                rank = self.cards[p] // 2
                strength.append((rank == public, rank))
            if strength[0] == strength[1]:
                return (0.0, 0.0)
            loser = 0 if strength[0] < strength[1] else 1
        u = float(put[loser])
        return (-u, u) if loser == 0 else (u, -u)
