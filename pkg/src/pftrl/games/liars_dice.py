"""Liar's Dice with one die per player.

Bid ``b`` (0-based) claims at least ``b // sides + 1`` dice showing face
``b % sides + 1``.  Player 0 opens with a bid; afterwards each player either
raises to a strictly higher bid or calls "liar".  The highest face is wild.
On a call the bidder wins if the bid holds, otherwise the caller wins.
"""

from __future__ import annotations

from ..game_core import CHANCE, TERMINAL


def rules(sides: int) -> str:
    return f"1 die per player, {sides} faces, highest face wild"


class LiarsDiceState:
    __slots__ = ("sides", "dice", "bids", "called")

    def __init__(self, sides, dice=(), bids=(), called=False):
        self.sides = sides
        self.dice = dice
        self.bids = bids
        self.called = called

    @property
    def liar(self):
        return 2 * self.sides

    def current_player(self):
        if len(self.dice) < 2:
            return CHANCE
        if self.called:
            return TERMINAL
        return len(self.bids) % 2

    def legal_actions(self):
        first = self.bids[-1] + 1 if self.bids else 0
        acts = list(range(first, 2 * self.sides))
        if self.bids:
            acts.append(self.liar)
        return acts

    def chance_outcomes(self):
        return [(f, 1.0 / self.sides) for f in range(1, self.sides + 1)]

    def child(self, action):
        if len(self.dice) < 2:
            return LiarsDiceState(self.sides, self.dice + (action,), self.bids)
        if action == self.liar:
            return LiarsDiceState(self.sides, self.dice, self.bids, True)
        return LiarsDiceState(self.sides, self.dice, self.bids + (action,))

    def infoset_key(self):
        return (self.dice[len(self.bids) % 2], self.bids)

    def returns(self):
        bid = self.bids[-1]
        quantity, face = bid // self.sides + 1, bid % self.sides + 1
        count = sum(1 for d in self.dice if d == face or d == self.sides)
        caller = len(self.bids) % 2
        winner = 1 - caller if count >= quantity else caller
        return (1.0, -1.0) if winner == 0 else (-1.0, 1.0)
