from __future__ import annotations

from enum import Enum
from typing import NamedTuple

DEFAULT_DEPTH = 128


class Action(Enum):
    EXCLUDE = 0
    INCLUDE = 1


class Event(Enum):
    REWARD = 1
    PENALTY = 2
    INACTION = 3


class AutomatonState(NamedTuple):
    """One Tsetlin automaton. Counter runs 1..2N; the upper half includes."""

    counter: int

    @classmethod
    def initial(cls, depth: int = DEFAULT_DEPTH) -> AutomatonState:
        # Exclude boundary: a single penalty flips to Include.
        return cls(depth)

    def is_valid(self, depth: int) -> bool:
        return 1 <= self.counter <= 2 * depth


def ta_action(state: AutomatonState, depth: int) -> Action:
    return Action.INCLUDE if state.counter > depth else Action.EXCLUDE


def apply_transition(
    state: AutomatonState, event: Event, depth: int
) -> AutomatonState:
    if event is Event.INACTION:
        return state

    include = state.counter > depth
    # Reward deepens the current action, penalty moves toward the other one.
    if event is Event.REWARD:
        step = 1 if include else -1
    else:
        step = -1 if include else 1

    return AutomatonState(min(2 * depth, max(1, state.counter + step)))
