"""Hand-built fixture where the objectively best opening move backfires.

From the start the SHARP move has the higher optimal value but demands two
precise follow-ups; the SAFE move enters a forgiving grind that a noisy
decision maker converts reliably. Overriding toward the decision maker's own
best continuation therefore disagrees with the expert recommendation at the
start state.
"""

from __future__ import annotations

import numpy as np

from ..behavior import make_boltzmann
from ..errors import DomainError
from ..mdp import StochasticPolicy, TabularMDP, evaluate_policy, value_iteration

# state layout
START, SHARP1, SHARP2, SAFE, LOST, TERM = range(6)
# start actions
A_SHARP, A_SAFE = 0, 1

SAFE_STEP_GOOD = 0.06
SAFE_STEP_OK = 0.05
HORIZON = 16
TRAP_SKILL_BETA = 0.5  # the shipped pi_H is Boltzmann L1 over Q*


def build_trap_instance() -> tuple[TabularMDP, StochasticPolicy]:
    """Build the fixture and its shipped noisy decision-maker policy.

    The construction is checked at build time: the expert move and the
    human-value move must disagree at the start state in the intended
    directions, otherwise the fixture has regressed.
    """

    def det(s):
        return (np.array([s]), np.array([1.0]))

    transitions = [
        [det(SHARP1), det(SAFE)],  # START: SHARP, SAFE
        [det(SHARP2), det(LOST), det(LOST)],  # SHARP1: one precise move out of 3
        [det(TERM), det(LOST), det(LOST)],  # SHARP2: one winning move out of 3
        [det(SAFE), det(SAFE)],  # SAFE: forgiving grind, small step rewards
        [det(TERM), det(TERM)],  # LOST: the game is gone, nothing to salvage
        [det(TERM)],  # TERM
    ]
    rewards = [
        np.array([0.0, 0.0]),
        np.array([0.0, 0.0, 0.0]),
        np.array([1.0, 0.0, 0.0]),
        np.array([SAFE_STEP_GOOD, SAFE_STEP_OK]),
        np.array([0.0, 0.0]),
        np.array([0.0]),
    ]
    terminal = np.array([False, False, False, False, False, True])
    start = np.zeros(6)
    start[START] = 1.0
    mdp = TabularMDP(
        transitions=transitions,
        rewards=rewards,
        terminal=terminal,
        start_dist=start,
        horizon=HORIZON,
    )

    _, _, q_star = value_iteration(mdp)
    pi_h = make_boltzmann(mdp, q_star, TRAP_SKILL_BETA)
    _, q_h = evaluate_policy(mdp, pi_h)

    if not q_star.value(START, A_SHARP) > q_star.value(START, A_SAFE):
        raise DomainError("trap fixture regression: expert no longer prefers SHARP")
    if not q_h.value(START, A_SAFE) > q_h.value(START, A_SHARP):
        raise DomainError("trap fixture regression: human value no longer prefers SAFE")
    return mdp, pi_h
