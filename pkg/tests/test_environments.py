"""Shipped environments: gridworlds, folded board games, and the hand-built
sharp-line fixture."""

import numpy as np
import pytest

from advisor_lab.environments import build_environment, list_environments
from advisor_lab.environments.board import (
    BoardGameSpec,
    build_board_game,
    lines,
    minimax_values,
    winner,
)
from advisor_lab.environments.gridworld import GridworldSpec, build_gridworld
from advisor_lab.errors import ConfigurationError
from advisor_lab.mdp import evaluate_policy, expected_return, value_iteration


# -- gridworld ---------------------------------------------------------------


def test_corridor_optimal_walks_straight():
    env = build_environment("grid:corridor")
    pi, v_star, _ = value_iteration(env.mdp)
    j = float(np.dot(env.mdp.start_dist, v_star.v))
    # zero step reward along the corridor, then the unit goal reward
    assert j == pytest.approx(1.0, abs=1e-12)


def test_gridworld_slip_mass_goes_perpendicular():
    spec = GridworldSpec(rows=("S.", "..", ".G"), slip=0.2, horizon=8)
    mdp, cells = build_gridworld(spec)
    s = cells.index((0, 0))
    # moving down from the corner: slip goes left (blocked -> stay) and right
    a = 1
    dense = mdp.transition(s, a)
    assert dense[cells.index((0, 1))] == pytest.approx(0.8)
    assert dense[cells.index((1, 0))] == pytest.approx(0.1)
    assert dense[cells.index((0, 0))] == pytest.approx(0.1)


def test_gridworld_rewards_normalized_into_unit_range():
    spec = GridworldSpec(
        rows=("S.G",), slip=0.0, step_reward=-1.0, goal_reward=10.0, horizon=4
    )
    mdp, _ = build_gridworld(spec)
    for s in range(mdp.num_states):
        assert (mdp.rewards[s] >= -1e-12).all()
        assert (mdp.rewards[s] <= 1 + 1e-12).all()


def test_gridworld_requires_start_and_goal():
    with pytest.raises(ConfigurationError):
        build_gridworld(GridworldSpec(rows=("..",), horizon=4))


def test_slippery_grid_hazard_is_costly():
    env = build_environment("grid:slippery")
    pi, v_star, q_star = value_iteration(env.mdp)
    j = float(np.dot(env.mdp.start_dist, v_star.v))
    assert j > 0.5  # the optimal route is clearly worth taking


# -- board game --------------------------------------------------------------


def test_lines_count_3x3():
    assert len(lines(3, 3)) == 8


def test_winner_detects_rows_and_diagonals():
    L = lines(3, 3)
    assert winner((1, 1, 1, 0, 0, 0, 0, 0, 0), L) == 1
    assert winner((2, 0, 0, 0, 2, 0, 0, 0, 2), L) == 2
    assert winner((0,) * 9, L) == 0


def test_minimax_3x3_start_is_a_draw():
    value = minimax_values(3, 3)
    assert value(tuple([0] * 9), 1) == 0.5


def test_optimal_vs_optimal_board_value_matches_minimax():
    mdp, boards = build_board_game(BoardGameSpec(size=3, win_length=3))
    _, v_star, _ = value_iteration(mdp)
    j = float(np.dot(mdp.start_dist, v_star.v))
    assert j == pytest.approx(0.5, abs=1e-12)


def test_board_outcome_rewards_expectation_matches_rewards():
    mdp, _ = build_board_game(BoardGameSpec(size=3, win_length=3, opponent="L1"))
    assert mdp.outcome_rewards is not None
    for s in range(mdp.num_states):
        for a in range(mdp.num_actions(s)):
            sa = mdp.flat_index(s, a)
            lo, hi = mdp.t_indptr[sa], mdp.t_indptr[sa + 1]
            expect = float(np.dot(mdp.t_prob[lo:hi], mdp.outcome_rewards[lo:hi]))
            assert expect == pytest.approx(mdp.reward(s, a), abs=1e-12)


def test_weak_opponent_is_beatable():
    env = build_environment("ttt:3x3m3:L1")
    _, v_star, _ = value_iteration(env.mdp)
    j = float(np.dot(env.mdp.start_dist, v_star.v))
    assert j > 0.9


def test_board_spec_rejects_unenumerable_sizes():
    with pytest.raises(ConfigurationError):
        BoardGameSpec(size=5, win_length=4)
    with pytest.raises(ConfigurationError):
        BoardGameSpec(size=4, win_length=4)
    with pytest.raises(ConfigurationError):
        BoardGameSpec(size=2, win_length=3)


def test_board_second_player_start_positions():
    mdp, boards = build_board_game(
        BoardGameSpec(size=3, win_length=3, opponent="optimal", protagonist_first=False)
    )
    starts = np.flatnonzero(mdp.start_dist)
    for s in starts:
        assert sum(1 for c in boards[s] if c == 2) == 1


# -- the sharp-line fixture --------------------------------------------------


def test_trap_structure(trap, trap_tables):
    mdp, pi_h = trap
    q_star, q_h = trap_tables["q_star"], trap_tables["q_h"]
    start = int(np.flatnonzero(mdp.start_dist)[0])
    # under optimal continuation the sharp line is best; under the shipped
    # noisy player's own continuation the safe line is best
    assert q_star.value(start, 0) > q_star.value(start, 1)
    assert q_h.value(start, 1) > q_h.value(start, 0)


def test_trap_optimal_value(trap):
    mdp, pi_h = trap
    _, v_star, _ = value_iteration(mdp)
    assert float(np.dot(mdp.start_dist, v_star.v)) == pytest.approx(1.0, abs=1e-12)
    assert expected_return(mdp, pi_h) == pytest.approx(0.5069227500929923, abs=1e-12)


# -- registry ----------------------------------------------------------------


def test_registry_round_trip():
    for env_id in list_environments():
        env = build_environment(env_id)
        assert env.env_id == env_id
        assert env.mdp.num_states >= 2


def test_registry_rejects_unknown_ids():
    with pytest.raises(ConfigurationError):
        build_environment("grid:nowhere")
    with pytest.raises(ConfigurationError):
        build_environment("ttt:3x4m3:optimal")
    with pytest.raises(ConfigurationError):
        build_environment("what")
