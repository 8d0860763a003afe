"""Two-player m-in-a-row board game folded into a single-agent MDP.

The protagonist plays X; the opponent's (possibly stochastic) reply is folded
into the transition function, so each MDP step is one protagonist decision.
Terminal payoffs follow the win/draw/loss convention 1 / 0.5 / 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..behavior import BOLTZMANN_PRESETS
from ..errors import ConfigurationError
from ..mdp import TabularMDP

X, O, EMPTY = 1, 2, 0


@dataclass(frozen=True)
class BoardGameSpec:
    size: int  # k: board is k x k
    win_length: int  # m
    opponent: str = "optimal"  # "optimal", a preset L1..L5, or "beta=<x>"
    protagonist_first: bool = True

    def __post_init__(self):
        if self.win_length > self.size:
            raise ConfigurationError("win length cannot exceed the board size")
        if self.size > 4 or (self.size == 4 and self.win_length != 3):
            raise ConfigurationError("enumerable sizes: k <= 3, or k = 4 with m = 3")


def lines(k: int, m: int):
    """All m-cell winning lines as tuples of flat cell indices."""
    out = []
    for y in range(k):
        for x in range(k):
            for dx, dy in ((1, 0), (0, 1), (1, 1), (1, -1)):
                ex, ey = x + (m - 1) * dx, y + (m - 1) * dy
                if 0 <= ex < k and 0 <= ey < k:
                    out.append(tuple((y + i * dy) * k + (x + i * dx) for i in range(m)))
    return out


def winner(board: tuple, lines_: list) -> int:
    for line in lines_:
        v = board[line[0]]
        if v != EMPTY and all(board[c] == v for c in line[1:]):
            return v
    return 0


def build_board_game(spec: BoardGameSpec):
    """Enumerate all reachable protagonist-to-move positions and fold the
    opponent reply into the transitions.

    Returns (mdp, boards) where boards[s] is the board tuple of state s
    (boards[-1] is None: the shared absorbing terminal).
    """
    k, m = spec.size, spec.win_length
    L = lines(k, m)
    cells = k * k
    opp_policy = _opponent_policy(spec, L, cells)

    empty = tuple([EMPTY] * cells)
    if spec.protagonist_first:
        start_boards = {empty: 1.0}
    else:
        start_boards = {}
        for b2, p in opp_policy(empty):
            if winner(b2, L) or EMPTY not in b2:
                raise ConfigurationError("opponent's first move cannot end the game")
            start_boards[b2] = start_boards.get(b2, 0.0) + p

    index: dict = {}
    boards: list = []
    order = []
    for b in start_boards:
        index[b] = len(boards)
        boards.append(b)
        order.append(b)
    head = 0
    moves_of: dict = {}
    while head < len(order):
        b = order[head]
        head += 1
        outs = []
        for cell in range(cells):
            if b[cell] != EMPTY:
                continue
            b1 = b[:cell] + (X,) + b[cell + 1 :]
            entries = []  # (next board or None, prob, outcome reward)
            if winner(b1, L) == X:
                entries.append((None, 1.0, 1.0))
            elif EMPTY not in b1:
                entries.append((None, 1.0, 0.5))
            else:
                for b2, p in opp_policy(b1):
                    w = winner(b2, L)
                    if w == O:
                        entries.append((None, p, 0.0))
                    elif EMPTY not in b2:
                        entries.append((None, p, 0.5))
                    else:
                        entries.append((b2, p, 0.0))
                        if b2 not in index:
                            index[b2] = len(boards)
                            boards.append(b2)
                            order.append(b2)
            outs.append((cell, entries))
        moves_of[b] = outs

    n = len(boards) + 1
    term = n - 1
    transitions, rewards, flat_outcomes = [], [], []
    for b in boards:
        acts, rs = [], []
        for cell, entries in moves_of[b]:
            idx = np.array(
                [term if nb is None else index[nb] for nb, _, _ in entries], dtype=np.int64
            )
            p = np.array([pr for _, pr, _ in entries])
            orew = np.array([r for _, _, r in entries])
            acts.append((idx, p))
            rs.append(float(np.dot(p, orew)))
            flat_outcomes.append(orew)
        transitions.append(acts)
        rewards.append(np.array(rs))
    transitions.append([(np.array([term]), np.array([1.0]))])
    rewards.append(np.array([0.0]))
    flat_outcomes.append(np.array([0.0]))

    terminal = np.zeros(n, dtype=bool)
    terminal[term] = True
    start = np.zeros(n)
    for b, p in start_boards.items():
        start[index[b]] = p
    mdp = TabularMDP(
        transitions=transitions,
        rewards=rewards,
        terminal=terminal,
        start_dist=start,
        horizon=cells,
    )
    mdp.outcome_rewards = np.concatenate(flat_outcomes)
    return mdp, boards + [None]


def minimax_values(k: int, m: int):
    """Game value of every position under optimal play by both sides, from the
    protagonist's (X's) perspective. Independent of the MDP machinery."""
    L = lines(k, m)
    cells = k * k

    @lru_cache(maxsize=None)
    def value(board: tuple, to_move: int) -> float:
        w = winner(board, L)
        if w == X:
            return 1.0
        if w == O:
            return 0.0
        if EMPTY not in board:
            return 0.5
        vals = [
            value(board[:c] + (to_move,) + board[c + 1 :], X + O - to_move)
            for c in range(cells)
            if board[c] == EMPTY
        ]
        return max(vals) if to_move == X else min(vals)

    return value


def _opponent_policy(spec: BoardGameSpec, L, cells):
    """Reply distribution over boards for the O player, driven by the optimal
    game values (optimal play, or softmax over them for skill presets)."""
    value = minimax_values(spec.size, spec.win_length)

    if spec.opponent == "optimal":
        beta = None
    elif spec.opponent in BOLTZMANN_PRESETS:
        beta = BOLTZMANN_PRESETS[spec.opponent]
    elif spec.opponent.startswith("beta="):
        beta = float(spec.opponent[5:])
    else:
        raise ConfigurationError(f"unknown opponent spec {spec.opponent!r}")

    def reply(board: tuple):
        children = [
            (c, board[:c] + (O,) + board[c + 1 :]) for c in range(cells) if board[c] == EMPTY
        ]
        # O's action value: 1 - protagonist's game value after the reply
        q = np.array([1.0 - value(b2, X) for _, b2 in children])
        if beta is None:
            best = int(np.argmax(q))  # lowest cell index on ties
            return [(children[best][1], 1.0)]
        z = np.exp(beta * (q - q.max()))
        z /= z.sum()
        return [(b2, float(p)) for (_, b2), p in zip(children, z)]

    return reply
