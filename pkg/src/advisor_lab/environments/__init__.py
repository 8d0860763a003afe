"""Desk-scale environments and the id registry.

Environment ids:
  grid:<name>          named gridworld (corridor, slippery)
  ttt:<k>x<k>m<m>:<opponent>   m-in-a-row board game; opponent is `optimal`,
                               a skill preset L1..L5, or `beta=<x>`
  trap                 the hand-built expert-trap fixture
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import ConfigurationError
from ..mdp import StochasticPolicy, TabularMDP
from .board import BoardGameSpec, build_board_game, lines, minimax_values, winner
from .gridworld import NAMED_GRIDS, GridworldSpec, build_gridworld
from .trap import build_trap_instance

__all__ = [
    "Environment",
    "BoardGameSpec",
    "GridworldSpec",
    "NAMED_GRIDS",
    "build_board_game",
    "build_gridworld",
    "build_trap_instance",
    "build_environment",
    "list_environments",
    "lines",
    "minimax_values",
    "winner",
]


@dataclass
class Environment:
    """A built environment: the MDP plus per-state semantics for rendering
    and concept extraction."""

    env_id: str
    kind: str  # grid | board | trap
    mdp: TabularMDP
    states_meta: list  # grid: (x, y) cells; board: board tuples; trap: names
    extras: dict
    # set for the trap fixture only: its shipped noisy decision maker
    shipped_pi_h: StochasticPolicy | None = None


_TTT_RE = re.compile(r"^ttt:(\d+)x(\d+)m(\d+):(.+)$")


def build_environment(env_id: str) -> Environment:
    if env_id == "trap":
        mdp, pi_h = build_trap_instance()
        names = ["start", "sharp-1", "sharp-2", "safe", "lost", "end"]
        return Environment(env_id, "trap", mdp, names, {}, shipped_pi_h=pi_h)
    if env_id.startswith("grid:"):
        name = env_id[5:]
        if name not in NAMED_GRIDS:
            raise ConfigurationError(f"unknown gridworld {name!r}")
        spec = NAMED_GRIDS[name]
        mdp, cells = build_gridworld(spec)
        return Environment(env_id, "grid", mdp, cells, {"spec": spec})
    m = _TTT_RE.match(env_id)
    if m:
        k, k2, wl, opp = int(m.group(1)), int(m.group(2)), int(m.group(3)), m.group(4)
        if k != k2:
            raise ConfigurationError("board must be square")
        spec = BoardGameSpec(size=k, win_length=wl, opponent=opp)
        mdp, boards = build_board_game(spec)
        return Environment(env_id, "board", mdp, boards, {"spec": spec})
    raise ConfigurationError(f"unknown environment id {env_id!r}")


def list_environments() -> list:
    return [
        "trap",
        *[f"grid:{name}" for name in sorted(NAMED_GRIDS)],
        "ttt:3x3m3:optimal",
        "ttt:3x3m3:L1",
        "ttt:3x3m3:L3",
    ]
