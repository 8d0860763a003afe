"""Configurable gridworld MDPs with action slip and terminal goal/hazard cells."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError
from ..mdp import TabularMDP

# action order: up, down, left, right
MOVES = ((0, -1), (0, 1), (-1, 0), (1, 0))
PERPENDICULAR = {0: (2, 3), 1: (2, 3), 2: (0, 1), 3: (0, 1)}


@dataclass
class GridworldSpec:
    """ASCII-map gridworld: '.' empty, '#' wall, 'H' hazard, 'G' goal, 'S' start."""

    rows: list  # list[str]
    slip: float = 0.0
    step_reward: float = 0.0
    goal_reward: float = 1.0
    hazard_reward: float = 0.0
    horizon: int | None = None  # defaults to 2 * (width + height)

    def __post_init__(self):
        if not self.rows or any(len(r) != len(self.rows[0]) for r in self.rows):
            raise ConfigurationError("gridworld map must be a non-empty rectangle")
        if not (0.0 <= self.slip <= 1.0):
            raise ConfigurationError("slip must lie in [0, 1]")
        chars = "".join(self.rows)
        if "G" not in chars:
            raise ConfigurationError("gridworld needs at least one goal cell")
        if chars.count("S") != 1:
            raise ConfigurationError("gridworld needs exactly one start cell")

    @property
    def width(self):
        return len(self.rows[0])

    @property
    def height(self):
        return len(self.rows)

    @classmethod
    def from_doc(cls, text: str) -> "GridworldSpec":
        doc = json.loads(text)
        return cls(
            rows=list(doc["map"]),
            slip=float(doc.get("slip", 0.0)),
            step_reward=float(doc.get("step_reward", 0.0)),
            goal_reward=float(doc.get("goal_reward", 1.0)),
            hazard_reward=float(doc.get("hazard_reward", 0.0)),
            horizon=int(doc["horizon"]) if "horizon" in doc else None,
        )


def build_gridworld(spec: GridworldSpec):
    """Build the tabular MDP for a gridworld spec.

    The intended move gets probability 1 - slip, the two perpendicular moves
    slip/2 each; moves into walls or off the grid stay in place. Rewards are
    affinely normalized into [0, 1] if the declared values fall outside it.
    Returns (mdp, cells) where cells[s] is the (x, y) position of state s.
    """
    W, H = spec.width, spec.height
    kind = {}
    cells = []
    index = {}
    start_cell = None
    for y, row in enumerate(spec.rows):
        for x, ch in enumerate(row):
            if ch == "#":
                continue
            kind[(x, y)] = ch
            index[(x, y)] = len(cells)
            cells.append((x, y))
            if ch == "S":
                start_cell = (x, y)
    if kind[start_cell] in "GH":
        raise ConfigurationError("start cell must not be terminal")

    declared = [spec.step_reward, spec.goal_reward, spec.hazard_reward]
    lo, hi = min(declared), max(declared)
    if lo < 0.0 or hi > 1.0:
        span = hi - lo if hi > lo else 1.0
        norm = lambda r: (r - lo) / span
    else:
        norm = lambda r: r
    step_r = norm(spec.step_reward)
    bonus = {"G": norm(spec.goal_reward), "H": norm(spec.hazard_reward)}

    n = len(cells)
    transitions, rewards, outcome_rewards = [], [], []
    terminal = np.zeros(n, dtype=bool)
    for s, (x, y) in enumerate(cells):
        ch = kind[(x, y)]
        if ch in "GH":
            terminal[s] = True
            transitions.append([(np.array([s]), np.array([1.0]))])
            rewards.append(np.array([0.0]))
            outcome_rewards.append([np.array([0.0])])
            continue
        acts, rs, ors = [], [], []
        for a in range(4):
            outcomes = {}
            for move, p in [(a, 1.0 - spec.slip)] + [
                (pa, spec.slip / 2.0) for pa in PERPENDICULAR[a]
            ]:
                if p == 0.0:
                    continue
                dx, dy = MOVES[move]
                nx, ny = x + dx, y + dy
                if (nx, ny) not in kind:
                    nx, ny = x, y  # blocked: wall or edge, stay in place
                outcomes[index[(nx, ny)]] = outcomes.get(index[(nx, ny)], 0.0) + p
            idx = np.array(sorted(outcomes), dtype=np.int64)
            p = np.array([outcomes[i] for i in idx])
            orew = np.array(
                [step_r + bonus.get(kind[cells[i]], 0.0) for i in idx]
            )
            acts.append((idx, p))
            rs.append(float(np.dot(p, orew)))
            ors.append(orew)
        transitions.append(acts)
        rewards.append(np.array(rs))
        outcome_rewards.append(ors)

    start = np.zeros(n)
    start[index[start_cell]] = 1.0
    mdp = TabularMDP(
        transitions=transitions,
        rewards=rewards,
        terminal=terminal,
        start_dist=start,
        horizon=spec.horizon or 2 * (W + H),
        discount=1.0,
        r_min=0.0,
        r_max=1.0,
    )
    mdp.outcome_rewards = _flat_outcomes(mdp, outcome_rewards)
    if not _goal_reachable(spec, kind, start_cell):
        warnings.warn("goal is unreachable from the start cell", stacklevel=2)
    return mdp, cells


def _flat_outcomes(mdp, outcome_rewards):
    return np.concatenate([r for acts in outcome_rewards for r in acts])


def _goal_reachable(spec, kind, start_cell):
    seen = {start_cell}
    stack = [start_cell]
    while stack:
        x, y = stack.pop()
        if kind[(x, y)] == "G":
            return True
        if kind[(x, y)] == "H":
            continue
        for dx, dy in MOVES:
            c = (x + dx, y + dy)
            if c in kind and c not in seen:
                seen.add(c)
                stack.append(c)
    return False


NAMED_GRIDS = {
    "corridor": GridworldSpec(rows=["S....G"], slip=0.0, horizon=8),
    "slippery": GridworldSpec(
        rows=[
            "S...",
            ".H..",
            "..H.",
            "...G",
        ],
        slip=0.2,
        horizon=16,
    ),
}
