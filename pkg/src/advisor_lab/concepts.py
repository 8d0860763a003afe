"""Interpretable per-state features and the intervention frequency-difference
report: which feature categories are over-represented among the states where
the gate fired, relative to the states where it did not."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError

CATEGORIES = ("Low", "Med", "High")


@dataclass(frozen=True)
class Concept:
    """One named feature. `step` is the quantization of non-integer features
    and sets the Med band half-width; integer features use an exact band."""

    name: str
    integer: bool = True
    step: float = 1.0


def discretize(player_value: float, opponent_value: float, concept: Concept) -> str:
    """High / Med / Low by the sign of the player-minus-opponent difference,
    with a tolerance band for Med."""
    tol = 1e-9 if concept.integer else concept.step
    diff = player_value - opponent_value
    if diff > tol:
        return "High"
    if diff < -tol:
        return "Low"
    return "Med"


@dataclass
class ConceptRow:
    concept: str
    category: str
    freq_intervention: float
    freq_non_intervention: float
    delta_abs: float
    delta_signed: float


@dataclass
class ConceptReport:
    rows: list  # sorted by delta_abs desc, then (concept, category)
    intervention_visits: int
    non_intervention_visits: int

    def top(self, k: int) -> list:
        return self.rows[:k]


def concept_report(trajectories, extractor) -> ConceptReport:
    """Category frequencies per concept in the intervention and
    non-intervention visit populations, with their absolute difference.

    Visits are counted with multiplicity: a state visited twice contributes
    twice to its population.
    """
    counts = {True: Counter(), False: Counter()}
    visits = {True: 0, False: 0}
    for traj in trajectories:
        for st in traj.steps:
            pairs = extractor.extract(st.state)
            visits[st.intervened] += 1
            for concept, (pv, ov) in zip(extractor.concepts, pairs):
                cat = discretize(pv, ov, concept)
                counts[st.intervened][(concept.name, cat)] += 1
    if visits[True] == 0:
        raise DomainError(
            "no intervention states in the input; lower the gate threshold"
        )
    if visits[False] == 0:
        raise DomainError("no non-intervention states in the input")
    rows = []
    for concept in extractor.concepts:
        for cat in CATEGORIES:
            fi = counts[True][(concept.name, cat)] / visits[True]
            fn = counts[False][(concept.name, cat)] / visits[False]
            rows.append(
                ConceptRow(
                    concept=concept.name,
                    category=cat,
                    freq_intervention=fi,
                    freq_non_intervention=fn,
                    delta_abs=abs(fi - fn),
                    delta_signed=fi - fn,
                )
            )
    rows.sort(key=lambda r: (-r.delta_abs, r.concept, r.category))
    return ConceptReport(
        rows=rows,
        intervention_visits=visits[True],
        non_intervention_visits=visits[False],
    )


# ---------------------------------------------------------------------------
# shipped extractors
# ---------------------------------------------------------------------------


class BoardConceptExtractor:
    """Features of an m-in-a-row position, each as (mover, opponent) values."""

    def __init__(self, size: int, win_length: int, boards, lines_):
        self.size = size
        self.m = win_length
        self.boards = boards
        self.lines = lines_
        self.concepts = [
            Concept("material-on-board"),
            Concept("open-lines"),
            Concept("immediate-threats-for"),
            Concept("immediate-threats-against"),
            Concept("center-control"),
        ]
        k = size
        if k % 2 == 1:
            self.center = [(k // 2) * k + k // 2]
        else:
            mid = (k // 2 - 1, k // 2)
            self.center = [y * k + x for y in mid for x in mid]

    def extract(self, state: int):
        board = self.boards[state]
        if board is None:  # absorbing terminal
            return [(0, 0)] * len(self.concepts)
        x_cnt = sum(1 for c in board if c == 1)
        o_cnt = sum(1 for c in board if c == 2)
        open_x = sum(1 for ln in self.lines if all(board[c] != 2 for c in ln))
        open_o = sum(1 for ln in self.lines if all(board[c] != 1 for c in ln))
        thr_x = self._threats(board, 1)
        thr_o = self._threats(board, 2)
        cen_x = sum(1 for c in self.center if board[c] == 1)
        cen_o = sum(1 for c in self.center if board[c] == 2)
        return [
            (x_cnt, o_cnt),
            (open_x, open_o),
            (thr_x, thr_o),
            (thr_o, thr_x),
            (cen_x, cen_o),
        ]

    def _threats(self, board, player):
        n = 0
        for ln in self.lines:
            own = sum(1 for c in ln if board[c] == player)
            empty = sum(1 for c in ln if board[c] == 0)
            if own == self.m - 1 and empty == 1:
                n += 1
        return n


class GridConceptExtractor:
    """Gridworld features compared against their map-wide median, so the
    High/Med/Low split reads as better/typical/worse than a typical cell."""

    def __init__(self, cells, mdp, spec):
        self.cells = cells
        self.concepts = [
            Concept("distance-to-goal"),
            Concept("distance-to-hazard"),
            Concept("hazard-adjacency-count"),
        ]
        goals, hazards = [], []
        for y, row in enumerate(spec.rows):
            for x, ch in enumerate(row):
                if ch == "G":
                    goals.append((x, y))
                elif ch == "H":
                    hazards.append((x, y))
        self._goals, self._hazards = goals, hazards
        values = [self._raw(c) for c in cells]
        self._median = [float(np.median([v[i] for v in values])) for i in range(3)]

    def _raw(self, cell):
        x, y = cell
        d_goal = min((abs(x - gx) + abs(y - gy) for gx, gy in self._goals), default=0)
        d_haz = min(
            (abs(x - hx) + abs(y - hy) for hx, hy in self._hazards),
            default=len(self.cells),
        )
        adj = sum(
            1 for hx, hy in self._hazards if abs(x - hx) + abs(y - hy) == 1
        )
        return (d_goal, d_haz, adj)

    def extract(self, state: int):
        raw = self._raw(self.cells[state])
        # closer-to-goal / farther-from-hazard than typical reads as High
        return [
            (self._median[0], raw[0]),
            (raw[1], self._median[1]),
            (raw[2], self._median[2]),
        ]


def extractor_for(env):
    """Concept extractor for a built environment."""
    from .environments import lines

    if env.kind == "board":
        spec = env.extras["spec"]
        return BoardConceptExtractor(
            spec.size, spec.win_length, env.states_meta, lines(spec.size, spec.win_length)
        )
    if env.kind == "grid":
        return GridConceptExtractor(env.states_meta, env.mdp, env.extras["spec"])
    raise ConfigurationError(f"no concept extractor for environment kind {env.kind!r}")
