"""Skill-parameterized suboptimal decision-maker policies.

The shipped surrogates are noisy-rational: softmax (or epsilon-greedy) over
the optimal action values, with five named presets spanning far-from-optimal
(L1) to near-optimal (L5).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .mdp import QTable, StochasticPolicy, TabularMDP

BOLTZMANN_PRESETS = {"L1": 0.5, "L2": 1.0, "L3": 2.0, "L4": 4.0, "L5": 8.0}
EPSILON_PRESETS = {"L1": 0.5, "L2": 0.3, "L3": 0.2, "L4": 0.1, "L5": 0.05}
SKILL_NAMES = ("L1", "L2", "L3", "L4", "L5")


@dataclass(frozen=True)
class SkillModel:
    """A named or raw-parameter skill level for a decision-maker surrogate."""

    kind: str = "boltzmann"  # boltzmann | epsilon-greedy
    parameter: float = 1.0
    skill_label: str | None = None

    @classmethod
    def from_name(cls, name: str, kind: str = "boltzmann") -> "SkillModel":
        presets = BOLTZMANN_PRESETS if kind == "boltzmann" else EPSILON_PRESETS
        if name not in presets:
            raise ConfigurationError(f"unknown skill preset {name!r} (use L1..L5)")
        return cls(kind=kind, parameter=presets[name], skill_label=name)

    def policy(self, mdp: TabularMDP, q_star: QTable) -> StochasticPolicy:
        if self.kind == "boltzmann":
            return make_boltzmann(mdp, q_star, self.parameter)
        if self.kind == "epsilon-greedy":
            return make_epsilon_greedy(mdp, q_star, self.parameter)
        raise ConfigurationError(f"unknown skill model kind {self.kind!r}")


def parse_skill(spec: str) -> SkillModel:
    """Accepts a preset name (L1..L5), `beta=<x>`, or `eps=<x>`."""
    if spec in BOLTZMANN_PRESETS:
        return SkillModel.from_name(spec)
    try:
        if spec.startswith("beta="):
            return SkillModel(kind="boltzmann", parameter=float(spec[5:]))
        if spec.startswith("eps="):
            return SkillModel(kind="epsilon-greedy", parameter=float(spec[4:]))
    except ValueError as exc:
        raise ConfigurationError(f"bad skill parameter in {spec!r}") from exc
    raise ConfigurationError(f"unknown skill spec {spec!r}")


def make_boltzmann(mdp: TabularMDP, q_star: QTable, beta: float) -> StochasticPolicy:
    """Softmax-over-Q policy: pi(a|s) proportional to exp(beta * q(s, a)).

    beta = 0 is uniform over legal actions; large beta concentrates on the
    argmax set. Computed with max subtraction for stability.
    """
    if beta < 0:
        raise ConfigurationError("boltzmann beta must be >= 0")
    probs = []
    for s in range(mdp.num_states):
        q = q_star.q(s)
        z = np.exp(beta * (q - np.max(q)))
        probs.append(z / z.sum())
    return StochasticPolicy(probs)


def make_epsilon_greedy(mdp: TabularMDP, q_star: QTable, epsilon: float) -> StochasticPolicy:
    """Greedy on q with probability 1 - epsilon (lowest-index tie-break),
    uniform over all legal actions otherwise."""
    if not (0.0 <= epsilon <= 1.0):
        raise ConfigurationError("epsilon must lie in [0, 1]")
    probs = []
    for s in range(mdp.num_states):
        q = q_star.q(s)
        m = len(q)
        p = np.full(m, epsilon / m)
        p[int(np.argmax(q))] += 1.0 - epsilon
        probs.append(p)
    return StochasticPolicy(probs)
