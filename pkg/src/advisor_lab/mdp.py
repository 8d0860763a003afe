"""Finite-horizon tabular MDPs, policies, and exact dynamic-programming solvers.

Everything here is stage-indexed backward induction: no stationary fixed-point
iteration, no convergence tolerances. Reported value/Q tables are the stage-1
tables (the episode-start view); the full stage arrays are kept on the table
objects for time-dependent consumers.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError

PROB_TOL = 1e-12


@dataclass
class TabularMDP:
    """Finite MDP with explicit per-state action sets and transition tables.

    transitions[s][a] is a pair (next_states, probs) of aligned arrays;
    rewards[s][a] is the immediate reward for action a at state s.
    Terminal states carry exactly one zero-reward self-loop action, which makes
    "no decisions at terminal states" structural rather than a special case.
    """

    transitions: list  # list[list[(np.ndarray[int], np.ndarray[float])]]
    rewards: list  # list[np.ndarray[float]]
    terminal: np.ndarray  # bool, (n,)
    start_dist: np.ndarray  # float, (n,)
    horizon: int
    discount: float = 1.0
    r_min: float = 0.0
    r_max: float = 1.0

    # Optional realized per-outcome rewards aligned with the flat transition
    # entries (t_idx order). When set, rollouts credit the realized outcome's
    # reward instead of the (s, a) expectation; the per-(s, a) expectation must
    # equal rewards[s][a], so all exact solvers are unaffected.
    outcome_rewards = None

    def __post_init__(self):
        self.terminal = np.asarray(self.terminal, dtype=bool)
        self.start_dist = np.asarray(self.start_dist, dtype=float)
        self.rewards = [np.asarray(r, dtype=float) for r in self.rewards]
        self.validate()
        self._build_flat()

    # -- basic shape --------------------------------------------------------

    @property
    def num_states(self) -> int:
        return len(self.transitions)

    def num_actions(self, s: int) -> int:
        return len(self.transitions[s])

    def transition(self, s: int, a: int) -> np.ndarray:
        """Dense probability vector over next states for (s, a)."""
        idx, p = self.transitions[s][a]
        out = np.zeros(self.num_states)
        np.add.at(out, idx, p)
        return out

    def reward(self, s: int, a: int) -> float:
        return float(self.rewards[s][a])

    def validate(self):
        n = self.num_states
        if self.horizon < 1:
            raise ConfigurationError("horizon must be a positive integer")
        if not (0.0 < self.discount <= 1.0):
            raise ConfigurationError("discount must lie in (0, 1]")
        if self.terminal.shape != (n,) or self.start_dist.shape != (n,):
            raise ConfigurationError("terminal/start_dist length must match state count")
        if abs(self.start_dist.sum() - 1.0) > PROB_TOL or (self.start_dist < 0).any():
            raise ConfigurationError("start_dist must sum to 1")
        for s in range(n):
            acts = self.transitions[s]
            if len(acts) < 1 or len(self.rewards[s]) != len(acts):
                raise ConfigurationError(f"state {s}: need >= 1 action with matching rewards")
            for a, (idx, p) in enumerate(acts):
                if abs(float(np.sum(p)) - 1.0) > PROB_TOL or (np.asarray(p) < 0).any():
                    raise ConfigurationError(f"transition({s},{a}) must sum to 1")
            if self.terminal[s]:
                idx, p = acts[0]
                if len(acts) != 1 or len(idx) != 1 or idx[0] != s or self.rewards[s][0] != 0.0:
                    raise ConfigurationError(
                        f"terminal state {s} must have exactly one zero-reward self-loop"
                    )
            lo, hi = np.min(self.rewards[s]), np.max(self.rewards[s])
            if lo < self.r_min - PROB_TOL or hi > self.r_max + PROB_TOL:
                raise ConfigurationError(f"state {s}: rewards outside [{self.r_min}, {self.r_max}]")

    # -- flat (CSR-like) views used by the vectorized solvers ---------------

    def _build_flat(self):
        n = self.num_states
        counts = np.array([self.num_actions(s) for s in range(n)], dtype=np.int64)
        self.sa_off = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=self.sa_off[1:])
        self.total_sa = int(self.sa_off[-1])
        self.r_flat = np.concatenate(self.rewards)
        indptr = [0]
        idx_parts, p_parts = [], []
        for s in range(n):
            for idx, p in self.transitions[s]:
                idx_parts.append(np.asarray(idx, dtype=np.int64))
                p_parts.append(np.asarray(p, dtype=float))
                indptr.append(indptr[-1] + len(idx))
        self.t_indptr = np.asarray(indptr, dtype=np.int64)
        self.t_idx = np.concatenate(idx_parts)
        self.t_prob = np.concatenate(p_parts)

    def flat_index(self, s: int, a: int) -> int:
        return int(self.sa_off[s]) + a

    def backup_flat(self, v_next: np.ndarray) -> np.ndarray:
        """One-step Bellman backup: q(s,a) = r(s,a) + gamma * E[v_next(s')], flat."""
        ev = np.add.reduceat(self.t_prob * v_next[self.t_idx], self.t_indptr[:-1])
        return self.r_flat + self.discount * ev

    def mix_flat(self, pol_flat: np.ndarray, q_flat: np.ndarray) -> np.ndarray:
        """Per-state policy mixture of a flat q table."""
        return np.add.reduceat(pol_flat * q_flat, self.sa_off[:-1])

    def max_flat(self, q_flat: np.ndarray) -> np.ndarray:
        return np.maximum.reduceat(q_flat, self.sa_off[:-1])

    def argmax_flat(self, q_flat: np.ndarray) -> np.ndarray:
        """Lowest-index per-state argmax of a flat q table."""
        vmax = self.max_flat(q_flat)
        rep = np.repeat(vmax, np.diff(self.sa_off))
        pos = np.arange(self.total_sa)
        hit = np.where(q_flat == rep, pos, self.total_sa)
        first = np.minimum.reduceat(hit, self.sa_off[:-1])
        return (first - self.sa_off[:-1]).astype(np.int64)


@dataclass
class StochasticPolicy:
    """Per-state action distribution over the legal actions of some MDP."""

    probs: list  # list[np.ndarray], probs[s] has length num_actions(s)

    def __post_init__(self):
        self.probs = [np.asarray(p, dtype=float) for p in self.probs]

    def prob(self, s: int) -> np.ndarray:
        return self.probs[s]

    def flat(self, mdp: TabularMDP) -> np.ndarray:
        if len(self.probs) != mdp.num_states:
            raise ConfigurationError("policy defined on a different state count")
        for s, p in enumerate(self.probs):
            if len(p) != mdp.num_actions(s):
                raise ConfigurationError(f"policy at state {s} has wrong action count")
        return np.concatenate(self.probs)

    def validate(self, mdp: TabularMDP | None = None):
        if mdp is not None:
            self.flat(mdp)
        for s, p in enumerate(self.probs):
            if abs(float(p.sum()) - 1.0) > PROB_TOL or (p < 0).any():
                raise ConfigurationError(f"policy at state {s} must sum to 1")


def deterministic_policy(mdp: TabularMDP, actions: np.ndarray) -> StochasticPolicy:
    probs = []
    for s in range(mdp.num_states):
        p = np.zeros(mdp.num_actions(s))
        p[int(actions[s])] = 1.0
        probs.append(p)
    return StochasticPolicy(probs)


@dataclass
class GatingFunction:
    """Per-state probability of overriding the decision maker."""

    phi: np.ndarray  # float, (n,)

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float)
        if ((self.phi < 0) | (self.phi > 1)).any():
            raise ConfigurationError("gating probabilities must lie in [0, 1]")


@dataclass
class ValueTable:
    """State values. `v` is the stage-1 table; `stages[t]` the value of being
    at a state with stages t..T still to play (stages[horizon+1] is zero)."""

    v: np.ndarray
    stages: np.ndarray  # (horizon + 2, n)

    def value(self, s: int) -> float:
        return float(self.v[s])


@dataclass
class QTable:
    """Action values in flat (s, a) layout, with the stage arrays retained."""

    q_flat: np.ndarray
    stages: np.ndarray  # (horizon + 2, total_sa)
    sa_off: np.ndarray

    def q(self, s: int) -> np.ndarray:
        return self.q_flat[self.sa_off[s] : self.sa_off[s + 1]]

    def value(self, s: int, a: int) -> float:
        return float(self.q_flat[self.sa_off[s] + a])


@dataclass
class DeltaTable:
    """Per-(state, action) gain of forcing the action and then handing control
    back to the evaluated policy: delta(s, a) = q(s, a) - v(s)."""

    d_flat: np.ndarray
    sa_off: np.ndarray

    def delta(self, s: int) -> np.ndarray:
        return self.d_flat[self.sa_off[s] : self.sa_off[s + 1]]

    def value(self, s: int, a: int) -> float:
        return float(self.d_flat[self.sa_off[s] + a])

    def max_per_state(self) -> np.ndarray:
        return np.maximum.reduceat(self.d_flat, self.sa_off[:-1])


@dataclass
class AugmentedValueTable:
    """Exact solution of the count-budgeted intervention problem.

    v_k[k, s] is the stage-1 value with k interventions still available;
    decision_k[k, s] is the stage-1 decision (-1 = pass, else override action).
    v_stages / decision_stages hold the full (stage, budget, state) arrays for
    the online stopping policy.
    """

    v_k: np.ndarray  # (K + 1, n)
    decision_k: np.ndarray  # (K + 1, n), int, -1 = pass
    v_stages: np.ndarray  # (horizon + 2, K + 1, n)
    decision_stages: np.ndarray  # (horizon + 1, K + 1, n)
    budget: int


@dataclass
class TrajectoryStep:
    state: int
    action: int
    reward: float
    intervened: bool


@dataclass
class Trajectory:
    """Realized episode: decision steps plus the state the episode ended in."""

    steps: list  # list[TrajectoryStep]
    final_state: int

    def __len__(self):
        return len(self.steps)

    @property
    def total_return(self) -> float:
        return float(sum(st.reward for st in self.steps))

    @property
    def interventions(self) -> int:
        return sum(1 for st in self.steps if st.intervened)

    def discounted_return(self, discount: float = 1.0) -> float:
        if discount == 1.0:
            return self.total_return
        g, acc = 1.0, 0.0
        for st in self.steps:
            acc += g * st.reward
            g *= discount
        return acc

    def validate(self, mdp: TabularMDP):
        states = [st.state for st in self.steps] + [self.final_state]
        if len(self.steps) > mdp.horizon:
            raise DomainError("trajectory longer than the horizon")
        for st, nxt in zip(self.steps, states[1:]):
            idx, p = mdp.transitions[st.state][st.action]
            if not any(i == nxt and q > 0 for i, q in zip(idx, p)):
                raise DomainError(f"unreachable step {st.state} -> {nxt}")
        if not mdp.terminal[self.final_state] and len(self.steps) != mdp.horizon:
            raise DomainError("episode ended early at a non-terminal state")


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------


def evaluate_policy(mdp: TabularMDP, pi: StochasticPolicy) -> tuple[ValueTable, QTable]:
    """Exact finite-horizon policy evaluation by backward induction.

    Returns the stage-1 (V, Q) tables; all stages are retained on the tables.
    """
    pol = pi.flat(mdp)
    T, n = mdp.horizon, mdp.num_states
    v_stages = np.zeros((T + 2, n))
    q_stages = np.zeros((T + 2, mdp.total_sa))
    for t in range(T, 0, -1):
        q_stages[t] = mdp.backup_flat(v_stages[t + 1])
        v_stages[t] = mdp.mix_flat(pol, q_stages[t])
    return (
        ValueTable(v=v_stages[1], stages=v_stages),
        QTable(q_flat=q_stages[1], stages=q_stages, sa_off=mdp.sa_off),
    )


def q_from_v(mdp: TabularMDP, v: ValueTable) -> QTable:
    """Recover the action values from a state-value table by adding the
    immediate reward and the expected continuation."""
    T = mdp.horizon
    q_stages = np.zeros((T + 2, mdp.total_sa))
    for t in range(T, 0, -1):
        q_stages[t] = mdp.backup_flat(v.stages[t + 1])
    return QTable(q_flat=q_stages[1], stages=q_stages, sa_off=mdp.sa_off)


def value_iteration(mdp: TabularMDP) -> tuple[StochasticPolicy, ValueTable, QTable]:
    """Exact finite-horizon optimal control.

    Returns the stage-1 greedy policy (lowest action index on ties) together
    with the optimal V*/Q* stage tables.
    """
    T, n = mdp.horizon, mdp.num_states
    v_stages = np.zeros((T + 2, n))
    q_stages = np.zeros((T + 2, mdp.total_sa))
    for t in range(T, 0, -1):
        q_stages[t] = mdp.backup_flat(v_stages[t + 1])
        v_stages[t] = mdp.max_flat(q_stages[t])
    greedy = mdp.argmax_flat(q_stages[1])
    pi = deterministic_policy(mdp, greedy)
    return (
        pi,
        ValueTable(v=v_stages[1], stages=v_stages),
        QTable(q_flat=q_stages[1], stages=q_stages, sa_off=mdp.sa_off),
    )


def delta_table(v: ValueTable, q: QTable) -> DeltaTable:
    """Intervention signal: delta(s, a) = q(s, a) - v(s)."""
    rep = np.repeat(v.v, np.diff(q.sa_off))
    return DeltaTable(d_flat=q.q_flat - rep, sa_off=q.sa_off)


def compose(
    pi_h: StochasticPolicy, phi: GatingFunction, pi_i: StochasticPolicy
) -> StochasticPolicy:
    """Mixture policy: with probability phi(s) act from the override policy,
    otherwise from the base policy."""
    if len(pi_h.probs) != len(pi_i.probs) or len(pi_h.probs) != len(phi.phi):
        raise ConfigurationError("compose inputs defined on different state counts")
    probs = [
        phi.phi[s] * pi_i.probs[s] + (1.0 - phi.phi[s]) * pi_h.probs[s]
        for s in range(len(pi_h.probs))
    ]
    return StochasticPolicy(probs)


def expected_return(mdp: TabularMDP, pi: StochasticPolicy) -> float:
    """J(pi): start-distribution-weighted stage-1 value."""
    v, _ = evaluate_policy(mdp, pi)
    return float(np.dot(mdp.start_dist, v.v))


def solve_budgeted(mdp: TabularMDP, pi_h: StochasticPolicy, budget: int) -> AugmentedValueTable:
    """Exact DP on the (state, interventions-remaining) space.

    v_k is the best value attainable by any adaptive rule that overrides the
    base policy at most k times per episode; budget 1 is the optimal-stopping
    single-intervention problem. Pass wins ties.
    """
    if budget < 0:
        raise ConfigurationError("budget must be >= 0")
    if budget > mdp.horizon:
        warnings.warn(
            f"budget {budget} exceeds horizon {mdp.horizon}; clamping", stacklevel=2
        )
        budget = mdp.horizon
    pol = pi_h.flat(mdp)
    T, n, K = mdp.horizon, mdp.num_states, budget
    v_stages = np.zeros((T + 2, K + 1, n))
    dec_stages = np.full((T + 1, K + 1, n), -1, dtype=np.int64)
    for t in range(T, 0, -1):
        for k in range(K + 1):
            q_cont = mdp.backup_flat(v_stages[t + 1, k])
            pass_v = mdp.mix_flat(pol, q_cont)
            if k == 0:
                v_stages[t, 0] = pass_v
                continue
            q_int = mdp.backup_flat(v_stages[t + 1, k - 1])
            best_int = mdp.max_flat(q_int)
            act = mdp.argmax_flat(q_int)
            take = best_int > pass_v
            v_stages[t, k] = np.where(take, best_int, pass_v)
            dec_stages[t, k] = np.where(take, act, -1)
    return AugmentedValueTable(
        v_k=v_stages[1].copy(),
        decision_k=dec_stages[1].copy(),
        v_stages=v_stages,
        decision_stages=dec_stages,
        budget=K,
    )


def occupancy(mdp: TabularMDP, pi: StochasticPolicy) -> np.ndarray:
    """Expected number of visits to each non-terminal state over an episode.

    The total is the expected number of decision steps, which is the exact
    denominator for intervention-frequency accounting.
    """
    pol = pi.flat(mdp)
    n = mdp.num_states
    live = ~mdp.terminal
    # policy-folded transition kernel: expand pi(a|s) over the outcome entries
    lens = np.diff(mdp.t_indptr)
    row_pol = np.repeat(pol, lens)
    occ = np.zeros(n)
    d = mdp.start_dist.copy()
    for _ in range(mdp.horizon):
        occ += np.where(live, d, 0.0)
        # advance one step: mass at terminal states stays put (self-loop)
        src = np.repeat(d, np.diff(mdp.sa_off))  # per (s, a)
        w = np.repeat(src, lens) * row_pol * mdp.t_prob
        d = np.zeros(n)
        np.add.at(d, mdp.t_idx, w)
    return occ


# ---------------------------------------------------------------------------
# interchange format
# ---------------------------------------------------------------------------


def mdp_to_doc(mdp: TabularMDP) -> str:
    """Serialize to the interchange document. Probabilities are written as
    decimal strings (shortest round-trip repr) so parsing is bit-exact."""
    doc = {
        "states": mdp.num_states,
        "actions": [mdp.num_actions(s) for s in range(mdp.num_states)],
        "transitions": [
            [s, a, int(s2), repr(float(p))]
            for s in range(mdp.num_states)
            for a in range(mdp.num_actions(s))
            for s2, p in zip(*mdp.transitions[s][a])
        ],
        "rewards": [
            [s, a, repr(float(mdp.rewards[s][a]))]
            for s in range(mdp.num_states)
            for a in range(mdp.num_actions(s))
        ],
        "terminals": [int(s) for s in np.flatnonzero(mdp.terminal)],
        "start": [[int(s), repr(float(p))] for s, p in enumerate(mdp.start_dist) if p > 0],
        "horizon": mdp.horizon,
        "discount": repr(float(mdp.discount)),
        "reward_range": [repr(float(mdp.r_min)), repr(float(mdp.r_max))],
    }
    return json.dumps(doc, indent=1)


def mdp_from_doc(text: str) -> TabularMDP:
    doc = json.loads(text)
    n = int(doc["states"])
    counts = [int(c) for c in doc["actions"]]
    trans = [[([], []) for _ in range(counts[s])] for s in range(n)]
    for s, a, s2, p in doc["transitions"]:
        trans[s][a][0].append(int(s2))
        trans[s][a][1].append(float(p))
    transitions = [
        [(np.asarray(idx, dtype=np.int64), np.asarray(pr)) for idx, pr in acts]
        for acts in trans
    ]
    rewards = [np.zeros(counts[s]) for s in range(n)]
    for s, a, r in doc["rewards"]:
        rewards[s][a] = float(r)
    terminal = np.zeros(n, dtype=bool)
    terminal[[int(s) for s in doc["terminals"]]] = True
    start = np.zeros(n)
    for s, p in doc["start"]:
        start[int(s)] = float(p)
    lo, hi = doc.get("reward_range", ["0.0", "1.0"])
    return TabularMDP(
        transitions=transitions,
        rewards=rewards,
        terminal=terminal,
        start_dist=start,
        horizon=int(doc["horizon"]),
        discount=float(doc["discount"]),
        r_min=float(lo),
        r_max=float(hi),
    )
