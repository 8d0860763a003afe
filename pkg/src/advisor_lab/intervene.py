"""Intervention strategies: override policies, threshold gating, budget
calibration, and single-intervention selection (offline and online)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError
from .mdp import (
    AugmentedValueTable,
    DeltaTable,
    GatingFunction,
    QTable,
    StochasticPolicy,
    TabularMDP,
    Trajectory,
    compose,
    delta_table,
    evaluate_policy,
    occupancy,
)

FREQ_TOL = 1e-6

STRATEGY_NAMES = ("human", "expert", "valuemax")


@dataclass(frozen=True)
class GateSpec:
    """Threshold rule on the per-state intervention signal.

    The gate opens with probability 1 strictly above the threshold and with
    `boundary_prob` exactly at it; the randomized boundary makes every budget
    exactly attainable.
    """

    threshold: float
    boundary_prob: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.boundary_prob <= 1.0):
            raise ConfigurationError("boundary_prob must lie in [0, 1]")


@dataclass
class InterventionPolicy:
    """A realized gate plus the override policy used when it fires.

    `stage_decisions`, when present, carries the stage-indexed decision table
    of the budgeted DP for exact online (optimal-stopping) play.
    """

    gate: GatingFunction
    override: StochasticPolicy
    stage_decisions: np.ndarray | None = None  # (horizon + 1, K + 1, n)
    budget: int | None = None


def _argmax_policy(q: QTable) -> StochasticPolicy:
    probs = []
    for s in range(len(q.sa_off) - 1):
        row = q.q(s)
        p = np.zeros(len(row))
        p[int(np.argmax(row))] = 1.0
        probs.append(p)
    return StochasticPolicy(probs)


def valuemax_override(q_h: QTable) -> StochasticPolicy:
    """Deterministic argmax of the decision maker's own action values: the
    best action assuming the human plays out the rest of the episode."""
    return _argmax_policy(q_h)


def expert_override(q_star: QTable) -> StochasticPolicy:
    """Deterministic argmax of the optimal action values: the best action
    assuming optimal continuation."""
    return _argmax_policy(q_star)


def threshold_gate(mdp: TabularMDP, delta: DeltaTable, spec: GateSpec) -> GatingFunction:
    """Open the gate where the best available gain exceeds the threshold.

    Exactly-at-threshold states open with `boundary_prob`; terminal states
    never open.
    """
    dmax = delta.max_per_state()
    phi = np.where(dmax > spec.threshold, 1.0, 0.0)
    phi = np.where(dmax == spec.threshold, spec.boundary_prob, phi)
    phi[mdp.terminal] = 0.0
    return GatingFunction(phi)


def intervention_frequency(
    mdp: TabularMDP,
    pi_h: StochasticPolicy,
    gate: GatingFunction,
    override: StochasticPolicy,
) -> float:
    """Exact expected intervention rate of the composed policy, as a fraction
    of its expected decision steps."""
    composed = compose(pi_h, gate, override)
    occ = occupancy(mdp, composed)
    steps = float(occ.sum())
    if steps == 0.0:
        return 0.0
    return float(np.dot(occ, gate.phi)) / steps


def calibrate_budget(
    mdp: TabularMDP,
    pi_h: StochasticPolicy,
    override: StochasticPolicy,
    budget: float,
) -> GateSpec:
    """Largest threshold (with a boundary probability) whose composed-policy
    intervention frequency stays within the budget.

    Frequency is evaluated exactly for each candidate via occupancy of the
    composed policy, so the search needs no separate fixed-point pass: the
    candidate thresholds are the distinct per-state signal maxima, scanned
    from the top, and the boundary probability is bisected at the first
    unaffordable level.
    """
    if not (0.0 <= budget <= 1.0):
        raise ConfigurationError("budget must lie in [0, 1]")
    v_h, q_h = evaluate_policy(mdp, pi_h)
    delta = delta_table(v_h, q_h)
    dmax = delta.max_per_state()[~mdp.terminal]

    def freq(spec: GateSpec) -> float:
        return intervention_frequency(
            mdp, pi_h, threshold_gate(mdp, delta, spec), override
        )

    if budget == 0.0 or dmax.size == 0:
        return GateSpec(threshold=float(dmax.max()) if dmax.size else 0.0, boundary_prob=0.0)
    if freq(GateSpec(0.0, 1.0)) <= budget + FREQ_TOL:
        return GateSpec(threshold=0.0, boundary_prob=1.0)

    candidates = np.unique(dmax)[::-1]  # descending distinct signal maxima
    chosen = None
    for c in candidates:
        spec_full = GateSpec(float(c), 1.0)
        if freq(spec_full) <= budget + FREQ_TOL:
            chosen = spec_full
            continue
        # first unaffordable level: randomize exactly at the boundary
        lo, hi = 0.0, 1.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if freq(GateSpec(float(c), mid)) <= budget + FREQ_TOL:
                lo = mid
            else:
                hi = mid
        spec = GateSpec(float(c), lo)
        while freq(spec) > budget + FREQ_TOL and spec.boundary_prob > 0:
            spec = GateSpec(float(c), max(0.0, spec.boundary_prob - 1e-9))
        return spec
    return chosen if chosen is not None else GateSpec(float(candidates[0]), 0.0)


def solve_budgeted_forced(
    mdp: TabularMDP,
    pi_h: StochasticPolicy,
    budget: int,
    override: StochasticPolicy,
) -> AugmentedValueTable:
    """Budgeted DP where the intervene branch must play a fixed override
    policy (e.g. the expert action) instead of the best available action.

    The gate timing is still optimized; only the override is constrained, so
    this prices a strategy that decides *when* optimally but *what* by decree.
    """
    if budget < 0:
        raise ConfigurationError("budget must be >= 0")
    budget = min(budget, mdp.horizon)
    pol = pi_h.flat(mdp)
    ov = override.flat(mdp)
    ov_act = np.array([int(np.argmax(override.probs[s])) for s in range(mdp.num_states)])
    T, n, K = mdp.horizon, mdp.num_states, budget
    v_stages = np.zeros((T + 2, K + 1, n))
    dec_stages = np.full((T + 1, K + 1, n), -1, dtype=np.int64)
    for t in range(T, 0, -1):
        for k in range(K + 1):
            pass_v = mdp.mix_flat(pol, mdp.backup_flat(v_stages[t + 1, k]))
            if k == 0:
                v_stages[t, 0] = pass_v
                continue
            int_v = mdp.mix_flat(ov, mdp.backup_flat(v_stages[t + 1, k - 1]))
            take = int_v > pass_v
            v_stages[t, k] = np.where(take, int_v, pass_v)
            dec_stages[t, k] = np.where(take, ov_act, -1)
    return AugmentedValueTable(
        v_k=v_stages[1].copy(),
        decision_k=dec_stages[1].copy(),
        v_stages=v_stages,
        decision_stages=dec_stages,
        budget=K,
    )


def select_single_offline(trajectory: Trajectory, delta: DeltaTable) -> tuple[int, int]:
    """Best single intervention for a realized trajectory: the earliest step
    whose state attains the trajectory-wide maximum gain, with its argmax
    action (earliest step, then lowest action index, on ties)."""
    if len(trajectory) == 0:
        raise DomainError("cannot select an intervention on an empty trajectory")
    gains = [float(np.max(delta.delta(st.state))) for st in trajectory.steps]
    best_step = int(np.argmax(gains))  # argmax returns the earliest maximum
    state = trajectory.steps[best_step].state
    action = int(np.argmax(delta.delta(state)))
    return best_step, action


def select_single_online(
    mdp: TabularMDP, pi_h: StochasticPolicy, augmented: AugmentedValueTable
) -> InterventionPolicy:
    """Optimal-stopping intervention policy from the budget-1 DP: the gate
    opens exactly where the DP decides to intervene, and the override plays
    the recorded DP action."""
    if augmented.budget < 1:
        raise ConfigurationError("online selection needs a budget of at least 1")
    dec = augmented.decision_k[1]
    phi = (dec >= 0).astype(float)
    phi[mdp.terminal] = 0.0
    probs = []
    for s in range(mdp.num_states):
        p = np.zeros(mdp.num_actions(s))
        p[int(dec[s]) if dec[s] >= 0 else 0] = 1.0
        probs.append(p)
    return InterventionPolicy(
        gate=GatingFunction(phi),
        override=StochasticPolicy(probs),
        stage_decisions=augmented.decision_stages,
        budget=augmented.budget,
    )


def evaluate_online(
    mdp: TabularMDP, pi_h: StochasticPolicy, augmented: AugmentedValueTable
) -> float:
    """Start value of the stage-indexed budgeted decision policy, computed by
    an independent forward pass over the (state, budget) process."""
    pol = pi_h.flat(mdp)
    T, n, K = mdp.horizon, mdp.num_states, augmented.budget
    # d[k, s]: probability of being at s with k interventions left
    d = np.zeros((K + 1, n))
    d[K] = mdp.start_dist
    total = 0.0
    lens = np.diff(mdp.t_indptr)
    acount = np.diff(mdp.sa_off)
    for t in range(1, T + 1):
        nxt = np.zeros((K + 1, n))
        for k in range(K + 1):
            mass = d[k]
            if not mass.any():
                continue
            dec = augmented.decision_stages[t, k] if k >= 1 else np.full(n, -1)
            # split mass into pass states and intervene states
            for branch, target_k in ((dec < 0, k), (dec >= 0, k - 1)):
                m = np.where(branch, mass, 0.0)
                if not m.any():
                    continue
                if target_k == k:
                    act_probs = pol
                else:
                    act_probs = np.zeros(mdp.total_sa)
                    for s in np.flatnonzero(m):
                        act_probs[mdp.sa_off[s] + dec[s]] = 1.0
                src = np.repeat(m, acount) * act_probs
                total += mdp.discount ** (t - 1) * float(np.dot(src, mdp.r_flat))
                w = np.repeat(src, lens) * mdp.t_prob
                np.add.at(nxt[target_k], mdp.t_idx, w)
        d = nxt
    return total
