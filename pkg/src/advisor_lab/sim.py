"""Monte Carlo rollout engine and experiment runners.

Reproducibility model: every episode draws from its own counter-based stream,
keyed by (master seed, episode index) through a Philox generator. Results are
therefore bit-identical for a given config regardless of how episodes are
scheduled across workers. Episodes sharing an index across strategy cells also
share their uniforms (common random numbers), which pairs the comparisons.
"""

from __future__ import annotations

import os
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .mdp import (
    GatingFunction,
    StochasticPolicy,
    TabularMDP,
    Trajectory,
    TrajectoryStep,
    evaluate_policy,
    occupancy,
    value_iteration,
)

DEFAULT_ROLLOUTS = 64  # continuation rollouts per evaluated position
DEFAULT_EPISODES = 2560  # full episodes per sweep cell
PAPER_SCALE_POSITIONS = 100_000  # reference preset, not an acceptance target


def episode_stream(master_seed: int, index: int) -> np.random.Generator:
    """Independent stream for one episode: counter-based, splittable by key."""
    return np.random.Generator(np.random.Philox(key=[master_seed & (2**64 - 1), index]))


@dataclass
class ExperimentConfig:
    env_id: str
    skill: str = "L3"
    strategies: tuple = ("human", "expert", "valuemax")
    episodes: int = DEFAULT_EPISODES
    rollouts: int = DEFAULT_ROLLOUTS
    seed: int = 0
    workers: int = 1
    budgets: tuple = (0.0, 0.01, 0.05, 0.1, 0.25, 0.5, 1.0)
    opponent_skill: str | None = None  # board game: defaults to the player skill

    def __post_init__(self):
        if self.episodes < 1 or self.rollouts < 1:
            raise ConfigurationError("episodes and rollouts must be >= 1")


@dataclass
class RunStats:
    strategy: str
    skill: str
    gate: str
    budget_target: float | None
    frequency: float
    mean_return: float
    std_err: float
    episodes: int
    seed: int


# ---------------------------------------------------------------------------
# fast categorical sampling tables
# ---------------------------------------------------------------------------


class _Sampler:
    """Cumulative-probability tables for one policy on one MDP.

    Plain python lists + bisect beat numpy here: every draw is over a handful
    of outcomes and the loop is episode-serial by design.
    """

    def __init__(self, mdp: TabularMDP, policy: StochasticPolicy):
        self.horizon = mdp.horizon
        self.discount = mdp.discount
        self.terminal = mdp.terminal.tolist()
        self.act_cum = [np.cumsum(p).tolist() for p in policy.probs]
        self.sa_off = mdp.sa_off.tolist()
        self.out_cum, self.out_next, self.out_rew = [], [], []
        has_outcomes = getattr(mdp, "outcome_rewards", None) is not None
        for sa in range(mdp.total_sa):
            lo, hi = mdp.t_indptr[sa], mdp.t_indptr[sa + 1]
            self.out_cum.append(np.cumsum(mdp.t_prob[lo:hi]).tolist())
            self.out_next.append(mdp.t_idx[lo:hi].tolist())
            if has_outcomes:
                self.out_rew.append(mdp.outcome_rewards[lo:hi].tolist())
            else:
                r = float(mdp.r_flat[sa])
                self.out_rew.append([r] * (hi - lo))

    def start_cum(self, mdp: TabularMDP):
        return np.cumsum(mdp.start_dist).tolist()

    def step(self, s: int, a: int, u: float):
        sa = self.sa_off[s] + a
        i = bisect_right(self.out_cum[sa], u)
        i = min(i, len(self.out_next[sa]) - 1)
        return self.out_next[sa][i], self.out_rew[sa][i]

    def action(self, s: int, u: float) -> int:
        cum = self.act_cum[s]
        return min(bisect_right(cum, u), len(cum) - 1)


def _gate_list(gate: GatingFunction | None, n: int):
    return gate.phi.tolist() if gate is not None else [0.0] * n


# ---------------------------------------------------------------------------
# rollout
# ---------------------------------------------------------------------------


def rollout(
    mdp: TabularMDP,
    policy: StochasticPolicy,
    gate: GatingFunction | None = None,
    override: StochasticPolicy | None = None,
    rng: np.random.Generator | None = None,
    start_state: int | None = None,
) -> Trajectory:
    """Sample one episode. At each decision step the gate Bernoulli is drawn
    first, then the action (from the override policy if the gate fired)."""
    if (gate is None) != (override is None):
        raise ConfigurationError("gate and override must be given together")
    rng = rng or np.random.default_rng()
    base = _Sampler(mdp, policy)
    ov = _Sampler(mdp, override) if override is not None else None
    phi = _gate_list(gate, mdp.num_states)
    block = rng.random(1 + 3 * mdp.horizon)
    if start_state is None:
        s = min(
            bisect_right(base.start_cum(mdp), block[0]), mdp.num_states - 1
        )
    else:
        s = start_state
    return _play(base, ov, phi, s, block, 1)


def _play(base, ov, phi, s, block, off):
    steps = []
    for t in range(base.horizon):
        if base.terminal[s]:
            break
        u_gate, u_act, u_trans = block[off], block[off + 1], block[off + 2]
        off += 3
        fired = u_gate < phi[s]
        a = (ov if fired else base).action(s, u_act)
        s2, r = base.step(s, a, u_trans)
        steps.append(TrajectoryStep(state=s, action=a, reward=r, intervened=fired))
        s = s2
    return Trajectory(steps=steps, final_state=s)


# ---------------------------------------------------------------------------
# episode batches (shared by the experiment runners)
# ---------------------------------------------------------------------------

_WORK = {}


def _call_span(span):
    return _WORK["fn"](*span)


def _run_sweep_cell(mdp, pi_h, gate, override, episodes, seed, workers):
    base = _Sampler(mdp, pi_h)
    ov = _Sampler(mdp, override) if override is not None else None
    phi = _gate_list(gate, mdp.num_states)
    start_cum = base.start_cum(mdp)
    n_last = mdp.num_states - 1

    def run_range(lo, hi):
        out = np.empty((hi - lo, 3))
        for i in range(lo, hi):
            gen = episode_stream(seed, i)
            block = gen.random(1 + 3 * base.horizon)
            s = min(bisect_right(start_cum, block[0]), n_last)
            traj = _play(base, ov, phi, s, block, 1)
            out[i - lo] = (
                traj.discounted_return(base.discount),
                traj.interventions,
                len(traj),
            )
        return out

    rows = _map_chunks(run_range, episodes, workers)
    returns, ints, steps = rows[:, 0], rows[:, 1], rows[:, 2]
    mean = float(returns.mean())
    se = float(returns.std(ddof=0) / np.sqrt(episodes))
    freq = float(ints.sum() / steps.sum()) if steps.sum() > 0 else 0.0
    return mean, se, freq


def _map_chunks(run_range, total, workers):
    """Execute run_range over [0, total) in episode-index order, optionally
    fanning chunks out to worker processes. Aggregation order is fixed by the
    chunk index, so the worker count cannot affect the result."""
    workers = max(1, int(workers))
    if workers == 1 or total < 256:
        return run_range(0, total)
    bounds = np.linspace(0, total, workers * 4 + 1, dtype=int)
    spans = [(int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:]) if lo < hi]
    import multiprocessing as mp

    # run_range is a closure: hand it to forked workers via module state
    _WORK["fn"] = run_range
    with mp.get_context("fork").Pool(processes=workers) as pool:
        parts = pool.map(_call_span, spans)
    return np.concatenate(parts, axis=0)


# ---------------------------------------------------------------------------
# experiment protocols
# ---------------------------------------------------------------------------


def mc_expected_return(
    mdp: TabularMDP,
    pi: StochasticPolicy,
    episodes: int,
    seed: int,
    workers: int = 1,
) -> RunStats:
    """Plain Monte Carlo estimate of J(pi)."""
    mean, se, freq = _run_sweep_cell(mdp, pi, None, None, episodes, seed, workers)
    return RunStats("policy", "-", "none", None, freq, mean, se, episodes, seed)


def run_single_intervention_experiment(
    mdp: TabularMDP,
    pi_h: StochasticPolicy,
    strategies,
    positions: int,
    rollouts: int,
    seed: int,
    workers: int = 1,
    skill_label: str = "-",
):
    """One-shot strategy comparison: sample start positions from the decision
    maker's occupancy distribution, apply each strategy's single action, then
    average `rollouts` continuations played by the decision maker.

    Positions and continuation uniforms are shared across strategies (common
    random numbers), pairing the comparison.
    """
    from .intervene import expert_override, valuemax_override

    for name in strategies:
        if name not in ("human", "expert", "valuemax"):
            raise ConfigurationError(f"unknown strategy {name!r}")
    _, q_h = evaluate_policy(mdp, pi_h)
    _, _, q_star = value_iteration(mdp)
    acts = {
        "human": None,
        "expert": [int(np.argmax(q_star.q(s))) for s in range(mdp.num_states)],
        "valuemax": [int(np.argmax(q_h.q(s))) for s in range(mdp.num_states)],
    }
    occ = occupancy(mdp, pi_h)
    total = occ.sum()
    if total <= 0:
        raise ConfigurationError("no decision steps: cannot sample positions")
    pos_cum = np.cumsum(occ / total).tolist()
    base = _Sampler(mdp, pi_h)
    n_last = mdp.num_states - 1
    T, M = mdp.horizon, rollouts
    block_len = 3 + M * (3 * T)
    names = list(strategies)
    no_gate = [0.0] * mdp.num_states

    def run_range(lo, hi):
        out = np.empty((hi - lo, len(names)))
        for i in range(lo, hi):
            gen = episode_stream(seed, i)
            block = gen.random(block_len)
            s0 = min(bisect_right(pos_cum, block[0]), n_last)
            for j, name in enumerate(names):
                if name == "human":
                    a = base.action(s0, block[1])
                else:
                    a = acts[name][s0]
                s1, r0 = base.step(s0, a, block[2])  # shared transition uniform
                acc = 0.0
                off = 3
                for _ in range(M):
                    traj = _play(base, None, no_gate, s1, block, off)
                    acc += traj.discounted_return(base.discount)
                    off += 3 * T
                # the continuation starts one stage after the forced action
                out[i - lo, j] = r0 + base.discount * acc / M
        return out

    rows = _map_chunks(run_range, positions, workers)
    stats = []
    for j, name in enumerate(names):
        col = rows[:, j]
        stats.append(
            RunStats(
                strategy=name,
                skill=skill_label,
                gate="single",
                budget_target=None,
                frequency=0.0 if name == "human" else 1.0 / max(T, 1),
                mean_return=float(col.mean()),
                std_err=float(col.std(ddof=0) / np.sqrt(positions)),
                episodes=positions,
                seed=seed,
            )
        )
    return stats


def run_budget_sweep(
    mdp: TabularMDP,
    pi_h: StochasticPolicy,
    strategies,
    budgets,
    episodes: int,
    seed: int,
    workers: int = 1,
    skill_label: str = "-",
):
    """Full-episode evaluation of gated strategies across a budget grid.

    Each (strategy, budget) cell simulates `episodes` episodes of the composed
    policy and reports mean return, standard error, and the realized
    intervention frequency. Rows are sorted by realized frequency.
    """
    from .intervene import calibrate_budget, expert_override, threshold_gate, valuemax_override
    from .mdp import delta_table

    if not budgets:
        raise ConfigurationError("budget list must be non-empty")
    v_h, q_h = evaluate_policy(mdp, pi_h)
    _, _, q_star = value_iteration(mdp)
    delta = delta_table(v_h, q_h)
    overrides = {}
    for name in strategies:
        if name == "human":
            overrides[name] = None
        elif name == "expert":
            overrides[name] = expert_override(q_star)
        elif name == "valuemax":
            overrides[name] = valuemax_override(q_h)
        else:
            raise ConfigurationError(f"unknown strategy {name!r}")

    stats = []
    for name in strategies:
        override = overrides[name]
        for b in budgets:
            if override is None:
                gate = None
                gate_desc = "none"
            else:
                spec = calibrate_budget(mdp, pi_h, override, float(b))
                gate = threshold_gate(mdp, delta, spec)
                gate_desc = f"tau={spec.threshold:.6g},p={spec.boundary_prob:.6g}"
            mean, se, freq = _run_sweep_cell(
                mdp, pi_h, gate, override, episodes, seed, workers
            )
            stats.append(
                RunStats(
                    strategy=name,
                    skill=skill_label,
                    gate=gate_desc,
                    budget_target=float(b),
                    frequency=freq,
                    mean_return=mean,
                    std_err=se,
                    episodes=episodes,
                    seed=seed,
                )
            )
            if override is None:
                break  # the human baseline has no gate: one row
    stats.sort(key=lambda r: (r.frequency, r.strategy, r.budget_target or 0.0))
    return stats


def sweep_trajectories(
    mdp: TabularMDP,
    pi_h: StochasticPolicy,
    gate: GatingFunction | None,
    override: StochasticPolicy | None,
    episodes: int,
    seed: int,
):
    """Full trajectories (with intervened flags) for downstream analysis."""
    base = _Sampler(mdp, pi_h)
    ov = _Sampler(mdp, override) if override is not None else None
    phi = _gate_list(gate, mdp.num_states)
    start_cum = base.start_cum(mdp)
    out = []
    for i in range(episodes):
        gen = episode_stream(seed, i)
        block = gen.random(1 + 3 * base.horizon)
        s = min(bisect_right(start_cum, block[0]), mdp.num_states - 1)
        out.append(_play(base, ov, phi, s, block, 1))
    return out
