"""Slow, independent reference implementations used to cross-check the fast
vectorized solvers, plus a random-instance generator.

The evaluators here are deliberately written as plain memoized recursions over
(stage, state[, budget]) dictionaries -- no flat arrays, no reduceat -- and the
tiny-instance checks below them validate the recursions themselves against
explicit enumeration of whole trajectory trees and whole rule spaces.
"""

from __future__ import annotations

from itertools import product

import numpy as np

from advisor_lab.mdp import StochasticPolicy, TabularMDP


# ---------------------------------------------------------------------------
# random instances
# ---------------------------------------------------------------------------


def random_mdp(rng, max_states=8, max_actions=3, max_horizon=5):
    n = int(rng.integers(2, max_states + 1))
    terminal = np.zeros(n, dtype=bool)
    if rng.random() < 0.6:
        terminal[n - 1] = True
    transitions, rewards = [], []
    for s in range(n):
        if terminal[s]:
            transitions.append([(np.array([s], dtype=np.int64), np.array([1.0]))])
            rewards.append(np.array([0.0]))
            continue
        acts, rs = [], []
        for _ in range(int(rng.integers(1, max_actions + 1))):
            k = int(rng.integers(1, min(3, n) + 1))
            nxt = rng.choice(n, size=k, replace=False).astype(np.int64)
            acts.append((nxt, rng.dirichlet(np.ones(k))))
            rs.append(float(rng.random()))
        transitions.append(acts)
        rewards.append(np.array(rs))
    start = rng.dirichlet(np.ones(n))
    if terminal.any():
        start = np.where(terminal, 0.0, start)
        start = start / start.sum()
    return TabularMDP(
        transitions=transitions,
        rewards=rewards,
        terminal=terminal,
        start_dist=start,
        horizon=int(rng.integers(1, max_horizon + 1)),
        discount=1.0 if rng.random() < 0.5 else float(rng.uniform(0.5, 1.0)),
    )


def random_policy(rng, mdp) -> StochasticPolicy:
    probs = []
    for s in range(mdp.num_states):
        na = mdp.num_actions(s)
        probs.append(np.array([1.0]) if na == 1 else rng.dirichlet(np.ones(na)))
    return StochasticPolicy(probs)


# ---------------------------------------------------------------------------
# memoized reference evaluators
# ---------------------------------------------------------------------------


def ref_policy_values(mdp, policy):
    """v[(t, s)] and q[(t, s, a)] of the policy, by dictionary recursion."""
    v, q = {}, {}

    def value(t, s):
        if t > mdp.horizon or mdp.terminal[s]:
            return 0.0
        if (t, s) not in v:
            acc = 0.0
            for a in range(mdp.num_actions(s)):
                q[(t, s, a)] = qval(t, s, a)
                acc += float(policy.probs[s][a]) * q[(t, s, a)]
            v[(t, s)] = acc
        return v[(t, s)]

    def qval(t, s, a):
        idx, pr = mdp.transitions[s][a]
        cont = sum(float(p) * value(t + 1, int(s2)) for s2, p in zip(idx, pr))
        return float(mdp.rewards[s][a]) + mdp.discount * cont

    for s in range(mdp.num_states):
        value(1, s)
        for a in range(mdp.num_actions(s)):
            q[(1, s, a)] = qval(1, s, a)
    return v, q


def ref_return(mdp, policy) -> float:
    v, _ = ref_policy_values(mdp, policy)
    return sum(
        float(p) * v.get((1, s), 0.0) for s, p in enumerate(mdp.start_dist) if p > 0
    )


def ref_optimal_values(mdp):
    """v*[(t, s)] by dictionary recursion over the max-backup."""
    v = {}

    def value(t, s):
        if t > mdp.horizon or mdp.terminal[s]:
            return 0.0
        if (t, s) not in v:
            best = -np.inf
            for a in range(mdp.num_actions(s)):
                idx, pr = mdp.transitions[s][a]
                cont = sum(float(p) * value(t + 1, int(s2)) for s2, p in zip(idx, pr))
                best = max(best, float(mdp.rewards[s][a]) + mdp.discount * cont)
            v[(t, s)] = best
        return v[(t, s)]

    for s in range(mdp.num_states):
        value(1, s)
    return v


def ref_budgeted_value(mdp, policy, budget) -> float:
    """Best start value over adaptive rules that override the policy at most
    `budget` times, by dictionary recursion over (stage, state, remaining)."""
    memo = {}

    def value(t, s, k):
        if t > mdp.horizon or mdp.terminal[s]:
            return 0.0
        key = (t, s, k)
        if key not in memo:
            def qv(a, k2):
                idx, pr = mdp.transitions[s][a]
                cont = sum(float(p) * value(t + 1, int(s2), k2) for s2, p in zip(idx, pr))
                return float(mdp.rewards[s][a]) + mdp.discount * cont

            passed = sum(
                float(policy.probs[s][a]) * qv(a, k) for a in range(mdp.num_actions(s))
            )
            best = passed
            if k > 0:
                best = max(best, max(qv(a, k - 1) for a in range(mdp.num_actions(s))))
            memo[key] = best
        return memo[key]

    return sum(
        float(p) * value(1, s, budget) for s, p in enumerate(mdp.start_dist) if p > 0
    )


def ref_frequency(mdp, policy, phi) -> float:
    """Expected gate firings per expected decision step, by forward recursion
    over a dictionary state distribution."""
    dist = {s: float(p) for s, p in enumerate(mdp.start_dist) if p > 0}
    fires = steps = 0.0
    for _ in range(mdp.horizon):
        nxt = {}
        for s, mass in dist.items():
            if mdp.terminal[s]:
                continue
            steps += mass
            fires += mass * float(phi[s])
            for a in range(mdp.num_actions(s)):
                pa = float(policy.probs[s][a])
                if pa == 0.0:
                    continue
                idx, pr = mdp.transitions[s][a]
                for s2, p in zip(idx, pr):
                    nxt[int(s2)] = nxt.get(int(s2), 0.0) + mass * pa * float(p)
        dist = nxt
    return fires / steps if steps > 0 else 0.0


# ---------------------------------------------------------------------------
# exhaustive tiny-instance checks (validate the recursions above)
# ---------------------------------------------------------------------------


def tree_return(mdp, policy) -> float:
    """Expected return by explicit enumeration of every trajectory. Exponential
    in the horizon; only for tiny instances."""

    def go(t, s, disc):
        if t > mdp.horizon or mdp.terminal[s]:
            return 0.0
        total = 0.0
        for a in range(mdp.num_actions(s)):
            pa = float(policy.probs[s][a])
            if pa == 0.0:
                continue
            total += pa * disc * float(mdp.rewards[s][a])
            idx, pr = mdp.transitions[s][a]
            for s2, p in zip(idx, pr):
                total += pa * float(p) * go(t + 1, int(s2), disc * mdp.discount)
        return total

    return sum(float(p) * go(1, s, 1.0) for s, p in enumerate(mdp.start_dist) if p > 0)


def reachable_points(mdp):
    """(stage, state) pairs a trajectory can occupy, in stage order."""
    cur = {s for s, p in enumerate(mdp.start_dist) if p > 0}
    pts = []
    for t in range(1, mdp.horizon + 1):
        live = sorted(s for s in cur if not mdp.terminal[s])
        pts += [(t, s) for s in live]
        nxt = set()
        for s in live:
            for a in range(mdp.num_actions(s)):
                nxt.update(int(x) for x in mdp.transitions[s][a][0])
        cur = nxt
    return pts


def rule_space_size(mdp) -> int:
    size = 1
    for _, s in reachable_points(mdp):
        size *= mdp.num_actions(s) + 1
    return size


def best_single_rule_value(mdp, policy) -> float:
    """Max start value over every deterministic rule mapping reachable
    (stage, state) points to pass / a forced action, firing at most once per
    episode. Brute force over the whole rule space."""
    pts = reachable_points(mdp)
    options = [[-1] + list(range(mdp.num_actions(s))) for _, s in pts]
    best = -np.inf
    for assignment in product(*options):
        choice = dict(zip(pts, assignment))

        memo = {}

        def value(t, s, used):
            if t > mdp.horizon or mdp.terminal[s]:
                return 0.0
            key = (t, s, used)
            if key not in memo:
                c = -1 if used else choice.get((t, s), -1)

                def qv(a, used2):
                    idx, pr = mdp.transitions[s][a]
                    cont = sum(
                        float(p) * value(t + 1, int(s2), used2)
                        for s2, p in zip(idx, pr)
                    )
                    return float(mdp.rewards[s][a]) + mdp.discount * cont

                if c >= 0:
                    memo[key] = qv(c, True)
                else:
                    memo[key] = sum(
                        float(policy.probs[s][a]) * qv(a, used)
                        for a in range(mdp.num_actions(s))
                    )
            return memo[key]

        j = sum(
            float(p) * value(1, s, False)
            for s, p in enumerate(mdp.start_dist)
            if p > 0
        )
        best = max(best, j)
    return best


def best_staged_policy_value(mdp) -> float:
    """Max start value over every stage-dependent deterministic policy on the
    reachable points. Brute force; validates the optimal-control recursion."""
    pts = reachable_points(mdp)
    options = [list(range(mdp.num_actions(s))) for _, s in pts]
    best = -np.inf
    for assignment in product(*options):
        choice = dict(zip(pts, assignment))

        memo = {}

        def value(t, s):
            if t > mdp.horizon or mdp.terminal[s]:
                return 0.0
            if (t, s) not in memo:
                a = choice[(t, s)]
                idx, pr = mdp.transitions[s][a]
                cont = sum(float(p) * value(t + 1, int(s2)) for s2, p in zip(idx, pr))
                memo[(t, s)] = float(mdp.rewards[s][a]) + mdp.discount * cont
            return memo[(t, s)]

        j = sum(float(p) * value(1, s) for s, p in enumerate(mdp.start_dist) if p > 0)
        best = max(best, j)
    return best
