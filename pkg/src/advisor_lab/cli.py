"""Command-line front door: solve environments, run experiments, launch the
session server. Every command is deterministic given its full flag set."""

from __future__ import annotations

import json
import os
import sys

import click
import numpy as np

from . import __version__
from .behavior import SKILL_NAMES, parse_skill
from .concepts import concept_report, extractor_for
from .environments import build_environment, list_environments
from .errors import ConfigurationError, DomainError
from .intervene import (
    STRATEGY_NAMES,
    calibrate_budget,
    threshold_gate,
    valuemax_override,
    expert_override,
)
from .mdp import delta_table, evaluate_policy, expected_return, value_iteration
from .reporting import (
    render_concepts_figure,
    render_single_figure,
    render_sweep_figure,
    write_concepts_csv,
    write_manifest,
    write_stats_csv,
)
from .sim import (
    DEFAULT_EPISODES,
    DEFAULT_ROLLOUTS,
    run_budget_sweep,
    run_single_intervention_experiment,
    sweep_trajectories,
)

DEFAULT_BUDGETS = (0.0, 0.01, 0.05, 0.1, 0.25, 0.5, 1.0)


def _seed_default():
    return int(os.environ.get("ADVISOR_LAB_SEED", "0"))


def _fail(exc):
    click.echo(f"error: {exc}", err=True)
    code = 2 if isinstance(exc, ConfigurationError) else 3
    raise SystemExit(code)


def _prepare(env_id, skill_spec):
    env = build_environment(env_id)
    skill = parse_skill(skill_spec)
    pi_star, v_star, q_star = value_iteration(env.mdp)
    pi_h = skill.policy(env.mdp, q_star)
    return env, skill, pi_h, (pi_star, v_star, q_star)


def _manifest(out_dir, name, payload):
    payload = dict(payload, version=__version__)
    write_manifest(payload, os.path.join(out_dir, name))


@click.group()
@click.version_option(__version__)
def main():
    """Value-aware intervention toolkit."""


@main.command()
@click.argument("env_id")
@click.argument("skill")
@click.option("--out", type=click.Path(), default="out", show_default=True)
def solve(env_id, skill, out):
    """Solve ENV_ID exactly for SKILL and write the value tables."""
    try:
        env, sk, pi_h, (pi_star, v_star, q_star) = _prepare(env_id, skill)
        v_h, q_h = evaluate_policy(env.mdp, pi_h)
        delta = delta_table(v_h, q_h)
        j_h = expected_return(env.mdp, pi_h)
        j_star = float(np.dot(env.mdp.start_dist, v_star.v))
        os.makedirs(out, exist_ok=True)
        doc = {
            "env": env_id,
            "skill": skill,
            "J_pi_h": repr(j_h),
            "J_pi_star": repr(j_star),
            "v_star": [repr(float(x)) for x in v_star.v],
            "q_star": [[repr(float(x)) for x in q_star.q(s)] for s in range(env.mdp.num_states)],
            "v_h": [repr(float(x)) for x in v_h.v],
            "q_h": [[repr(float(x)) for x in q_h.q(s)] for s in range(env.mdp.num_states)],
            "delta": [[repr(float(x)) for x in delta.delta(s)] for s in range(env.mdp.num_states)],
        }
        with open(os.path.join(out, "tables.json"), "w") as fh:
            json.dump(doc, fh, indent=1)
        click.echo(f"J(pi_H) = {j_h!r}")
        click.echo(f"J(pi*)  = {j_star!r}")
    except (ConfigurationError, DomainError) as exc:
        _fail(exc)


@main.command()
@click.option("--env", "env_id", required=True)
@click.option("--skill", "skills", multiple=True, default=SKILL_NAMES, show_default=True)
@click.option("--strategy", "strategies", multiple=True, default=STRATEGY_NAMES, show_default=True)
@click.option("--episodes", default=DEFAULT_EPISODES, show_default=True, help="positions N")
@click.option("--rollouts", default=DEFAULT_ROLLOUTS, show_default=True, help="continuations M per position")
@click.option("--seed", type=int, default=_seed_default, show_default="ADVISOR_LAB_SEED or 0")
@click.option("--workers", default=1, show_default=True)
@click.option("--out", type=click.Path(), default="out", show_default=True)
def single(env_id, skills, strategies, episodes, rollouts, seed, workers, out):
    """Single-intervention strategy comparison across the skill ladder."""
    try:
        os.makedirs(out, exist_ok=True)
        all_stats = []
        for skill in skills:
            env, sk, pi_h, _ = _prepare(env_id, skill)
            all_stats += run_single_intervention_experiment(
                env.mdp, pi_h, list(strategies), episodes, rollouts, seed,
                workers=workers, skill_label=skill,
            )
        csv_path = os.path.join(out, "single.csv")
        write_stats_csv(all_stats, csv_path)
        render_single_figure(all_stats, os.path.join(out, "single.png"))
        _manifest(out, "single.manifest.json", {
            "command": "single", "env": env_id, "skills": list(skills),
            "strategies": list(strategies), "episodes": episodes,
            "rollouts": rollouts, "seed": seed, "workers": workers,
            "csv": "single.csv",
        })
        click.echo(f"wrote {csv_path}")
    except (ConfigurationError, DomainError) as exc:
        _fail(exc)


@main.command()
@click.option("--env", "env_id", required=True)
@click.option("--skill", default="L1", show_default=True)
@click.option("--strategy", "strategies", multiple=True, default=STRATEGY_NAMES, show_default=True)
@click.option("--budget", "budgets", multiple=True, type=float,
              default=DEFAULT_BUDGETS, show_default=True)
@click.option("--threshold", "thresholds", multiple=True, type=float,
              help="explicit gate thresholds instead of calibrated budgets")
@click.option("--episodes", default=DEFAULT_EPISODES, show_default=True)
@click.option("--seed", type=int, default=_seed_default, show_default="ADVISOR_LAB_SEED or 0")
@click.option("--workers", default=1, show_default=True)
@click.option("--out", type=click.Path(), default="out", show_default=True)
def sweep(env_id, skill, strategies, budgets, thresholds, episodes, seed, workers, out):
    """Budget sweep: composed-policy episodes across a gate grid."""
    try:
        env, sk, pi_h, (pi_star, v_star, q_star) = _prepare(env_id, skill)
        os.makedirs(out, exist_ok=True)
        if thresholds:
            stats = _threshold_sweep(
                env.mdp, pi_h, q_star, list(strategies), thresholds,
                episodes, seed, workers, skill,
            )
        else:
            stats = run_budget_sweep(
                env.mdp, pi_h, list(strategies), list(budgets), episodes, seed,
                workers=workers, skill_label=skill,
            )
        csv_path = os.path.join(out, "sweep.csv")
        write_stats_csv(stats, csv_path)
        render_sweep_figure(stats, os.path.join(out, "sweep.png"))
        _manifest(out, "sweep.manifest.json", {
            "command": "sweep", "env": env_id, "skill": skill,
            "strategies": list(strategies),
            "budgets": list(budgets) if not thresholds else None,
            "thresholds": list(thresholds) or None,
            "episodes": episodes, "seed": seed, "workers": workers,
            "csv": "sweep.csv",
        })
        click.echo(f"wrote {csv_path}")
    except (ConfigurationError, DomainError) as exc:
        _fail(exc)


def _threshold_sweep(mdp, pi_h, q_star, strategies, thresholds, episodes, seed, workers, skill):
    from .intervene import GateSpec
    from .sim import RunStats, _run_sweep_cell

    v_h, q_h = evaluate_policy(mdp, pi_h)
    delta = delta_table(v_h, q_h)
    stats = []
    for name in strategies:
        if name == "human":
            mean, se, freq = _run_sweep_cell(mdp, pi_h, None, None, episodes, seed, workers)
            stats.append(RunStats(name, skill, "none", None, freq, mean, se, episodes, seed))
            continue
        override = expert_override(q_star) if name == "expert" else valuemax_override(q_h)
        for tau in thresholds:
            gate = threshold_gate(mdp, delta, GateSpec(float(tau), 0.0))
            mean, se, freq = _run_sweep_cell(mdp, pi_h, gate, override, episodes, seed, workers)
            stats.append(
                RunStats(name, skill, f"tau={tau:.6g}", None, freq, mean, se, episodes, seed)
            )
    stats.sort(key=lambda r: (r.frequency, r.strategy))
    return stats


@main.command()
@click.option("--env", "env_id", required=True)
@click.option("--skill", default="L1", show_default=True)
@click.option("--strategy", default="valuemax", show_default=True)
@click.option("--budget", default=0.05, show_default=True,
              help="operating point for the intervention gate")
@click.option("--episodes", default=DEFAULT_EPISODES, show_default=True)
@click.option("--seed", type=int, default=_seed_default, show_default="ADVISOR_LAB_SEED or 0")
@click.option("--top-k", default=10, show_default=True)
@click.option("--out", type=click.Path(), default="out", show_default=True)
def concepts(env_id, skill, strategy, budget, episodes, seed, top_k, out):
    """Concept frequency-difference report between intervention and
    non-intervention states of a gated run."""
    try:
        env, sk, pi_h, (pi_star, v_star, q_star) = _prepare(env_id, skill)
        extractor = extractor_for(env)
        v_h, q_h = evaluate_policy(env.mdp, pi_h)
        delta = delta_table(v_h, q_h)
        override = expert_override(q_star) if strategy == "expert" else valuemax_override(q_h)
        spec = calibrate_budget(env.mdp, pi_h, override, budget)
        gate = threshold_gate(env.mdp, delta, spec)
        trajs = sweep_trajectories(env.mdp, pi_h, gate, override, episodes, seed)
        report = concept_report(trajs, extractor)
        os.makedirs(out, exist_ok=True)
        csv_path = os.path.join(out, "concepts.csv")
        write_concepts_csv(report, csv_path)
        render_concepts_figure(report, os.path.join(out, "concepts.png"), top_k=top_k)
        _manifest(out, "concepts.manifest.json", {
            "command": "concepts", "env": env_id, "skill": skill,
            "strategy": strategy, "budget": budget, "episodes": episodes,
            "seed": seed, "top_k": top_k, "csv": "concepts.csv",
        })
        for row in report.top(top_k):
            click.echo(
                f"{row.concept}-{row.category}: {row.delta_abs:.4f}"
            )
    except (ConfigurationError, DomainError) as exc:
        _fail(exc)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--log-file", type=click.Path(), default=None,
              help="append-only session log (jsonl)")
def serve(host, port, log_file):
    """Run the interactive session server."""
    import uvicorn

    from .server import create_app

    uvicorn.run(create_app(log_path=log_file), host=host, port=port)


@main.command(name="envs")
def envs_cmd():
    """List the shipped environment ids."""
    for env_id in list_environments():
        click.echo(env_id)


if __name__ == "__main__":
    main()
