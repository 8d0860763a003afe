"""HTTP session service for interactive play against an advised policy.

A session pairs one environment episode with a configured intervention
strategy. The client drives the episode step by step; the server surfaces
advice (whether the gate would fire, the recommended action, and the
per-action gain signal) and tracks the intervention budget. Advice is
computed once per state arrival and cached, so repeated reads are pure and
refusing advice never spends budget.

All fractional numeric payload fields are decimal strings to keep the wire
format exact; indices, versions, and counts stay integers.
"""

from __future__ import annotations

import json
import os
import threading
import uuid

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .behavior import parse_skill
from .environments import Environment, build_environment, list_environments
from .errors import ConfigurationError
from .intervene import (
    calibrate_budget,
    expert_override,
    solve_budgeted_forced,
    threshold_gate,
    valuemax_override,
)
from .mdp import delta_table, evaluate_policy, solve_budgeted, value_iteration

_GRID_MOVE_LABELS = ("up", "down", "left", "right")


def _error(status: int, code: str, message: str):
    raise HTTPException(status_code=status, detail={"code": code, "message": message})


class CreateSession(BaseModel):
    env: str
    skill: str = "L1"
    strategy: str = "valuemax"  # valuemax | expert
    budget_mode: str = "count"  # count | frequency
    budget: float = 1
    seed: int | None = None
    start_from: int | None = None


class StepRequest(BaseModel):
    action: int
    state_version: int
    accepted_advice: bool = False


class _EnvBundle:
    """Solved tables for one (env, skill) pair, shared across sessions."""

    def __init__(self, env_id: str, skill_spec: str):
        self.env: Environment = build_environment(env_id)
        self.skill = parse_skill(skill_spec)
        mdp = self.env.mdp
        self.pi_star, self.v_star, self.q_star = value_iteration(mdp)
        self.pi_h = self.skill.policy(mdp, self.q_star)
        self.v_h, self.q_h = evaluate_policy(mdp, self.pi_h)
        self.delta = delta_table(self.v_h, self.q_h)


class Session:
    def __init__(self, session_id: str, bundle: _EnvBundle, req: CreateSession):
        self.id = session_id
        self.bundle = bundle
        self.strategy = req.strategy
        self.budget_mode = req.budget_mode
        self.seed = req.seed if req.seed is not None else 0
        self.rng = np.random.Generator(
            np.random.Philox(key=[self.seed & 0xFFFFFFFFFFFFFFFF, 0])
        )
        self.lock = threading.Lock()
        mdp = bundle.env.mdp

        if req.strategy == "expert":
            self.override = expert_override(bundle.q_star)
        elif req.strategy == "valuemax":
            self.override = valuemax_override(bundle.q_h)
        else:
            raise ConfigurationError(f"unknown strategy {req.strategy!r}")

        if req.budget_mode == "count":
            if req.budget < 0 or req.budget != int(req.budget):
                raise ConfigurationError("count budget must be a non-negative integer")
            k = int(req.budget)
            if req.strategy == "expert":
                self.augmented = solve_budgeted_forced(mdp, bundle.pi_h, k, self.override)
            else:
                self.augmented = solve_budgeted(mdp, bundle.pi_h, k)
            self.budget_remaining = self.augmented.budget  # may clamp to horizon
            self.gate_phi = None
        elif req.budget_mode == "frequency":
            spec = calibrate_budget(mdp, bundle.pi_h, self.override, req.budget)
            self.gate_phi = threshold_gate(mdp, bundle.delta, spec).phi
            self.gate_spec = spec
            self.augmented = None
            self.budget_remaining = None
        else:
            raise ConfigurationError(f"unknown budget_mode {req.budget_mode!r}")

        if req.start_from is not None:
            s = req.start_from
            if not (0 <= s < mdp.num_states) or mdp.terminal[s]:
                _error(400, "invalid_start_state", f"state {s} cannot start an episode")
            self.state = int(s)
        else:
            self.state = int(
                self.rng.choice(mdp.num_states, p=mdp.start_dist)
            )
        self.t = 1  # next decision stage (1-based)
        self.state_version = 1
        self.status = "active"
        self.total_return = 0.0
        self.steps_taken = 0
        self.interventions_accepted = 0
        self.advice_surfaced = 0
        self._advice = None  # cached advice for the current state_version
        self._advice_version = None

    # -- advice ------------------------------------------------------------

    def advice(self) -> dict:
        if self._advice_version == self.state_version:
            return self._advice
        mdp = self.bundle.env.mdp
        s = self.state
        if self.budget_mode == "count":
            k = self.budget_remaining
            t = min(self.t, mdp.horizon)
            dec = int(self.augmented.decision_stages[t, k, s]) if k >= 1 else -1
            would = dec >= 0
            recommended = dec if would else int(np.argmax(self.override.probs[s]))
        else:
            p = float(self.gate_phi[s])
            would = bool(self.rng.random() < p) if 0.0 < p < 1.0 else p >= 1.0
            recommended = int(np.argmax(self.override.probs[s]))
        deltas = [
            {"action": a, "delta": repr(float(d))}
            for a, d in enumerate(self.bundle.delta.delta(s))
        ]
        self._advice = {
            "would_intervene": bool(would),
            "recommended_action": recommended,
            "deltas": deltas,
            "budget_remaining": self.budget_remaining,
        }
        self._advice_version = self.state_version
        return self._advice

    # -- stepping ----------------------------------------------------------

    def step(self, req: StepRequest) -> None:
        mdp = self.bundle.env.mdp
        s = self.state
        a = req.action
        if not (0 <= a < mdp.num_actions(s)):
            _error(400, "illegal_action", f"action {a} is not legal in state {s}")
        surfaced = self._advice_version == self.state_version and self._advice is not None
        if surfaced and self._advice["would_intervene"] and req.accepted_advice:
            self.interventions_accepted += 1
            if self.budget_mode == "count":
                self.budget_remaining -= 1
        idx, prob = mdp.transitions[s][a]
        j = int(self.rng.choice(len(prob), p=prob))
        if mdp.outcome_rewards is not None:
            flat = mdp.t_indptr[mdp.flat_index(s, a)] + j
            reward = float(mdp.outcome_rewards[flat])
        else:
            reward = float(mdp.rewards[s][a])
        self.total_return += mdp.discount ** (self.t - 1) * reward
        self.state = int(idx[j])
        self.t += 1
        self.steps_taken += 1
        self.state_version += 1
        if mdp.terminal[self.state] or self.t > mdp.horizon:
            self.status = "done"

    # -- rendering ---------------------------------------------------------

    def render_state(self) -> dict:
        env = self.bundle.env
        s = self.state
        base = {"index": s, "kind": env.kind, "stage": self.t, "steps_taken": self.steps_taken}
        if env.kind == "board":
            board = env.states_meta[s]
            base["cells"] = list(board) if board is not None else None
            base["to_move"] = "x" if board is not None else None
            base["size"] = env.extras["spec"].size
        elif env.kind == "grid":
            base["cell"] = list(env.states_meta[s])
            base["rows"] = list(env.extras["spec"].rows)
        else:
            base["name"] = env.states_meta[s]
        return base

    def legal_actions(self) -> list:
        env = self.bundle.env
        mdp = env.mdp
        s = self.state
        n = mdp.num_actions(s)
        if self.status != "active":
            return []
        if env.kind == "board":
            board = env.states_meta[s]
            cells = [c for c, v in enumerate(board) if v == 0] if board else list(range(n))
            return [{"action": a, "label": f"cell {cells[a]}", "cell": cells[a]} for a in range(n)]
        if env.kind == "grid":
            return [{"action": a, "label": _GRID_MOVE_LABELS[a]} for a in range(n)]
        return [{"action": a, "label": f"option {a}"} for a in range(n)]

    def public_state(self) -> dict:
        out = {
            "session_id": self.id,
            "state": self.render_state(),
            "legal_actions": self.legal_actions(),
            "state_version": self.state_version,
            "status": self.status,
            "budget_remaining": self.budget_remaining,
        }
        if self.status == "done":
            out["outcome"] = {"total_return": repr(self.total_return)}
        return out

    def summary(self) -> dict:
        return {
            "session_id": self.id,
            "env": self.bundle.env.env_id,
            "skill": self.bundle.skill.skill_label,
            "strategy": self.strategy,
            "budget_mode": self.budget_mode,
            "seed": self.seed,
            "status": self.status,
            "steps_taken": self.steps_taken,
            "advice_surfaced": self.advice_surfaced,
            "interventions_accepted": self.interventions_accepted,
            "budget_remaining": self.budget_remaining,
            "total_return": repr(self.total_return),
        }


def create_app(log_path: str | None = None) -> FastAPI:
    app = FastAPI(title="advisor-lab session service")
    sessions: dict[str, Session] = {}
    bundles: dict[tuple, _EnvBundle] = {}
    registry_lock = threading.Lock()

    def log(event: dict) -> None:
        if log_path is None:
            return
        with registry_lock:
            with open(log_path, "a") as fh:
                fh.write(json.dumps(event, sort_keys=True) + "\n")

    def get_session(session_id: str) -> Session:
        sess = sessions.get(session_id)
        if sess is None:
            _error(404, "not_found", f"no session {session_id}")
        return sess

    @app.get("/envs")
    def envs():
        return {"envs": list_environments()}

    @app.post("/sessions", status_code=201)
    def create(req: CreateSession):
        key = (req.env, req.skill)
        try:
            with registry_lock:
                if key not in bundles:
                    bundles[key] = _EnvBundle(req.env, req.skill)
            sess = Session(uuid.uuid4().hex, bundles[key], req)
        except ConfigurationError as exc:
            _error(422, "invalid_config", str(exc))
        sessions[sess.id] = sess
        log({"event": "created", "session": sess.id, "config": req.model_dump()})
        return sess.public_state()

    @app.get("/sessions/{session_id}/advice")
    def advice(session_id: str):
        sess = get_session(session_id)
        with sess.lock:
            if sess.status != "active":
                _error(409, "session_finished", "the episode is over")
            first = sess._advice_version != sess.state_version
            out = dict(sess.advice())
            if first:
                sess.advice_surfaced += 1
                log({"event": "advice", "session": sess.id,
                     "state_version": sess.state_version, "advice": out})
        return out

    @app.post("/sessions/{session_id}/step")
    def step(session_id: str, req: StepRequest):
        sess = get_session(session_id)
        with sess.lock:
            if sess.status != "active":
                _error(409, "session_finished", "the episode is over")
            if req.state_version != sess.state_version:
                _error(409, "conflict", "state_version does not match the session")
            sess.step(req)
            out = sess.public_state()
            log({"event": "step", "session": sess.id, "action": req.action,
                 "accepted_advice": req.accepted_advice, "status": sess.status})
        return out

    @app.get("/sessions/{session_id}")
    def state(session_id: str):
        sess = get_session(session_id)
        with sess.lock:
            return sess.public_state()

    @app.get("/sessions/{session_id}/summary")
    def summary(session_id: str):
        sess = get_session(session_id)
        with sess.lock:
            return sess.summary()

    return app
