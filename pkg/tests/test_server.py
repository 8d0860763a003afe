"""Session service contract: lifecycle, advice purity, budget accounting,
optimistic concurrency, and error codes."""

import json

import pytest
from fastapi.testclient import TestClient

from advisor_lab.server import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def make_session(client, **overrides):
    body = {
        "env": "trap",
        "skill": "L1",
        "strategy": "valuemax",
        "budget_mode": "count",
        "budget": 1,
        "seed": 0,
    }
    body.update(overrides)
    res = client.post("/sessions", json=body)
    assert res.status_code == 201, res.text
    return res.json()


def play_out(client, st, accept=True):
    sid = st["session_id"]
    while st["status"] == "active":
        adv = client.get(f"/sessions/{sid}/advice").json()
        if adv["would_intervene"] and accept:
            action, accepted = adv["recommended_action"], True
        else:
            action, accepted = st["legal_actions"][0]["action"], False
        st = client.post(
            f"/sessions/{sid}/step",
            json={
                "action": action,
                "state_version": st["state_version"],
                "accepted_advice": accepted,
            },
        ).json()
    return st


def test_envs_endpoint(client):
    envs = client.get("/envs").json()["envs"]
    assert "trap" in envs
    assert any(e.startswith("ttt:") for e in envs)


def test_session_lifecycle_and_outcome(client):
    st = make_session(client, env="ttt:3x3m3:L1", budget=2, seed=11)
    assert st["state"]["kind"] == "board"
    assert len(st["legal_actions"]) == 9
    final = play_out(client, st)
    assert final["status"] == "done"
    assert "total_return" in final["outcome"]
    float(final["outcome"]["total_return"])  # decimal string


def test_advice_is_pure_per_state(client):
    st = make_session(client, budget_mode="frequency", budget=0.5, seed=3)
    sid = st["session_id"]
    first = client.get(f"/sessions/{sid}/advice").json()
    for _ in range(5):
        assert client.get(f"/sessions/{sid}/advice").json() == first


def test_deltas_are_decimal_strings_over_legal_actions(client):
    st = make_session(client)
    adv = client.get(f"/sessions/{st['session_id']}/advice").json()
    assert len(adv["deltas"]) == len(st["legal_actions"])
    for row in adv["deltas"]:
        assert isinstance(row["delta"], str)
        float(row["delta"])


def test_refusing_advice_never_spends_budget(client):
    st = make_session(client, budget=1, seed=2)
    final = play_out(client, st, accept=False)
    assert final["budget_remaining"] == 1
    summary = client.get(f"/sessions/{st['session_id']}/summary").json()
    assert summary["interventions_accepted"] == 0


def test_accepting_advice_decrements_budget_once(client):
    st = make_session(client, budget=1, seed=2)
    final = play_out(client, st, accept=True)
    summary = client.get(f"/sessions/{st['session_id']}/summary").json()
    assert summary["interventions_accepted"] <= 1
    assert final["budget_remaining"] == 1 - summary["interventions_accepted"]


def test_budget_never_goes_negative(client):
    for seed in range(10):
        st = make_session(client, budget=1, seed=seed)
        play_out(client, st, accept=True)
        summary = client.get(f"/sessions/{st['session_id']}/summary").json()
        assert summary["budget_remaining"] >= 0


def test_stale_version_conflicts(client):
    st = make_session(client, env="ttt:3x3m3:L1", seed=5)
    sid = st["session_id"]
    ok = client.post(
        f"/sessions/{sid}/step",
        json={"action": 0, "state_version": st["state_version"]},
    )
    assert ok.status_code == 200
    stale = client.post(
        f"/sessions/{sid}/step",
        json={"action": 0, "state_version": st["state_version"]},
    )
    assert stale.status_code == 409
    assert stale.json()["detail"]["code"] == "conflict"


def test_illegal_action_rejected(client):
    st = make_session(client)
    res = client.post(
        f"/sessions/{st['session_id']}/step",
        json={"action": 99, "state_version": st["state_version"]},
    )
    assert res.status_code == 400
    assert res.json()["detail"]["code"] == "illegal_action"


def test_finished_session_refuses_everything(client):
    st = make_session(client, seed=6)
    final = play_out(client, st)
    sid = st["session_id"]
    res = client.post(
        f"/sessions/{sid}/step",
        json={"action": 0, "state_version": final["state_version"]},
    )
    assert res.status_code == 409
    assert res.json()["detail"]["code"] == "session_finished"
    assert client.get(f"/sessions/{sid}/advice").status_code == 409


def test_unknown_session_404(client):
    res = client.get("/sessions/deadbeef/advice")
    assert res.status_code == 404
    assert res.json()["detail"]["code"] == "not_found"


def test_invalid_start_state(client):
    res = client.post(
        "/sessions",
        json={"env": "trap", "start_from": 5},  # the absorbing end state
    )
    assert res.status_code == 400
    assert res.json()["detail"]["code"] == "invalid_start_state"


def test_start_from_valid_state(client):
    st = make_session(client, start_from=3)
    assert st["state"]["index"] == 3


def test_invalid_config_rejected(client):
    res = client.post("/sessions", json={"env": "trap", "strategy": "wat"})
    assert res.status_code == 422
    res = client.post("/sessions", json={"env": "trap", "budget_mode": "count",
                                         "budget": 0.5})
    assert res.status_code == 422


def test_sessions_are_deterministic_for_a_seed(client):
    outs = []
    for _ in range(2):
        st = make_session(client, env="ttt:3x3m3:L1", budget=3, seed=42)
        final = play_out(client, st)
        outs.append(
            (
                final["outcome"]["total_return"],
                client.get(f"/sessions/{st['session_id']}/summary").json()[
                    "interventions_accepted"
                ],
            )
        )
    assert outs[0] == outs[1]


def test_expert_strategy_count_mode(client):
    st = make_session(client, strategy="expert", budget=1, seed=8)
    final = play_out(client, st)
    assert final["status"] == "done"


def test_session_log_written(tmp_path):
    log = tmp_path / "sessions.jsonl"
    client = TestClient(create_app(log_path=str(log)))
    st = make_session(client, seed=1)
    play_out(client, st)
    events = [json.loads(line) for line in log.read_text().splitlines()]
    kinds = {e["event"] for e in events}
    assert {"created", "advice", "step"} <= kinds
