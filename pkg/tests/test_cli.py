"""End-to-end CLI runs against temp directories."""

import csv
import json
import os

import pytest
from click.testing import CliRunner

from advisor_lab.cli import main
from advisor_lab.reporting import CONCEPTS_HEADER, STATS_HEADER, read_manifest


@pytest.fixture
def runner():
    return CliRunner()


def test_solve_writes_tables(runner, tmp_path):
    out = tmp_path / "solve"
    res = runner.invoke(main, ["solve", "trap", "L1", "--out", str(out)])
    assert res.exit_code == 0, res.output
    assert "J(pi_H)" in res.output
    doc = json.loads((out / "tables.json").read_text())
    assert float(doc["J_pi_star"]) == pytest.approx(1.0)
    assert float(doc["J_pi_h"]) == pytest.approx(0.5069227500929923, abs=1e-12)
    assert len(doc["v_star"]) == len(doc["v_h"])


def test_solve_unknown_env_exits_2(runner, tmp_path):
    res = runner.invoke(main, ["solve", "nowhere", "L1", "--out", str(tmp_path)])
    assert res.exit_code == 2


def test_sweep_outputs_csv_figure_manifest(runner, tmp_path):
    out = tmp_path / "sweep"
    res = runner.invoke(
        main,
        [
            "sweep", "--env", "trap", "--skill", "L1",
            "--budget", "0", "--budget", "0.05",
            "--episodes", "128", "--seed", "3", "--out", str(out),
        ],
    )
    assert res.exit_code == 0, res.output
    with open(out / "sweep.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == STATS_HEADER
    assert len(rows) > 1
    assert (out / "sweep.png").stat().st_size > 0
    manifest = read_manifest(out / "sweep.manifest.json")
    assert manifest["episodes"] == 128
    assert manifest["seed"] == 3
    assert manifest["csv"] == "sweep.csv"


def test_sweep_is_deterministic_for_a_seed(runner, tmp_path):
    args = [
        "sweep", "--env", "trap", "--budget", "0.1",
        "--episodes", "128", "--seed", "5",
    ]
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        res = runner.invoke(main, args + ["--out", str(out)])
        assert res.exit_code == 0, res.output
        outs.append((out / "sweep.csv").read_text())
    assert outs[0] == outs[1]


def test_seed_env_var_default(runner, tmp_path, monkeypatch):
    monkeypatch.setenv("ADVISOR_LAB_SEED", "77")
    out = tmp_path / "s"
    res = runner.invoke(
        main, ["sweep", "--env", "trap", "--budget", "0", "--episodes", "64",
               "--out", str(out)],
    )
    assert res.exit_code == 0, res.output
    assert read_manifest(out / "sweep.manifest.json")["seed"] == 77


def test_single_outputs(runner, tmp_path):
    out = tmp_path / "single"
    res = runner.invoke(
        main,
        [
            "single", "--env", "trap", "--skill", "L1", "--skill", "L5",
            "--episodes", "100", "--rollouts", "4", "--out", str(out),
        ],
    )
    assert res.exit_code == 0, res.output
    with open(out / "single.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == STATS_HEADER
    skills = {r[1] for r in rows[1:]}
    assert skills == {"L1", "L5"}
    assert (out / "single.png").stat().st_size > 0


def test_concepts_outputs(runner, tmp_path):
    out = tmp_path / "c"
    res = runner.invoke(
        main,
        [
            "concepts", "--env", "grid:slippery", "--skill", "L1",
            "--budget", "0.25", "--episodes", "150", "--out", str(out),
        ],
    )
    assert res.exit_code == 0, res.output
    with open(out / "concepts.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == CONCEPTS_HEADER
    assert (out / "concepts.png").stat().st_size > 0


def test_concepts_domain_failure_exits_3(runner, tmp_path):
    # a zero budget never fires the gate, so no intervention population exists
    res = runner.invoke(
        main,
        [
            "concepts", "--env", "grid:slippery", "--budget", "0",
            "--episodes", "50", "--out", str(tmp_path / "x"),
        ],
    )
    assert res.exit_code == 3
    assert "error:" in res.output


def test_envs_lists_registry(runner):
    res = runner.invoke(main, ["envs"])
    assert res.exit_code == 0
    assert "trap" in res.output
    assert "grid:slippery" in res.output
