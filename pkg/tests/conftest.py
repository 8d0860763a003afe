import numpy as np
import pytest

from advisor_lab.environments import build_environment
from advisor_lab.environments.trap import build_trap_instance
from advisor_lab.mdp import evaluate_policy, value_iteration


@pytest.fixture(scope="session")
def trap():
    mdp, pi_h = build_trap_instance()
    return mdp, pi_h


@pytest.fixture(scope="session")
def trap_tables(trap):
    mdp, pi_h = trap
    pi_star, v_star, q_star = value_iteration(mdp)
    v_h, q_h = evaluate_policy(mdp, pi_h)
    return {
        "pi_star": pi_star,
        "v_star": v_star,
        "q_star": q_star,
        "v_h": v_h,
        "q_h": q_h,
    }


@pytest.fixture(scope="session")
def ttt_l1():
    return build_environment("ttt:3x3m3:L1")


@pytest.fixture(scope="session")
def grid_slippery():
    return build_environment("grid:slippery")
