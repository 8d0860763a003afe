"""Value-aware intervention toolkit for finite-horizon tabular MDPs."""

from .mdp import (
    AugmentedValueTable,
    DeltaTable,
    GatingFunction,
    QTable,
    StochasticPolicy,
    TabularMDP,
    Trajectory,
    TrajectoryStep,
    ValueTable,
    compose,
    delta_table,
    evaluate_policy,
    expected_return,
    mdp_from_doc,
    mdp_to_doc,
    occupancy,
    q_from_v,
    solve_budgeted,
    value_iteration,
)

__version__ = "0.1.0"
