"""Isolated nodes in one-dimensional soft random geometric graphs on a torus.

Simulation of the soft RGG under the ln(tau L) / (2 ‖H‖₁) scaling, and
numerical evaluation of the coupling, discretization and Chen-Stein bounds
behind its Poisson limit for the isolated-node count.
"""
from .connection import (
    ConnectionFunction,
    ScalingRegime,
    check_assumptions,
    evaluate_scaled,
    l1_norm,
    l2sq_norm,
    scaling_radius,
)
from .discretize import DiscretizationGrid, build_grid, collision_bound
from .geometry import PointConfiguration, Torus, sample_ppp, toroidal_distance
from .graph import (
    GraphSample,
    TrialSummary,
    is_connected,
    is_connected_bfs,
    isolated_count,
    sample_edges,
    truncate_edges,
)
from .montecarlo import ExperimentResult, ExperimentSpec, run_trials, sweep
from .theory import (
    ChenSteinReport,
    CountDistribution,
    Poisson,
    b1_limit,
    b2_upper,
    b3_value,
    chen_stein_report,
    chen_stein_upper,
    coupling_gap,
    expected_isolated,
    phi_integral,
    poisson_pmf,
    tv_distance,
)

__version__ = "0.1.0"
