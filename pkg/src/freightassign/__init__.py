"""User-equilibrium freight assignment on road-rail intermodal networks."""

from .analysis import beta_sweep, ton_miles, ue_cost_spread
from .demand import FactorTables, ShipmentRecord, build_demand_table
from .equilibrium import (
    AssignmentResult,
    DemandTable,
    SolverConfig,
    objective,
    relative_gap,
    solve_fw,
    solve_gp,
)
from .estimators import (
    DemandConverter,
    FrankWolfeAssignment,
    GradientProjectionAssignment,
    check_demand,
    check_network,
)
from .network import Link, Network, Node, mode_link_set, twin_of, validate_network
from .paths import Path, path_time, shortest_path

__version__ = "0.1.0"
