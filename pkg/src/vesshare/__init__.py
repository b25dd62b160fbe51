"""Virtual energy-storage sharing: users buy per-day virtual capacity from
an aggregator that nets their dispatch, sizes a physical store, and prices
the capacity by searching the threshold structure of the users' demand."""

from .aggregator import (
    AggregateDemand,
    CommunicationResult,
    CostAllocation,
    PriceSearchResult,
    SharingModel,
    aggregate_net,
    communication_unit,
    expected_revenue,
    limiting_profit,
    search_lnp_price,
    search_op_price,
    solve_cost_allocation,
)
from .benchmark import BenchmarkResult, retailer_prices, solve_benchmark
from .errors import (
    AmbiguousPriceError,
    DimensionError,
    DomainError,
    NoViablePriceError,
    ScenarioParseError,
    SolverFailureError,
    UnboundedCapacityError,
    ValidationError,
    VesshareError,
)
from .model import (
    Scenario,
    ScenarioSet,
    StorageTech,
    Tariff,
    TimeGrid,
    UserDecision,
    capital_recovery_factor,
    daily_peak_price,
    electricity_bill,
    power_balance,
    renewable_revenue,
    user_net_cost,
)
from .parametric import ParametricRay, parametric_rhs_ray
from .pipeline import ExperimentReport, PeakReport, emit_peak_report, run_pipeline
from .qp import QpSolution, QuadraticProgram, solve_qp
from .scenario_io import ExperimentConfig, load_scenarios, write_scenarios
from .simplex import EQ, GE, LE, LinearProgram, LpSolution, solve_lp
from .user import (
    ThresholdProfile,
    UserProblemInstance,
    ValueFunction,
    build_user_problem,
    compute_profile,
    compute_thresholds,
    compute_value_function,
    limiting_dispatch,
    optimal_capacity,
    solve_user,
)

__version__ = "0.1.0"
