"""corridorsim: discrete-time simulation of a multi-line bus corridor with
multi-berth stops and holding control at the corridor entrance."""

from .analytics import (
    avg_holding_delay,
    expected_holding_delay,
    holding_coefficient,
    mc_holding_mean,
    mc_max_mean,
)
from .control_point import (
    ArrivalPredictor,
    ConfigurationError,
    HoldContext,
    HoldingPolicy,
    ReleaseDecision,
    hold_min_headway,
    hold_min_headway_group,
    hold_comparison,
    make_policy,
)
from .metrics import (
    AggregateMetrics,
    MetricsRecord,
    aggregate,
    compute_metrics,
    cumulative_delay,
    grand_headway_cv,
    headway_cv,
    savings,
    stop_delay,
)
from .scenario import (
    Line,
    LineGroup,
    Link,
    Phases,
    ReplicationSettings,
    Scenario,
    ScenarioError,
    ScenarioParseError,
    ScenarioValidationError,
    Stop,
    StrategySpec,
    bundled_scenario_path,
    load_scenario,
    save_scenario,
    scale_demand,
    split_common_rates,
)
from .simulator import (
    BusEventLog,
    ExperimentResult,
    SimulationError,
    run_experiment,
    run_replication,
)
from .stochastic import (
    ArrivalSchedule,
    gen_arrival_times,
    gen_patron_count,
    lognormal_params,
    sample_link_time,
    stream_rng,
)

__version__ = "0.1.0"
