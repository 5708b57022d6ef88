"""looplimits: simulation, hard performance limits, and human-in-the-loop
experiments for delay- and rate-limited control loops.

A discrete-time scalar plant accumulates whatever disturbance the
controller fails to cancel; every signal path in the loop trades speed
for accuracy, so total delay and information rate jointly floor the
achievable error. This package provides the floor formulas, controllers
that meet them, adversarial and stochastic verification, loop-design
optimizers, a synthetic-pilot experiment harness, and a real-time
websocket service for human play.
"""

from .bounds import (
    ErrorDecomposition,
    LayeredBound,
    LayeredParams,
    RegimeViolation,
    layered_bound,
    rate_error_term,
    stochastic_bound,
    worst_case_bound,
)
from .channels import (
    ComponentBudget,
    DelayLine,
    Encoding,
    LoopParams,
    UniformQuantizer,
    sat_rate_based,
    sat_rate_spike,
)
from .plant import (
    TICK_SECONDS,
    ArraySource,
    ControlCommand,
    DisturbanceSample,
    DisturbanceSource,
    PlantState,
    SimConfig,
    SimulationError,
    Trajectory,
    ZeroSource,
    run_closed_loop,
    step_plant,
)
from .controllers import (
    LayeredController,
    NullController,
    PilotController,
    PilotModel,
    QuantizedController,
    make_layered_controller,
    make_optimal_controller,
    make_pilot,
)
from .adversary import (
    AdversaryConfig,
    AdversaryResult,
    CellEdges,
    Corners,
    FixedPointResult,
    Grid,
    McCheckResult,
    exhaustive_worst_case,
    greedy_adversary,
    interval_fixed_point_oracle,
    stochastic_mc_check,
)
from .optimize import (
    DessComparison,
    LayeredDesign,
    OptimizeResult,
    RegimePoint,
    compare_dess,
    dess_tradeoff_curve,
    grid_search_single_loop,
    layered_params_from_design,
    optimize_layered,
    optimize_single_loop,
    signaling_rate,
    single_loop_objective,
    sweep_regimes,
)
from .experiment import (
    CONDITIONS,
    AdditivityResult,
    BumpSpec,
    SweepPoint,
    TrailSpec,
    TrialConfig,
    TrialEngine,
    TrialRecord,
    additivity_analysis,
    compute_windowed_worst_case,
    generate_bumps,
    generate_trail,
    load_trial_configs,
    run_additivity_campaign,
    run_trial,
    save_trial_configs,
    sweep_added_delay,
    sweep_added_rate,
    sweep_coupled_sat,
    trial_config_from_dict,
    trial_config_to_dict,
)
from .service import (
    PROTOCOL_VERSION,
    LoopbackTrialResult,
    ProtocolError,
    ReplayedTrial,
    ServiceConfig,
    SessionService,
    decode_msg,
    encode_msg,
    export_session_log,
    load_session_log,
    loopback_pilot_session,
    replay_session_log,
)
from .acceptance import (
    CriterionResult,
    SuiteReport,
    format_report,
    report_to_dict,
    run_suite,
)

__version__ = "0.1.0"

__all__ = [
    "ArraySource",
    "AdditivityResult",
    "AdversaryConfig",
    "AdversaryResult",
    "BumpSpec",
    "CONDITIONS",
    "CellEdges",
    "ComponentBudget",
    "ControlCommand",
    "Corners",
    "CriterionResult",
    "DelayLine",
    "DessComparison",
    "DisturbanceSample",
    "DisturbanceSource",
    "Encoding",
    "ErrorDecomposition",
    "FixedPointResult",
    "Grid",
    "LayeredBound",
    "LayeredController",
    "LayeredDesign",
    "LayeredParams",
    "LoopParams",
    "LoopbackTrialResult",
    "McCheckResult",
    "NullController",
    "OptimizeResult",
    "PROTOCOL_VERSION",
    "PilotController",
    "PilotModel",
    "PlantState",
    "ProtocolError",
    "QuantizedController",
    "RegimePoint",
    "RegimeViolation",
    "ReplayedTrial",
    "ServiceConfig",
    "SessionService",
    "SimConfig",
    "SimulationError",
    "SuiteReport",
    "SweepPoint",
    "TICK_SECONDS",
    "TrailSpec",
    "Trajectory",
    "TrialConfig",
    "TrialEngine",
    "TrialRecord",
    "UniformQuantizer",
    "ZeroSource",
    "additivity_analysis",
    "compare_dess",
    "compute_windowed_worst_case",
    "decode_msg",
    "dess_tradeoff_curve",
    "encode_msg",
    "exhaustive_worst_case",
    "export_session_log",
    "format_report",
    "generate_bumps",
    "generate_trail",
    "greedy_adversary",
    "grid_search_single_loop",
    "interval_fixed_point_oracle",
    "layered_bound",
    "layered_params_from_design",
    "load_session_log",
    "load_trial_configs",
    "loopback_pilot_session",
    "make_layered_controller",
    "make_optimal_controller",
    "make_pilot",
    "optimize_layered",
    "optimize_single_loop",
    "rate_error_term",
    "replay_session_log",
    "report_to_dict",
    "run_additivity_campaign",
    "run_closed_loop",
    "run_suite",
    "run_trial",
    "sat_rate_based",
    "sat_rate_spike",
    "save_trial_configs",
    "signaling_rate",
    "single_loop_objective",
    "stochastic_bound",
    "stochastic_mc_check",
    "step_plant",
    "sweep_added_delay",
    "sweep_added_rate",
    "sweep_coupled_sat",
    "sweep_regimes",
    "trial_config_from_dict",
    "trial_config_to_dict",
    "worst_case_bound",
]
