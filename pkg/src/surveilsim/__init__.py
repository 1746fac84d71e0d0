"""Mixed human-robot surveillance simulator and algorithm library.

A seed-deterministic discrete-event simulation couples a drift-diffusion
model of operator decision accuracy (optionally with fatigue, utilization,
and memory-retention effects) to an ensemble CUSUM anomaly detector, a
likelihood-proportional patrol routing policy, and a certainty-equivalent
receding-horizon attention-allocation solver.
"""

from .ddm import (
    DdmParams,
    accuracy_h0,
    accuracy_h1,
    bayes_risk_threshold,
    decision_likelihoods,
    expected_accuracy,
    free_response_expected_time,
    initial_evidence,
)
from .decision_support import (
    HorizonProblem,
    SigmoidItem,
    TaskSnapshot,
    allocate,
    expected_task_params,
    knapsack_sigmoid,
    latency_rate,
    no_deadline_allocation,
    reward_expected,
    reward_realized,
    sigmoid_pseudo_inverse,
    solve_horizon,
)
from .detection import CusumBank, cusum_update, loglik_ratio
from .engine import (
    AlgorithmParams,
    Scenario,
    Task,
    drop_pending,
    run,
    simulate_operator_decision,
    validate_scenario,
)
from .errors import DegenerateLikelihoodError, ScenarioError
from .human_factors import (
    FatigueExhaustionError,
    RetentionParams,
    SafteParams,
    SleepSchedule,
    UtilizationParams,
    effective_drift,
    motor_time,
    rest_time,
    retained_belief,
    retention,
    task_effectiveness,
    unified_accuracy,
    utilization_after_task,
)
from .operator_state import (
    OperatorModels,
    OperatorState,
    RegionBelief,
    bayes_update,
    process_decision,
    reset_after_detection,
    reset_floor,
)
from .routing import (
    RoutingPolicy,
    SurveillanceGraph,
    expected_cycle_time,
    likelihood_routing,
    metropolis_hastings,
    sample_next_region,
)
from .scenario_io import (
    bundled_scenario_path,
    dumps_scenario,
    load_scenario,
    loads_scenario,
    write_scenario,
)
from .trace import Trace, TraceRecord, read_trace, write_trace

__version__ = "0.1.0"
