"""Coupled fast moving-horizon parameter estimation and observability-seeking
model predictive control, with a bearing-only active-SLAM scenario."""

from .controller import MpcConfig, MpcDecision, NominalFeedback, nominal_control, obs_budget, solve_mpc
from .estimator import (
    CostReport,
    EstimateState,
    EstimatorConfig,
    MeasurementWindow,
    PenaltyConfig,
    eval_cost,
    fast_update,
    full_solve,
)
from .grammian import GrammianSplit, ObservabilityReport, grammian_full, min_eigenvalue, split
from .model import (
    BearingScenario,
    NoiseSpec,
    SystemModel,
    bearing_dynamics,
    bearing_jac_p,
    bearing_model,
    bearing_observe,
    bearing_tangent,
    draw_noise,
)
from .config import RunConfig, config_hash, load_config, reference_config, parse_config
from .simulation import (
    MODE_ACTIVE,
    MODE_NOMINAL,
    LyapunovConfig,
    SimTrace,
    SimulationSetup,
    check_error_recursion,
    check_lyapunov,
    check_ultimate_bound,
    recompute_predicted_levels,
    run,
    summarize,
)

__version__ = "0.1.0"
