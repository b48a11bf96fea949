"""Online task offloading with one-bit feedback.

A UCB-type contextual bandit over fog nodes whose happy/unhappy feedback
follows a per-node logistic model, together with a synthetic fog-network
simulator, baseline policies, and a self-checking benchmark harness.
"""

from .bench import (
    ALGORITHMS,
    ConfigError,
    RunConfig,
    Summary,
    aggregate,
    average_regret,
    average_reward,
    check_determinant_identities,
    config_from_dict,
    export_summary_csv,
    export_trace_csv,
    load_config,
    prop2_bound,
    run_checks,
    run_episode,
    run_traces,
)
from .feedback import (
    grad_log_likelihood,
    happy_probability,
    log_likelihood,
    sample_feedback,
)
from .fogsim import EnvParams, FogEnvironment, draw_true_weights
from .policy import (
    BETA_DEFAULT,
    ArmState,
    Decision,
    ToofConfig,
    gamma_theoretical,
    gamma_tuned,
    greedy_select,
    greedy_update,
    init_arm_states,
    oracle_select,
    round_robin_select,
    toof_select,
    toof_update,
)
from .quadform import NumericsError, PsdMatrix

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "ALGORITHMS",
    "ArmState",
    "BETA_DEFAULT",
    "ConfigError",
    "Decision",
    "EnvParams",
    "FogEnvironment",
    "NumericsError",
    "PsdMatrix",
    "RunConfig",
    "Summary",
    "ToofConfig",
    "aggregate",
    "average_regret",
    "average_reward",
    "check_determinant_identities",
    "config_from_dict",
    "draw_true_weights",
    "export_summary_csv",
    "export_trace_csv",
    "gamma_theoretical",
    "gamma_tuned",
    "grad_log_likelihood",
    "greedy_select",
    "greedy_update",
    "happy_probability",
    "init_arm_states",
    "load_config",
    "log_likelihood",
    "oracle_select",
    "prop2_bound",
    "round_robin_select",
    "run_checks",
    "run_episode",
    "run_traces",
    "sample_feedback",
    "toof_select",
    "toof_update",
]
