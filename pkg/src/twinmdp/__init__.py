"""Tabular-MDP toolkit for twin-model metrics and certified transfer bounds."""

from .mdp import (
    ActionOutOfRange,
    BadGamma,
    DEFAULT_VALUE_TOL,
    MdpValidationError,
    NonFiniteEntry,
    RowNotStochastic,
    StoppingRule,
    TabularMdp,
    ValueVector,
    greedy_policy,
    policy_evaluation,
    suboptimality,
    validate_mdp,
    value_iteration,
)
from .transport import (
    CostShapeMismatch,
    CostTable,
    NotADistribution,
    TransportSolution,
    tv_coupling_upper_bound,
    tv_distance,
    wasserstein,
)
from .metrics import (
    BoundReport,
    CheckOutcome,
    DiagMetric,
    GammaMismatch,
    MdpPair,
    MetricTable,
    ShapeMismatch,
    bisim_metric,
    check_convergence_envelope,
    check_optimal_value_gap,
    check_quadrilateral,
    check_tv_dominance,
    compute_rmax,
    metric_iterations_for,
    metric_step,
    transfer_bounds,
    tv_metric,
)
from .empirical import (
    DegenerateRmaxWarning,
    EmpiricalModel,
    MdpSampler,
    NoSamples,
    SamplePlan,
    SamplerOutOfRange,
    TraceCoverageError,
    collect,
    coverage_deficits,
    empirical_tv,
    empirical_tv_metric,
    plan_samples,
    required_samples,
    require_coverage,
    sample_bound,
)
from .envgen import (
    AdmissionConfig,
    InfeasibleDemand,
    StateSpaceTooLarge,
    admission_actions,
    admission_mdp,
    admission_states,
    perturb,
    random_mdp,
)
from .experiment import (
    ExperimentRecord,
    ExperimentSpec,
    InvariantViolation,
    load_experiment_spec,
    run_experiment,
    summarize,
    trial_seed,
    write_records_csv,
)

__version__ = "0.1.0"

__all__ = [
    "ActionOutOfRange",
    "AdmissionConfig",
    "BadGamma",
    "BoundReport",
    "CheckOutcome",
    "CostShapeMismatch",
    "CostTable",
    "DEFAULT_VALUE_TOL",
    "DegenerateRmaxWarning",
    "DiagMetric",
    "EmpiricalModel",
    "ExperimentRecord",
    "ExperimentSpec",
    "GammaMismatch",
    "InfeasibleDemand",
    "InvariantViolation",
    "MdpPair",
    "MdpSampler",
    "MdpValidationError",
    "MetricTable",
    "NoSamples",
    "NonFiniteEntry",
    "NotADistribution",
    "RowNotStochastic",
    "SamplePlan",
    "SamplerOutOfRange",
    "ShapeMismatch",
    "StateSpaceTooLarge",
    "StoppingRule",
    "TabularMdp",
    "TraceCoverageError",
    "TransportSolution",
    "ValueVector",
    "admission_actions",
    "admission_mdp",
    "admission_states",
    "bisim_metric",
    "check_convergence_envelope",
    "check_optimal_value_gap",
    "check_quadrilateral",
    "check_tv_dominance",
    "collect",
    "compute_rmax",
    "coverage_deficits",
    "empirical_tv",
    "empirical_tv_metric",
    "greedy_policy",
    "load_experiment_spec",
    "metric_iterations_for",
    "metric_step",
    "perturb",
    "plan_samples",
    "policy_evaluation",
    "random_mdp",
    "required_samples",
    "require_coverage",
    "run_experiment",
    "sample_bound",
    "suboptimality",
    "summarize",
    "transfer_bounds",
    "trial_seed",
    "tv_coupling_upper_bound",
    "tv_distance",
    "tv_metric",
    "validate_mdp",
    "value_iteration",
    "wasserstein",
    "write_records_csv",
]
