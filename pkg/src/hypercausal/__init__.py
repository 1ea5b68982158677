"""Quantum-inspired multi-branch state propagation with drift-adaptive feedback.

The package is organized around one contract: an engine maps an input vector
to a present state, a projector fans the state out into candidate futures,
and a policy reduces the candidates to a representative next state. Nodes,
chains and DAGs compose that step; losses and metrics score it; gradient-free
optimizers and a callback/telemetry runtime drive adaptive loops; the
``experiment`` module and the ``hypercausal`` CLI reproduce a hardware-style
drift study with scalar feedback control.
"""

from .backends import (
    AnalyticBackend,
    ReferenceBackend,
    SampledBackend,
    builtin_registry,
    counts_from_json,
    counts_to_expectations,
    counts_to_json,
    encode_input,
    expectation_z,
    run_circuit,
    sample_counts,
)
from .core import (
    Backend,
    BackendCapabilities,
    BackendConfig,
    BackendRegistry,
    RegistryEntry,
    TriadicOutput,
    as_future_set,
    as_state_vector,
    triadic_step,
)
from .evaluation import (
    LossWeights,
    SeriesPair,
    auc_rate_mean,
    auc_trapezoid,
    lag_delta,
    lag_recall,
    loss_coherence,
    loss_consistency,
    loss_task,
    mape,
    mase,
    metric_anomaly,
    metric_control,
    metric_forecast,
    rmse,
)
from .experiment import (
    DriftParams,
    EpochLog,
    ExperimentConfig,
    aggregate_loss,
    apply_input_drift,
    apply_readout_bias,
    drift_signals,
    run_experiment,
    summarize,
)
from .graph import GraphSpec, graph_forward, graph_from_json, graph_to_json, topological_order
from .nodes import HCNode, chain_forward, policy_aggregate
from .optim import (
    AdamLike,
    FiniteDifference,
    OptimizerRegistry,
    OptState,
    ScalarTrustRegion,
    SGD,
    SPSA,
    builtin_optimizers,
    finite_difference_gradient,
)
from .projectors import (
    Anticipator,
    LinearProjector,
    PerturbationSet,
    anticipate,
    parse_perturbation,
    project_linear,
)
from .runtime import (
    Callback,
    CallbackContext,
    DepthSchedule,
    DepthSchedulerCallback,
    TelemetryCallback,
    TelemetryLogger,
    TelemetryRecord,
    depth_at,
    flush_jsonl,
    load_jsonl,
    run_with_callbacks,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyticBackend", "ReferenceBackend", "SampledBackend", "builtin_registry",
    "counts_from_json", "counts_to_expectations", "counts_to_json", "encode_input",
    "expectation_z", "run_circuit", "sample_counts",
    "Backend", "BackendCapabilities", "BackendConfig", "BackendRegistry",
    "RegistryEntry", "TriadicOutput", "as_future_set", "as_state_vector", "triadic_step",
    "LossWeights", "SeriesPair", "auc_rate_mean", "auc_trapezoid", "lag_delta",
    "lag_recall", "loss_coherence", "loss_consistency", "loss_task", "mape", "mase",
    "metric_anomaly", "metric_control", "metric_forecast", "rmse",
    "DriftParams", "EpochLog", "ExperimentConfig", "aggregate_loss",
    "apply_input_drift", "apply_readout_bias", "drift_signals", "run_experiment",
    "summarize",
    "GraphSpec", "graph_forward", "graph_from_json", "graph_to_json", "topological_order",
    "HCNode", "chain_forward", "policy_aggregate",
    "AdamLike", "FiniteDifference", "OptimizerRegistry", "OptState",
    "ScalarTrustRegion", "SGD", "SPSA", "builtin_optimizers", "finite_difference_gradient",
    "Anticipator", "LinearProjector", "PerturbationSet", "anticipate",
    "parse_perturbation", "project_linear",
    "Callback", "CallbackContext", "DepthSchedule", "DepthSchedulerCallback",
    "TelemetryCallback", "TelemetryLogger", "TelemetryRecord", "depth_at",
    "flush_jsonl", "load_jsonl", "run_with_callbacks",
]
