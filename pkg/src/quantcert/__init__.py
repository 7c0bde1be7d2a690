"""Sound quantitative certification of threshold properties.

Decide, with user-set slack and confidence, whether a 0/1 property holds
for at most a threshold fraction of a samplable space; apply it to
adversarial density and hardness of classifiers.
"""

from .core import (
    DegenerateQueryError,
    DimensionMismatchError,
    DomainError,
    OutOfRangeError,
    QuantCertError,
    SampleTally,
    SeedSpec,
    ThresholdQuery,
    Verdict,
    chernoff_tail,
    validate_query,
)
from .nn import (
    Model,
    NonFiniteWeightError,
    ParseError,
    ShapeError,
    forward,
    forward_batch,
    load_model,
    predict,
    predict_batch,
    serialize,
)
from .oracle import (
    BernoulliOracle,
    ChildExitError,
    Oracle,
    OracleFailure,
    PropertyOracle,
    ProtocolViolationError,
    Sampler,
    SpawnFailureError,
    SubprocessOracle,
    compose,
)
from .robustness import (
    EmptySupportError,
    HardnessResult,
    L2BallSampler,
    LinfBallSampler,
    MisclassificationProperty,
    NoYesFoundError,
    ProbeRecord,
    RobustnessQuery,
    adversarial_hardness,
    certify_density,
    make_sampler,
    misclassification_property,
)
from .sim import SoundnessStats, SweepRow, SweepTable, complexity_sweep, soundness_trial
from .strategy import (
    STRATEGIES,
    BinCertParams,
    BudgetBound,
    CallRecord,
    CertificationReport,
    FixedCertParams,
    IntervalSchedule,
    ReportInvariantError,
    ResourceLimits,
    baseline_samples,
    bincert,
    create_interval,
    estimate_baseline,
    fixedcert,
    run_strategy,
    worst_case_budget,
)
from .tester import (
    InvalidConfidenceError,
    InvalidIntervalError,
    TesterPlan,
    TesterResult,
    plan_tester,
    run_tester,
)

__version__ = "0.1.0"

__all__ = [
    "BernoulliOracle",
    "BinCertParams",
    "BudgetBound",
    "CallRecord",
    "CertificationReport",
    "ChildExitError",
    "DegenerateQueryError",
    "DimensionMismatchError",
    "DomainError",
    "EmptySupportError",
    "FixedCertParams",
    "HardnessResult",
    "IntervalSchedule",
    "InvalidConfidenceError",
    "InvalidIntervalError",
    "L2BallSampler",
    "LinfBallSampler",
    "MisclassificationProperty",
    "Model",
    "NoYesFoundError",
    "NonFiniteWeightError",
    "Oracle",
    "OracleFailure",
    "OutOfRangeError",
    "ParseError",
    "ProbeRecord",
    "PropertyOracle",
    "ProtocolViolationError",
    "QuantCertError",
    "ReportInvariantError",
    "ResourceLimits",
    "RobustnessQuery",
    "STRATEGIES",
    "SampleTally",
    "SeedSpec",
    "ShapeError",
    "SoundnessStats",
    "SpawnFailureError",
    "SubprocessOracle",
    "SweepRow",
    "SweepTable",
    "TesterPlan",
    "TesterResult",
    "ThresholdQuery",
    "Verdict",
    "adversarial_hardness",
    "baseline_samples",
    "bincert",
    "certify_density",
    "chernoff_tail",
    "complexity_sweep",
    "compose",
    "create_interval",
    "estimate_baseline",
    "fixedcert",
    "forward",
    "forward_batch",
    "load_model",
    "make_sampler",
    "misclassification_property",
    "plan_tester",
    "predict",
    "predict_batch",
    "run_strategy",
    "run_tester",
    "serialize",
    "soundness_trial",
    "validate_query",
    "worst_case_budget",
]
