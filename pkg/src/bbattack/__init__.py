"""bbattack: query-only adversarial attacks and a desk-scale evaluation harness.

Gradient-free attacks (SPSA, NES, ZOO-ADAM) against tiny built-in classifiers,
a white-box PGD baseline on the same margin objective, exact query accounting,
and protocols that produce accuracy-vs-compute tables, convergence CDFs,
SPSA-vs-PGD margin scatter data, and perturbation-size sweeps.
"""

from ._version import VERSION as __version__
from .attacks import (
    AttackConfig,
    AttackError,
    AttackTrace,
    PgdConfig,
    TraceRecord,
    best_margin,
    final_margin,
    margin_input_gradient,
    run_gradient_free_attack,
    run_pgd,
)
from .datasets import (
    DATA_MAGIC,
    DATASET_KINDS,
    EvalDataset,
    clean_accuracy,
    load_dataset,
    make_dataset,
    save_dataset,
)
from .estimators import (
    EstimatorConfig,
    GradientEstimate,
    GradientEstimationError,
    estimate,
    estimate_nes,
    estimate_spsa,
    estimate_zoo,
)
from .harness import (
    PointResult,
    accuracy_table,
    attack_dataset,
    convergence_cdf,
    derive_seed,
    epsilon_sweep,
    linf_boundary_distance,
    margin_scatter,
    mean_linf_boundary_distance,
    pgd_dataset,
    preset_config,
    run_preset,
    run_protocol,
)
from .models import (
    BUILTIN_NAMES,
    MODEL_MAGIC,
    InputVector,
    ModelFormatError,
    ModelSpec,
    forward,
    input_gradient,
    load_model,
    logit_gradient,
    make_builtin,
    save_model,
)
from .objective import (
    ConstraintSet,
    is_misclassified,
    margin,
    margin_many,
    runner_up,
)
from .optimizer import Adam, projected_step
from .oracle import LogitOracle, QueryLedger

__all__ = [
    "__version__",
    "Adam",
    "AttackConfig",
    "AttackError",
    "AttackTrace",
    "BUILTIN_NAMES",
    "ConstraintSet",
    "DATA_MAGIC",
    "DATASET_KINDS",
    "EstimatorConfig",
    "EvalDataset",
    "GradientEstimate",
    "GradientEstimationError",
    "InputVector",
    "LogitOracle",
    "MODEL_MAGIC",
    "ModelFormatError",
    "ModelSpec",
    "PgdConfig",
    "PointResult",
    "QueryLedger",
    "TraceRecord",
    "accuracy_table",
    "attack_dataset",
    "best_margin",
    "clean_accuracy",
    "convergence_cdf",
    "derive_seed",
    "epsilon_sweep",
    "estimate",
    "estimate_nes",
    "estimate_spsa",
    "estimate_zoo",
    "final_margin",
    "forward",
    "input_gradient",
    "is_misclassified",
    "linf_boundary_distance",
    "load_dataset",
    "load_model",
    "logit_gradient",
    "make_builtin",
    "make_dataset",
    "margin",
    "margin_input_gradient",
    "margin_many",
    "margin_scatter",
    "mean_linf_boundary_distance",
    "pgd_dataset",
    "preset_config",
    "projected_step",
    "run_gradient_free_attack",
    "run_pgd",
    "run_preset",
    "run_protocol",
    "runner_up",
    "save_dataset",
    "save_model",
]
