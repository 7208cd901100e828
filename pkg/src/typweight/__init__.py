"""typweight: typicality-weighted loss minimization for classifier training.

Per-sample weights derived from external (one-class SVM) or internal
(softmax / entropy) typicality scores are injected into softmax-log and
multi-class structured hinge losses; a seeded experiment harness
compares weighting strategies on typical vs. atypical test splits.
"""

from ._accel import BACKEND, NUMBA_ENABLED
from ._version import __version__
from .data import (
    ColumnSchema,
    Dataset,
    Sample,
    StandardizeParams,
    apply_standardization,
    load_dataset,
    save_dataset,
    standardize_features,
)
from .errors import (
    ConfigError,
    DataFormatError,
    FlatScoresError,
    GenerationError,
    InsufficientDataError,
    LabelRangeError,
    ParameterError,
    TrainingDivergedError,
    TypweightError,
)
from .experiment import (
    ExperimentPlan,
    ExperimentReport,
    PlanCell,
    default_grid_cells,
    render_table,
    run_cell,
    run_plan,
    summarize_loss_comparison,
    write_report,
)
from .internal import InternalScoreTable, internal_entropy, internal_probability, snapshot_scores
from .kernels import KernelSpec, kernel_matrix, median_heuristic
from .losses import (
    LossValue,
    batch_loss,
    log_softmax,
    margin,
    softmax,
    weighted_ms_hinge_loss,
    weighted_softmax_log_loss,
)
from .mlp import (
    EvalResult,
    MlpModel,
    TrainConfig,
    TrainHistory,
    evaluate,
    forward,
    forward_batch,
    init_model,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .ocsvm import (
    Calibration,
    OneClassSvmModel,
    ScoreTable,
    calibrate,
    decision_score,
    decision_scores,
    fit_class_specific,
    fit_ocsvm,
    load_model,
    save_model,
    score_dataset,
)
from .plotting import plot_scatter
from .synth import CloudSpec, GeneratedData, SpearmanCheck, generate, oracle_score_check
from .weighting import (
    WeightingSpec,
    WeightSchedule,
    WeightTable,
    build_weight_table,
    compute_weight,
    polynomial_weight,
)
