"""asem: metric-learning toolkit for cross-modal retrieval over paired feature vectors."""

from .data import (
    BatchPlan,
    DatasetBundle,
    PairedDataset,
    SyntheticSpec,
    generate_synthetic,
    load_dataset,
    plan_batches,
    read_features,
    save_dataset,
)
from .exceptions import (
    AsemError,
    BatchTooSmallError,
    CacheMismatchError,
    ConfigError,
    DanglingPairReferenceError,
    DimMismatchError,
    DuplicateTextPairingError,
    EmptyCandidatesError,
    EpochOutOfRangeError,
    InfeasibleConstraintError,
    MissingFileError,
    NonFiniteLossError,
    ShapeMismatchError,
    ZeroNormRowError,
)
from .linalg import cosine_similarity_matrix, l2_normalize_rows
from .losses import (
    OBJECTIVE_NAMES,
    LossResult,
    NtXentConfig,
    PolynomialWeights,
    TripletConfig,
    backprop_to_embeddings,
    negative_pair_weight,
    nt_xent,
    objective_fn,
    positive_pair_weight,
    triplet_max,
    triplet_sum,
    triplet_weighted,
)
from .mlp import MlpParams, load_checkpoint, mlp_backward, mlp_forward, mlp_init, save_checkpoint
from .optim import AdamConfig, AdamState, LrSchedule, adam_init, adam_step, lr_at_epoch
from .reports import (
    comparison_csv,
    comparison_markdown,
    epoch_metrics_csv,
    format_mean_std,
    recall_report_csv,
    recall_report_table,
)
from .retrieval import (
    RECALL_KS,
    RecallReport,
    RetrievalIndex,
    make_recall_report,
    rank_of_target,
    recall_at_k,
    similarity_scores,
    sum_of_recalls,
)
from .train import (
    RunReport,
    SeedRun,
    TrainConfig,
    TrainResult,
    aggregate_reports,
    evaluate_heads,
    mean_std,
    run_comparison,
    train_one,
)

__version__ = "0.1.0"

__all__ = [
    "AdamConfig",
    "AdamState",
    "AsemError",
    "BatchPlan",
    "BatchTooSmallError",
    "CacheMismatchError",
    "ConfigError",
    "DanglingPairReferenceError",
    "DatasetBundle",
    "DimMismatchError",
    "DuplicateTextPairingError",
    "EmptyCandidatesError",
    "EpochOutOfRangeError",
    "InfeasibleConstraintError",
    "LossResult",
    "LrSchedule",
    "MissingFileError",
    "MlpParams",
    "NonFiniteLossError",
    "NtXentConfig",
    "OBJECTIVE_NAMES",
    "PairedDataset",
    "PolynomialWeights",
    "RECALL_KS",
    "RecallReport",
    "RetrievalIndex",
    "RunReport",
    "SeedRun",
    "ShapeMismatchError",
    "SyntheticSpec",
    "TrainConfig",
    "TrainResult",
    "TripletConfig",
    "ZeroNormRowError",
    "adam_init",
    "adam_step",
    "aggregate_reports",
    "backprop_to_embeddings",
    "comparison_csv",
    "comparison_markdown",
    "cosine_similarity_matrix",
    "epoch_metrics_csv",
    "evaluate_heads",
    "format_mean_std",
    "generate_synthetic",
    "l2_normalize_rows",
    "load_checkpoint",
    "load_dataset",
    "lr_at_epoch",
    "make_recall_report",
    "mean_std",
    "mlp_backward",
    "mlp_forward",
    "mlp_init",
    "negative_pair_weight",
    "nt_xent",
    "objective_fn",
    "plan_batches",
    "positive_pair_weight",
    "rank_of_target",
    "read_features",
    "recall_at_k",
    "recall_report_csv",
    "recall_report_table",
    "run_comparison",
    "save_checkpoint",
    "save_dataset",
    "similarity_scores",
    "sum_of_recalls",
    "train_one",
    "triplet_max",
    "triplet_sum",
    "triplet_weighted",
]
