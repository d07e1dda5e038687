"""Dual-arm proximity toolkit.

Exact minimum distance between two 7-DOF arms from joint configurations,
synthetic labeled dataset generation, a from-scratch neural distance
regressor, and collision warnings below a configurable threshold.
"""

from .kinematics import (
    DH_TABLE,
    NUM_FRAMES,
    NUM_JOINTS,
    REACH_BOUND,
    ArmPolyline,
    DhRow,
    HomTransform,
    control_points,
    dh_table,
    ee_transform,
    forward_frames,
    link_transform,
    load_dh_table,
    relative_base_transform,
)
from .proximity import (
    DEFAULT_THRESHOLD,
    PairResult,
    ProximityResult,
    Segment,
    arm_min_distance,
    is_collision,
    psi_gradient,
    sampled_oracle,
    segment_pair_distance,
    vertex_box_oracle,
)
from .dataset import (
    DEFAULT_MASK,
    Dataset,
    DatasetFormatError,
    FeatureSpec,
    GenSpec,
    SampleRecord,
    generate_dataset,
    preprocess,
    read_dataset,
    sample_configuration,
    split,
    write_dataset,
)
from .neural import (
    CheckpointError,
    LossHistory,
    Metrics,
    MlpParams,
    MlpSpec,
    TrainConfig,
    TrainingDiverged,
    charbonnier_loss,
    error_metric,
    evaluate,
    forward,
    init_model,
    load_checkpoint,
    predict_min_distance,
    save_checkpoint,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "DH_TABLE",
    "NUM_FRAMES",
    "NUM_JOINTS",
    "REACH_BOUND",
    "DEFAULT_THRESHOLD",
    "DEFAULT_MASK",
    "ArmPolyline",
    "DhRow",
    "HomTransform",
    "Segment",
    "PairResult",
    "ProximityResult",
    "Dataset",
    "DatasetFormatError",
    "FeatureSpec",
    "GenSpec",
    "SampleRecord",
    "CheckpointError",
    "LossHistory",
    "Metrics",
    "MlpParams",
    "MlpSpec",
    "TrainConfig",
    "TrainingDiverged",
    "control_points",
    "dh_table",
    "ee_transform",
    "forward_frames",
    "link_transform",
    "load_dh_table",
    "relative_base_transform",
    "arm_min_distance",
    "is_collision",
    "psi_gradient",
    "sampled_oracle",
    "segment_pair_distance",
    "vertex_box_oracle",
    "generate_dataset",
    "preprocess",
    "read_dataset",
    "sample_configuration",
    "split",
    "write_dataset",
    "charbonnier_loss",
    "error_metric",
    "evaluate",
    "forward",
    "init_model",
    "load_checkpoint",
    "predict_min_distance",
    "save_checkpoint",
    "train",
]
