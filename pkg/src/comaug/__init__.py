"""Curriculum-driven object manipulation for LiDAR detection training.

Difficulty-clustered ground-truth augmentation (COMAug) plus
difficulty-adaptive loss weighting (COMLoss), with a synthetic
closed-loop harness that reproduces the curriculum's sampling dynamics
at desk scale.
"""

from .geometry import (
    Box3D,
    ObjectFeatures,
    VoxelScheme,
    VEHICLE_VOXELS,
    PEDESTRIAN_VOXELS,
    compute_features,
    feature_angle,
    feature_distance,
    feature_occupancy,
    feature_size,
    point_in_box,
)
from .gt_database import (
    CLASS_NAMES,
    Frame,
    GtDatabase,
    GtObject,
    Label,
    build_database,
    extract_objects,
    load_database,
    read_manifest,
    read_point_file,
    save_database,
    write_manifest,
    write_point_file,
)
from .clustering import (
    BinningRule,
    GroupRegistry,
    assign_group,
    build_registry,
    default_rules,
    load_rules,
    reduced_rule,
    save_rules,
)
from .comloss import (
    LossWeightConfig,
    ObjectLossRecord,
    ThresholdState,
    WeightedLossReport,
    difficulty,
    total_loss,
    update_threshold,
    weigh_records,
    weight,
)
from .difficulty_tracker import GroupScores, ScorePool, end_epoch, init_scores
from .sampler import CurriculumState, SamplingPlan, center, draw, plan
from .scene_composer import (
    AugmentedFrame,
    ComposerConfig,
    Placement,
    collide,
    compose,
    place,
    quota,
)
from .harness import (
    DetectorProxy,
    DifficultyModel,
    HarnessConfig,
    SyntheticSpec,
    TrendReport,
    generate_synthetic_db,
    run_experiment,
    sweep,
)
from .seeding import make_rng, worker_seed

__version__ = "0.1.0"
