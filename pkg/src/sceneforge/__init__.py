"""sceneforge: physically valid 3D object insertion into point-cloud
scenes, grounding prompt generation with alignment targets, and the
matching detection loss / evaluation numerics."""

from .errors import (
    AmbiguousSpansError,
    AugmentationFailedError,
    EmptyInputError,
    InvalidConfigError,
    InvalidExpressionError,
    MissingCategoryStatsError,
    NoAnchorAvailableError,
    NoPositivePairsError,
    NotFoundError,
    NoTargetAvailableError,
    ParseError,
    PlacementFailedError,
    SceneForgeError,
    WrongVariantError,
)
from .geometry import (
    Box3,
    bounds_from_points,
    enclosing_box,
    giou3d,
    intersection_volume,
    iou3d_axis_aligned,
    iou3d_oriented,
)
from .scene import AnchorExpression, ObjectAnnotation, Point3, PointCloud, Scene, SupportRole
from .ingestion import (
    AssetBank,
    AugmentConfig,
    BenchmarkSplit,
    CategoryEntry,
    CategorySplit,
    CategoryTable,
    ObjectAsset,
    augment_points,
    compute_category_stats,
    normalize_and_resample,
)
from .insertion import (
    HeightMap,
    InsertionConfig,
    InsertionRecord,
    Placement,
    ValidityReport,
    augment_scene,
    build_height_map,
    check_physical_validity,
    insert_object,
    sample_placement,
    select_anchor,
    select_target,
)
from .prompts import (
    AlignmentTarget,
    GroundingSample,
    PromptType,
    RelationThresholds,
    SampleTarget,
    SpatialRelation,
    absolute_location_prompt,
    alignment_target,
    classify_relation,
    detection_prompt,
    generate_samples,
    parse_anchor_expression,
    relative_location_prompt,
    spatial_prompt,
    tokenize,
    verify_unique,
)
from .losses import (
    AlignmentBatch,
    BoxRegressionBatch,
    FeatureBatch,
    alignment_loss,
    contrastive_grad,
    contrastive_loss,
    localization_loss,
)
from .evaluation import (
    Detection,
    EvalReport,
    Scannet200Split,
    average_precision,
    evaluate,
    match_detections,
    scannet200_split,
)
from .io import load_asset_bank, load_benchmark_split, load_scenes
from .rng import RandomStream, derive_stream

__version__ = "0.1.0"
