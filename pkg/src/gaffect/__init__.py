"""Group-level emotion recognition from per-face features.

Feature construction (landmark pairwise distances, median aggregation over
a variable number of faces), a from-scratch seeded random forest, and an
accuracy-weighted six-slot ensemble with a full-image fallback for photos
where no face was detected.
"""

from .ensemble import (
    ClassificationResult,
    DetectionBundle,
    EmotionEnsemble,
    EvalReport,
    FaceBox,
    ImageRecord,
    detector_cascade_select,
    evaluate,
    fuse,
)
from .exceptions import (
    DataError,
    DegenerateGeometryError,
    EmptyInputError,
    GaffectError,
    InvalidInputError,
    ModelError,
    NoUsablePredictorError,
    ParseError,
    UnclassifiableRecordError,
)
from .features import (
    FeatureMatrix,
    LandmarkDistanceFeaturizer,
    aggregate_mean,
    aggregate_median,
    normalize_by_max,
    normalize_by_mean,
    pairwise_distances,
    pairwise_landmark_distances,
)
from .forest import (
    RandomForest,
    Tree,
    best_split,
    gini_impurity,
    grow_tree,
    load_forest,
    save_forest,
    tree_rng,
)
from .modalities import (
    FACE_MODALITIES,
    FOREST_SLOTS,
    FULLIMAGE_SLOT,
    LABEL_NAMES,
    LABEL_TO_INDEX,
    MODALITY_DIMS,
    N_CLASSES,
    SLOT_IDS,
    SLOT_MODALITY,
)

__version__ = "0.1.0"
