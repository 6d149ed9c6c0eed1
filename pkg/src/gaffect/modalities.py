"""Label and modality registry shared by every stage of the pipeline."""

LABEL_NAMES = ("Positive", "Neutral", "Negative")
LABEL_TO_INDEX = {name: i for i, name in enumerate(LABEL_NAMES)}
N_CLASSES = 3

N_LANDMARKS = 68
# unique unordered pairs of 68 points
LANDMARK_PAIR_COUNT = N_LANDMARKS * (N_LANDMARKS - 1) // 2

MODALITY_DIMS = {
    "avgpool_rgb": 512,
    "avgpool_bgr": 512,
    "fc7_rgb": 4096,
    "fc7_bgr": 4096,
    "landmarks": LANDMARK_PAIR_COUNT,
}
FACE_MODALITIES = tuple(MODALITY_DIMS)

FULLIMAGE_SLOT = "fullimage_cnn"
FOREST_SLOTS = (
    "rf_avgpool_rgb",
    "rf_avgpool_bgr",
    "rf_fc7_rgb",
    "rf_fc7_bgr",
    "rf_landmarks",
)
SLOT_IDS = FOREST_SLOTS + (FULLIMAGE_SLOT,)
SLOT_MODALITY = {slot: slot[len("rf_"):] for slot in FOREST_SLOTS}


def modality_dim(modality: str) -> int:
    try:
        return MODALITY_DIMS[modality]
    except KeyError:
        raise KeyError(
            f"unknown modality {modality!r}; expected one of {sorted(MODALITY_DIMS)}"
        ) from None
