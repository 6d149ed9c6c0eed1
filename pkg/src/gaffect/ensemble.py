"""Six-slot ensemble: five per-modality forests plus a full-image fallback.

Slot scores are probability 3-vectors.  Fusion is a weighted sum with the
weights estimated as each slot's validation accuracy, renormalized so the
fused vector sums to 1; the decision is the argmax with ties going to the
lowest class index.  Images where no face was detected are decided by the
full-image slot alone.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import (
    EmptyInputError,
    InvalidInputError,
    ModelError,
    NoUsablePredictorError,
    UnclassifiableRecordError,
)
from .features import AGGREGATORS, FeatureMatrix
from .forest import RandomForest
from .modalities import (
    FOREST_SLOTS,
    FULLIMAGE_SLOT,
    N_CLASSES,
    SLOT_IDS,
    SLOT_MODALITY,
)
from .validation import check_proba

log = logging.getLogger(__name__)

FULLIMAGE_MODES = ("always", "fallback_only")
WEIGHT_POLICIES = ("accuracy", "accuracy_minus_chance", "softmax")


@dataclass(frozen=True)
class FaceBox:
    """Axis-aligned face detection box in pixel units."""

    x: float
    y: float
    width: float
    height: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise InvalidInputError("face box must have positive width and height")


@dataclass(frozen=True)
class DetectionBundle:
    """Raw output of both detectors before cascade routing."""

    primary_detections: tuple[FaceBox, ...] = ()
    fallback_detections: tuple[FaceBox, ...] = ()


def detector_cascade_select(bundle: DetectionBundle) -> tuple[FaceBox, ...]:
    """Primary detections when any exist, otherwise the fallback's.

    An empty result means the image must be routed to the full-image slot.
    """
    if bundle.primary_detections:
        return tuple(bundle.primary_detections)
    return tuple(bundle.fallback_detections)


@dataclass(frozen=True)
class ImageRecord:
    """One group photo: per-modality face features plus optional extras.

    Present modalities must agree on the face count.  ``fullimage_score``
    is the externally computed whole-image probability vector, absent when
    that classifier was not run.
    """

    image_id: str
    features: dict[str, FeatureMatrix] = field(default_factory=dict)
    fullimage_score: np.ndarray | None = None
    gold_label: int | None = None

    def __post_init__(self):
        counts = {m: fm.n_faces for m, fm in self.features.items()}
        if len(set(counts.values())) > 1:
            raise InvalidInputError(
                f"{self.image_id}: inconsistent face counts across modalities: {counts}"
            )
        if self.fullimage_score is not None:
            object.__setattr__(
                self,
                "fullimage_score",
                check_proba(self.fullimage_score, N_CLASSES, name="fullimage_score"),
            )
        if self.gold_label is not None and self.gold_label not in range(N_CLASSES):
            raise InvalidInputError(
                f"{self.image_id}: gold_label must lie in [0, {N_CLASSES})"
            )

    @property
    def n_faces(self) -> int:
        for fm in self.features.values():
            return fm.n_faces
        return 0


@dataclass(frozen=True)
class ClassificationResult:
    image_id: str
    label: int
    fused: np.ndarray
    slots_used: tuple[str, ...]


def fuse(scores) -> np.ndarray:
    """Weighted sum of (3-vector, weight) pairs, renormalized to sum 1.

    Zero-weight entries are skipped outright, so adding one never perturbs
    the result even at the bit level.
    """
    entries = list(scores)
    if not entries:
        raise EmptyInputError("nothing to fuse")
    acc = np.zeros(N_CLASSES)
    total = 0.0
    for vec, weight in entries:
        vec = check_proba(vec, N_CLASSES)
        w = float(weight)
        if not np.isfinite(w) or w < 0:
            raise InvalidInputError(f"weight must be finite and >= 0, got {weight!r}")
        if w == 0.0:
            continue
        acc += w * vec
        total += w
    if total == 0.0:
        raise NoUsablePredictorError("all fusion weights are zero")
    fused = acc / total
    return fused / fused.sum()


def _weights_from_accuracies(accuracies: dict, policy: str, softmax_temperature: float):
    if policy == "accuracy":
        return dict(accuracies)
    if policy == "accuracy_minus_chance":
        return {s: max(a - 1.0 / N_CLASSES, 0.0) for s, a in accuracies.items()}
    if policy == "softmax":
        if softmax_temperature <= 0:
            raise InvalidInputError("softmax_temperature must be > 0")
        scored = {s: a for s, a in accuracies.items() if a > 0.0}
        if not scored:
            return {s: 0.0 for s in accuracies}
        top = max(scored.values())
        exps = {s: np.exp((a - top) / softmax_temperature) for s, a in scored.items()}
        z = sum(exps.values())
        return {s: float(exps.get(s, 0.0) / z) for s in accuracies}
    raise InvalidInputError(f"unknown weight policy {policy!r}")


class EmotionEnsemble:
    """Complete six-slot model: five trained forests and the fallback slot.

    Immutable once weights are set; classification is pure and safe to run
    concurrently across records.
    """

    def __init__(
        self,
        forests: dict[str, RandomForest],
        weights: dict[str, float] | None = None,
        fullimage_mode: str = "always",
        aggregate: str = "median",
    ):
        missing = [s for s in FOREST_SLOTS if s not in forests]
        if missing:
            raise ModelError(f"ensemble is missing forest slots: {missing}")
        unknown = [s for s in forests if s not in FOREST_SLOTS]
        if unknown:
            raise ModelError(f"unknown forest slots: {unknown}")
        for slot, forest in forests.items():
            if forest.modality != SLOT_MODALITY[slot]:
                raise ModelError(
                    f"slot {slot} requires a {SLOT_MODALITY[slot]} forest, "
                    f"got modality {forest.modality!r}"
                )
        if fullimage_mode not in FULLIMAGE_MODES:
            raise InvalidInputError(f"fullimage_mode must be one of {FULLIMAGE_MODES}")
        if aggregate not in AGGREGATORS:
            raise InvalidInputError(f"aggregate must be one of {tuple(AGGREGATORS)}")
        self.forests = dict(forests)
        self.fullimage_mode = fullimage_mode
        self.aggregate = aggregate
        self.weights = {s: 1.0 for s in SLOT_IDS}
        if weights is not None:
            self.set_weights(weights)

    def set_weights(self, weights: dict[str, float]) -> None:
        unknown = [s for s in weights if s not in SLOT_IDS]
        if unknown:
            raise InvalidInputError(f"unknown slots in weights: {unknown}")
        merged = {s: float(weights.get(s, self.weights[s])) for s in SLOT_IDS}
        for slot, w in merged.items():
            if not np.isfinite(w) or w < 0:
                raise InvalidInputError(f"weight for {slot} must be finite and >= 0")
        self.weights = merged

    def _batch_scores(self, records) -> dict[str, dict[int, np.ndarray]]:
        """Per-slot probability scores, keyed by record position.

        A record is scored by a forest slot when its modality is present
        with at least one face, and by the full-image slot when its score
        is present; routing policy is applied later.
        """
        per_slot: dict[str, dict[int, np.ndarray]] = {s: {} for s in SLOT_IDS}
        for slot in FOREST_SLOTS:
            modality = SLOT_MODALITY[slot]
            rows, positions = [], []
            for pos, record in enumerate(records):
                fm = record.features.get(modality)
                if fm is None or fm.n_faces == 0:
                    continue
                rows.append(fm.aggregate(self.aggregate))
                positions.append(pos)
            if not rows:
                continue
            proba = self.forests[slot].predict_proba(np.asarray(rows))
            per_slot[slot] = {pos: proba[i] for i, pos in enumerate(positions)}
        per_slot[FULLIMAGE_SLOT] = {
            pos: record.fullimage_score
            for pos, record in enumerate(records)
            if record.fullimage_score is not None
        }
        return per_slot

    def predict_records(self, records) -> list[ClassificationResult]:
        records = list(records)
        per_slot = self._batch_scores(records)
        results = []
        for pos, record in enumerate(records):
            if record.n_faces == 0:
                score = per_slot[FULLIMAGE_SLOT].get(pos)
                if score is None:
                    raise UnclassifiableRecordError(
                        f"{record.image_id}: no faces and no full-image score"
                    )
                fused = score / score.sum()
                results.append(
                    ClassificationResult(
                        record.image_id,
                        int(np.argmax(fused)),
                        fused,
                        (FULLIMAGE_SLOT,),
                    )
                )
                continue
            contributions, used = [], []
            for slot in SLOT_IDS:
                score = per_slot[slot].get(pos)
                if score is None:
                    continue
                if slot == FULLIMAGE_SLOT and self.fullimage_mode == "fallback_only":
                    continue
                contributions.append((score, self.weights[slot]))
                used.append(slot)
            fused = fuse(contributions)
            results.append(
                ClassificationResult(
                    record.image_id, int(np.argmax(fused)), fused, tuple(used)
                )
            )
        return results

    def classify(self, record: ImageRecord) -> ClassificationResult:
        return self.predict_records([record])[0]

    def slot_accuracies(self, records) -> tuple[dict[str, float], dict[str, int]]:
        """Stand-alone argmax accuracy of every slot on its scorable records."""
        records = list(records)
        labeled = [
            (pos, r.gold_label) for pos, r in enumerate(records) if r.gold_label is not None
        ]
        if not labeled:
            raise InvalidInputError("no record carries a gold label")
        per_slot = self._batch_scores(records)
        accuracies, scored_counts = {}, {}
        for slot in SLOT_IDS:
            scored = [
                (per_slot[slot][pos], gold)
                for pos, gold in labeled
                if pos in per_slot[slot]
            ]
            scored_counts[slot] = len(scored)
            if not scored:
                accuracies[slot] = 0.0
                continue
            correct = sum(
                1 for score, gold in scored if int(np.argmax(score)) == gold
            )
            accuracies[slot] = correct / len(scored)
        return accuracies, scored_counts

    def apply_weight_policy(
        self,
        accuracies: dict[str, float],
        scored_counts: dict[str, int],
        policy: str = "accuracy",
        softmax_temperature: float = 0.05,
    ) -> dict[str, float]:
        weights = _weights_from_accuracies(accuracies, policy, softmax_temperature)
        muted = [s for s, n in scored_counts.items() if n == 0]
        if muted:
            log.warning("slots scored no validation records, muting: %s", muted)
            for slot in muted:
                weights[slot] = 0.0
        self.set_weights(weights)
        return dict(self.weights)

    def estimate_weights(
        self,
        records,
        policy: str = "accuracy",
        softmax_temperature: float = 0.05,
    ) -> dict[str, float]:
        """Set fusion weights from per-slot validation accuracy.

        Weights are not renormalized; the fused argmax is invariant to a
        common positive scale.  Slots that scored zero records get weight 0.
        """
        accuracies, scored_counts = self.slot_accuracies(records)
        return self.apply_weight_policy(
            accuracies, scored_counts, policy, softmax_temperature
        )


@dataclass(frozen=True)
class EvalReport:
    """Accuracy metrics plus the gold-by-predicted confusion matrix."""

    accuracy: float
    per_class_recall: np.ndarray
    confusion: np.ndarray
    n_images: int
    n_noface_images: int = 0

    def row_normalized(self) -> np.ndarray:
        totals = self.confusion.sum(axis=1, keepdims=True)
        return self.confusion / np.where(totals == 0, 1, totals)

    def to_payload(self) -> dict:
        return {
            "format": "gaffect-report",
            "version": 1,
            "accuracy": self.accuracy,
            "per_class_recall": self.per_class_recall.tolist(),
            "confusion": self.confusion.tolist(),
            "confusion_row_normalized": self.row_normalized().tolist(),
            "n_images": self.n_images,
            "n_noface_images": self.n_noface_images,
        }


def evaluate(predictions, gold_labels, n_noface_images: int = 0) -> EvalReport:
    """Overall accuracy, per-class recall, and the 3x3 confusion matrix.

    Rows of the matrix are gold classes, columns are predictions, so
    trace/total is exactly the accuracy.
    """
    pred = np.asarray(predictions, dtype=np.int64)
    gold = np.asarray(gold_labels, dtype=np.int64)
    if pred.ndim != 1 or gold.ndim != 1:
        raise InvalidInputError("predictions and gold labels must be 1-D")
    if pred.shape[0] != gold.shape[0]:
        raise InvalidInputError(
            f"length mismatch: {pred.shape[0]} predictions vs {gold.shape[0]} labels"
        )
    if pred.shape[0] == 0:
        raise EmptyInputError("nothing to evaluate")
    for name, arr in (("predictions", pred), ("gold labels", gold)):
        if arr.min() < 0 or arr.max() >= N_CLASSES:
            raise InvalidInputError(f"{name} must lie in [0, {N_CLASSES})")
    confusion = np.bincount(
        gold * N_CLASSES + pred, minlength=N_CLASSES * N_CLASSES
    ).reshape(N_CLASSES, N_CLASSES)
    row_totals = confusion.sum(axis=1)
    recall = np.diag(confusion) / np.where(row_totals == 0, 1, row_totals)
    return EvalReport(
        accuracy=int(np.trace(confusion)) / int(pred.shape[0]),
        per_class_recall=recall,
        confusion=confusion,
        n_images=int(pred.shape[0]),
        n_noface_images=n_noface_images,
    )


def with_noface_count(report: EvalReport, n_noface_images: int) -> EvalReport:
    return replace(report, n_noface_images=n_noface_images)
