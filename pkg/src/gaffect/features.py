"""Per-face feature construction and per-image aggregation.

A face is described either by a deep-embedding vector taken from one of the
four network taps, or by the 2278 unique pairwise distances between its 68
landmarks divided by the largest distance.  A group photo holds a variable
number of faces; the image-level descriptor is the component-wise median of
its face descriptors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import DegenerateGeometryError, EmptyInputError, InvalidInputError
from .modalities import LANDMARK_PAIR_COUNT, N_LANDMARKS, modality_dim
from .validation import as_float_matrix, as_float_vector, check_finite


def pairwise_distances(points) -> np.ndarray:
    """Euclidean distances between all unique point pairs.

    Pairs are ordered lexicographically over indices (i, j) with i < j, so
    the output has length n*(n-1)/2.
    """
    pts = as_float_matrix(points, "points")
    if pts.shape[0] < 2:
        raise InvalidInputError(f"need at least 2 points, got {pts.shape[0]}")
    check_finite(pts, "points")
    i, j = np.triu_indices(pts.shape[0], k=1)
    diff = pts[i] - pts[j]
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def pairwise_landmark_distances(landmarks) -> np.ndarray:
    """Distance vector (length 2278) for one 68-point landmark set."""
    pts = as_float_matrix(landmarks, "landmarks")
    if pts.shape != (N_LANDMARKS, 2):
        raise InvalidInputError(
            f"landmarks must have shape ({N_LANDMARKS}, 2), got {pts.shape}"
        )
    out = pairwise_distances(pts)
    assert out.shape[0] == LANDMARK_PAIR_COUNT
    return out


def normalize_by_max(raw) -> np.ndarray:
    """Divide a nonnegative distance vector by its maximum entry.

    The result lies in [0, 1] with at least one entry equal to 1.  All-zero
    input has no defined scale and raises ``DegenerateGeometryError`` so the
    caller can skip the face.
    """
    arr = as_float_vector(raw, "distances")
    if arr.size == 0:
        raise EmptyInputError("distance vector is empty")
    check_finite(arr, "distances")
    if (arr < 0).any():
        raise InvalidInputError("distances must be nonnegative")
    top = float(arr.max())
    if top == 0.0:
        raise DegenerateGeometryError("all distances are zero (coincident landmarks)")
    return arr / top


def normalize_by_mean(raw) -> np.ndarray:
    """Divide by the mean distance instead of the maximum.

    Non-default variant kept for experiment parity; the default pipeline
    always normalizes by the maximum.
    """
    arr = as_float_vector(raw, "distances")
    if arr.size == 0:
        raise EmptyInputError("distance vector is empty")
    check_finite(arr, "distances")
    if (arr < 0).any():
        raise InvalidInputError("distances must be nonnegative")
    center = float(arr.mean())
    if center == 0.0:
        raise DegenerateGeometryError("all distances are zero (coincident landmarks)")
    return arr / center


LANDMARK_NORMALIZERS = {"max": normalize_by_max, "mean": normalize_by_mean}


def aggregate_median(rows) -> np.ndarray:
    """Component-wise median over face rows.

    With an even row count each component is the mean of the two middle
    order statistics.  Zero rows raise ``EmptyInputError``; routing for
    no-face images happens upstream.
    """
    arr = as_float_matrix(rows, "rows")
    if arr.shape[0] == 0:
        raise EmptyInputError("cannot aggregate zero faces")
    return np.median(arr, axis=0)


def aggregate_mean(rows) -> np.ndarray:
    """Component-wise mean over face rows (comparison mode, not the default)."""
    arr = as_float_matrix(rows, "rows")
    if arr.shape[0] == 0:
        raise EmptyInputError("cannot aggregate zero faces")
    # summing each column in sorted order makes the float result independent
    # of row order
    return np.sort(arr, axis=0).sum(axis=0) / arr.shape[0]


AGGREGATORS = {"median": aggregate_median, "mean": aggregate_mean}


@dataclass(frozen=True)
class FeatureMatrix:
    """All face descriptors of one image for a single modality.

    ``values`` has shape (n_faces, dim); zero faces is a valid state and is
    what routes an image to the full-image fallback.
    """

    image_id: str
    modality: str
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = as_float_matrix(self.values, "values")
        dim = modality_dim(self.modality)
        if arr.shape[1] != dim:
            raise InvalidInputError(
                f"{self.modality} rows must have {dim} entries, got {arr.shape[1]}"
            )
        check_finite(arr, "values")
        object.__setattr__(self, "values", arr)

    @property
    def n_faces(self) -> int:
        return self.values.shape[0]

    def aggregate(self, mode: str = "median") -> np.ndarray:
        try:
            agg = AGGREGATORS[mode]
        except KeyError:
            raise InvalidInputError(f"unknown aggregate mode {mode!r}") from None
        return agg(self.values)


class LandmarkDistanceFeaturizer(BaseEstimator, TransformerMixin):
    """Turn batches of 68-point landmark sets into normalized distance rows.

    Stateless; ``fit`` exists only so the transformer drops into sklearn
    pipelines.
    """

    def __init__(self, norm: str = "max"):
        self.norm = norm

    def fit(self, X, y=None):
        if self.norm not in LANDMARK_NORMALIZERS:
            raise InvalidInputError(f"unknown norm {self.norm!r}")
        return self

    def transform(self, X) -> np.ndarray:
        self.fit(X)
        normalizer = LANDMARK_NORMALIZERS[self.norm]
        batch = np.asarray(X, dtype=np.float64)
        if batch.ndim != 3 or batch.shape[1:] != (N_LANDMARKS, 2):
            raise InvalidInputError(
                f"expected shape (n, {N_LANDMARKS}, 2), got {batch.shape}"
            )
        return np.stack(
            [normalizer(pairwise_landmark_distances(pts)) for pts in batch]
        )
