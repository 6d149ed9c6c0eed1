"""Synthetic three-class dataset in the canonical on-disk layout.

The generator emits real feature/score/manifest files so the whole
train/weights/predict/eval path can run without any image data.  Design
goals, checked by the test suite against an independent nearest-centroid
oracle:

* every slot is deliberately worse than the fused ensemble: each embedding
  modality nearly collapses one class pair (a different pair per modality),
  the landmark geometry is globally noisy, and the full-image scores are a
  mediocre classifier;
* per-face corruption is heavy-tailed (Cauchy outlier faces), so median
  aggregation is markedly more robust than mean aggregation.

Everything is drawn from Philox streams keyed by (seed, purpose), so a
given (config, seed) regenerates byte-identical files.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .config import SynthConfig
from .features import FeatureMatrix, normalize_by_max, pairwise_landmark_distances
from .io import write_feature_file, write_manifest, write_score_file
from .modalities import FACE_MODALITIES, N_CLASSES

# class pair each embedding modality nearly collapses
CONFUSED_PAIRS = {
    "avgpool_rgb": (0, 1),
    "avgpool_bgr": (1, 2),
    "fc7_rgb": (0, 2),
    "fc7_bgr": (0, 1),
}

_STREAM_SETUP = 1000
_STREAM_TRAIN = 1001
_STREAM_VALIDATION = 1002


def _rng(seed: int, purpose: int) -> np.random.Generator:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, purpose], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def landmark_template() -> np.ndarray:
    """Neutral 68-point face in a unit frame (x right, y down)."""
    pts = np.zeros((68, 2))
    t = np.linspace(0.0, math.pi, 17)
    pts[0:17, 0] = 0.5 - 0.40 * np.cos(t)
    pts[0:17, 1] = 0.45 + 0.48 * np.sin(t)
    arc = np.sin(np.linspace(0.0, math.pi, 5))
    pts[17:22, 0] = np.linspace(0.18, 0.42, 5)
    pts[17:22, 1] = 0.30 - 0.03 * arc
    pts[22:27, 0] = np.linspace(0.58, 0.82, 5)
    pts[22:27, 1] = 0.30 - 0.03 * arc
    pts[27:31, 0] = 0.5
    pts[27:31, 1] = np.linspace(0.36, 0.58, 4)
    pts[31:36, 0] = np.linspace(0.42, 0.58, 5)
    pts[31:36, 1] = 0.64 + 0.02 * np.sin(np.linspace(0.0, math.pi, 5))
    pts[36:42] = [
        [0.24, 0.400], [0.27, 0.375], [0.33, 0.375],
        [0.36, 0.400], [0.33, 0.425], [0.27, 0.425],
    ]
    pts[42:48] = [
        [0.64, 0.400], [0.67, 0.375], [0.73, 0.375],
        [0.76, 0.400], [0.73, 0.425], [0.67, 0.425],
    ]
    pts[48:60] = [
        [0.36, 0.780],
        [0.40, 0.750], [0.45, 0.735], [0.50, 0.740], [0.55, 0.735], [0.60, 0.750],
        [0.64, 0.780],
        [0.60, 0.815], [0.55, 0.830], [0.50, 0.835], [0.45, 0.830], [0.40, 0.815],
    ]
    pts[60:68] = [
        [0.38, 0.780],
        [0.44, 0.765], [0.50, 0.760], [0.56, 0.765],
        [0.62, 0.780],
        [0.56, 0.795], [0.50, 0.800], [0.44, 0.795],
    ]
    return pts


_MOUTH_CORNERS = (48, 54, 60, 64)
_LIP_CENTERS = (51, 57, 62, 66)
_BROWS = tuple(range(17, 27))


def _expressed_face(expression: float) -> np.ndarray:
    """Template deformed by a scalar expression (positive = smile)."""
    pts = landmark_template().copy()
    pts[list(_MOUTH_CORNERS), 1] -= 0.035 * expression
    pts[list(_LIP_CENTERS), 1] += 0.012 * expression
    pts[list(_BROWS), 1] -= 0.015 * expression
    return pts


def _embedding_means(cfg: SynthConfig, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Per-modality (3, dim) class means over a random informative subset."""
    means = {}
    for modality, (a, b) in CONFUSED_PAIRS.items():
        if modality.startswith("avgpool"):
            dim, n_inf = 512, cfg.avgpool_informative
            g_conf, g_sep = cfg.avgpool_gap_confused, cfg.avgpool_gap_separated
        else:
            dim, n_inf = 4096, cfg.fc7_informative
            g_conf, g_sep = cfg.fc7_gap_confused, cfg.fc7_gap_separated
        other = next(c for c in range(N_CLASSES) if c not in (a, b))
        informative = rng.permutation(dim)[:n_inf]
        sep_sign = rng.choice([-1.0, 1.0], size=n_inf)
        conf_sign = rng.choice([-1.0, 1.0], size=n_inf)
        mu = np.zeros((N_CLASSES, dim))
        mu[other, informative] = sep_sign * g_sep
        mu[a, informative] = conf_sign * g_conf
        mu[b, informative] = -conf_sign * g_conf
        means[modality] = mu
    return means


def _landmark_rows(
    cfg: SynthConfig, rng: np.random.Generator, expression_img: float, outliers: np.ndarray
) -> np.ndarray:
    rows = []
    for is_outlier in outliers:
        expression = expression_img + cfg.lm_face_noise * rng.standard_normal()
        pts = _expressed_face(expression)
        scale = rng.uniform(40.0, 160.0)
        angle = rng.uniform(-0.35, 0.35)
        rot = np.array(
            [[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]]
        )
        shift = rng.uniform(0.0, 800.0, size=2)
        placed = (pts - 0.5) @ rot.T * scale + shift
        jitter = cfg.lm_jitter * scale
        if is_outlier:
            jitter *= cfg.lm_outlier_jitter_mult
        placed += rng.normal(0.0, jitter, size=placed.shape)
        rows.append(normalize_by_max(pairwise_landmark_distances(placed)))
    return np.asarray(rows)


def _fullimage_score(cfg: SynthConfig, rng: np.random.Generator, label: int) -> np.ndarray:
    logits = rng.standard_normal(N_CLASSES)
    logits[label] += cfg.fullimage_strength
    exps = np.exp(logits - logits.max())
    return exps / exps.sum()


def generate_split(
    out_dir: Path,
    split: str,
    n_images: int,
    cfg: SynthConfig,
    means: dict[str, np.ndarray],
    rng: np.random.Generator,
    prefix: str,
) -> list[dict]:
    features_dir = out_dir / "features"
    scores_dir = out_dir / "scores"
    features_dir.mkdir(parents=True, exist_ok=True)
    scores_dir.mkdir(parents=True, exist_ok=True)
    pmf = np.asarray(cfg.faces_pmf, dtype=np.float64)
    pmf = pmf / pmf.sum()

    entries = []
    for i in range(n_images):
        label = i % N_CLASSES
        image_id = f"{prefix}_{i:04d}"
        n_faces = int(rng.choice(len(pmf), p=pmf))
        outliers = rng.random(n_faces) < cfg.outlier_fraction

        entry_features = {}
        for modality in CONFUSED_PAIRS:
            dim = means[modality].shape[1]
            image_core = means[modality][label] + cfg.sigma_image * rng.standard_normal(dim)
            rows = image_core + cfg.sigma_face * rng.standard_normal((n_faces, dim))
            if outliers.any():
                # heavy-tailed but bounded, so a poisoned row drags the mean
                # far off while aggregate statistics stay finite
                rows[outliers] += np.clip(
                    cfg.outlier_scale * rng.standard_cauchy((int(outliers.sum()), dim)),
                    -cfg.outlier_clip,
                    cfg.outlier_clip,
                )
            matrix = FeatureMatrix(image_id=image_id, modality=modality, values=rows)
            rel = f"features/{image_id}.{modality}.feat"
            write_feature_file(out_dir / rel, matrix, fmt=cfg.feature_fmt)
            entry_features[modality] = rel

        expression_img = cfg.lm_class_strength * (1 - label) + cfg.lm_expression_noise * rng.standard_normal()
        if n_faces == 0:
            lm_rows = np.empty((0, 2278))
        else:
            lm_rows = _landmark_rows(cfg, rng, expression_img, outliers)
        matrix = FeatureMatrix(image_id=image_id, modality="landmarks", values=lm_rows)
        rel = f"features/{image_id}.landmarks.feat"
        write_feature_file(out_dir / rel, matrix, fmt=cfg.feature_fmt)
        entry_features["landmarks"] = rel

        score_rel = f"scores/{image_id}.score"
        write_score_file(out_dir / score_rel, _fullimage_score(cfg, rng, label))

        entries.append(
            {
                "image_id": image_id,
                "label": label,
                "features": entry_features,
                "fullimage": score_rel,
            }
        )

    write_manifest(out_dir / f"{split}.manifest", split, entries)
    return entries


def generate_dataset(out_dir, cfg: SynthConfig, seed: int = 0) -> dict:
    """Write train + validation splits; returns a small summary dict."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    means = _embedding_means(cfg, _rng(seed, _STREAM_SETUP))
    train = generate_split(
        out_dir, "train", cfg.n_train, cfg, means, _rng(seed, _STREAM_TRAIN), "train"
    )
    validation = generate_split(
        out_dir,
        "validation",
        cfg.n_validation,
        cfg,
        means,
        _rng(seed, _STREAM_VALIDATION),
        "val",
    )
    assert set(FACE_MODALITIES) == set(train[0]["features"]), "every modality emitted"
    return {
        "out_dir": str(out_dir),
        "n_train": len(train),
        "n_validation": len(validation),
        "train_manifest": str(out_dir / "train.manifest"),
        "validation_manifest": str(out_dir / "validation.manifest"),
        "seed": seed,
    }
