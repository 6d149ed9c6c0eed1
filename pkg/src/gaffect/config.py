"""Run configuration: forest hyperparameters, fusion policy, synth knobs.

Configs are JSON documents; every section and key is optional and falls
back to the defaults below.  Unknown keys are rejected so typos fail loudly
instead of silently running defaults.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .exceptions import DataError, InvalidInputError
from .forest import RandomForest
from .modalities import FOREST_SLOTS, SLOT_MODALITY


@dataclass
class ForestConfig:
    n_trees: int = 100
    max_depth: int | None = None
    min_samples_leaf: int = 1
    mtry: int | None = None
    bootstrap: bool = True
    n_jobs: int = 1


@dataclass
class FusionConfig:
    weight_policy: str = "accuracy"
    softmax_temperature: float = 0.05
    fullimage_mode: str = "always"
    # optional preset weights written into the bundle at train time, e.g.
    # published per-slot validation accuracies for parity runs
    weights: dict | None = None


@dataclass
class SynthConfig:
    """Generator knobs for the synthetic three-class fixture.

    Each embedding modality carries a dense noisy signal that separates one
    class well but nearly collapses one class pair; the pairs differ across
    modalities so fusing the slots recovers what any single one loses.
    Face rows are corrupted with heavy-tailed outliers, which is what makes
    median aggregation beat mean aggregation here.
    """

    n_train: int = 600
    n_validation: int = 300
    faces_pmf: list = field(
        default_factory=lambda: [0.04, 0.08, 0.10, 0.34, 0.28, 0.16]
    )
    sigma_image: float = 0.9
    sigma_face: float = 0.7
    outlier_fraction: float = 0.15
    outlier_scale: float = 4.0
    outlier_clip: float = 12.0
    avgpool_informative: int = 48
    avgpool_gap_confused: float = 0.15
    avgpool_gap_separated: float = 0.8
    fc7_informative: int = 96
    fc7_gap_confused: float = 0.13
    fc7_gap_separated: float = 0.7
    lm_class_strength: float = 1.0
    lm_expression_noise: float = 0.55
    lm_face_noise: float = 0.25
    lm_jitter: float = 0.012
    lm_outlier_jitter_mult: float = 8.0
    fullimage_strength: float = 1.15
    feature_fmt: str = "%.5g"


@dataclass
class Config:
    forest: ForestConfig = field(default_factory=ForestConfig)
    forest_per_slot: dict = field(default_factory=dict)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    aggregate: str = "median"
    seed: int = 0


def _build_section(cls, data: dict, where: str):
    allowed = {f.name for f in fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise DataError(f"unknown {where} config keys: {sorted(unknown)}")
    return cls(**data)


def load_config(path=None) -> Config:
    if path is None:
        return Config()
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise DataError(f"config root must be a JSON object: {path}")
    allowed = {f.name for f in fields(Config)}
    unknown = set(data) - allowed
    if unknown:
        raise DataError(f"unknown config keys: {sorted(unknown)}")
    cfg = Config(
        forest=_build_section(ForestConfig, data.get("forest", {}), "forest"),
        forest_per_slot=data.get("forest_per_slot", {}),
        fusion=_build_section(FusionConfig, data.get("fusion", {}), "fusion"),
        synth=_build_section(SynthConfig, data.get("synth", {}), "synth"),
        aggregate=data.get("aggregate", "median"),
        seed=data.get("seed", 0),
    )
    for slot, overrides in cfg.forest_per_slot.items():
        if slot not in FOREST_SLOTS:
            raise DataError(f"forest_per_slot names unknown slot {slot!r}")
        _build_section(ForestConfig, overrides, f"forest_per_slot.{slot}")
    if cfg.aggregate not in ("median", "mean"):
        raise DataError(f"aggregate must be 'median' or 'mean', got {cfg.aggregate!r}")
    return cfg


def slot_seed(seed: int, slot: str) -> int:
    """Stable per-slot seed so the five forests draw independent streams."""
    digest = hashlib.sha256(f"gaffect-slot-seed:{seed}:{slot}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def make_forest(config: Config, slot: str, seed: int) -> RandomForest:
    if slot not in FOREST_SLOTS:
        raise InvalidInputError(f"unknown forest slot {slot!r}")
    params = asdict(config.forest)
    params.update(config.forest_per_slot.get(slot, {}))
    return RandomForest(
        modality=SLOT_MODALITY[slot], seed=slot_seed(seed, slot), **params
    )
