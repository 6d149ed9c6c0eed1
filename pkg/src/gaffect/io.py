"""Canonical on-disk formats and model-bundle persistence.

All formats are line-oriented ASCII text with a versioned magic header,
decimal-point floats (scientific notation accepted), and no locale
dependence.  Exact grammars are documented in the README; conformance
fixtures live in the test suite.

feature file      one per (image, modality); header then one face per line
score file        the full-image classifier's 3-class probability vector
manifest          split declaration plus one block per image
bundle directory  five serialized forests plus ``bundle.json``
"""

from __future__ import annotations

import io as _stdio
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ensemble import EmotionEnsemble, EvalReport, ImageRecord
from .exceptions import DataError, InvalidInputError, ModelError, ParseError
from .features import FeatureMatrix
from .forest import RandomForest, load_forest, save_forest
from .modalities import (
    FOREST_SLOTS,
    LABEL_NAMES,
    LABEL_TO_INDEX,
    MODALITY_DIMS,
    N_CLASSES,
    modality_dim,
)
from .validation import check_proba

log = logging.getLogger(__name__)

FEATURE_MAGIC = "gaffect-features"
SCORE_MAGIC = "gaffect-score"
MANIFEST_MAGIC = "gaffect-manifest"
FORMAT_VERSION = "v1"
BUNDLE_FILENAME = "bundle.json"
SPLITS = ("train", "validation", "test")


# --- feature files ---------------------------------------------------------


def write_feature_file(path, matrix: FeatureMatrix, fmt: str = "%.8g") -> None:
    path = Path(path)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(
            f"{FEATURE_MAGIC} {FORMAT_VERSION} "
            f"modality={matrix.modality} dim={matrix.values.shape[1]}\n"
        )
        np.savetxt(fh, matrix.values, fmt=fmt)


def _parse_feature_header(path, line: str) -> tuple[str, int]:
    tokens = line.split()
    if len(tokens) != 4 or tokens[0] != FEATURE_MAGIC:
        raise ParseError(path, 1, f"expected '{FEATURE_MAGIC} {FORMAT_VERSION} modality=<tag> dim=<n>' header")
    if tokens[1] != FORMAT_VERSION:
        raise ParseError(path, 1, f"unsupported format version {tokens[1]!r}")
    if not tokens[2].startswith("modality=") or not tokens[3].startswith("dim="):
        raise ParseError(path, 1, "header must declare modality=<tag> dim=<n>")
    modality = tokens[2][len("modality="):]
    if modality not in MODALITY_DIMS:
        raise ParseError(path, 1, f"unknown modality {modality!r}")
    try:
        dim = int(tokens[3][len("dim="):])
    except ValueError:
        raise ParseError(path, 1, f"dim is not an integer: {tokens[3]!r}") from None
    if dim != modality_dim(modality):
        raise ParseError(
            path,
            1,
            f"modality {modality} requires dim={modality_dim(modality)}, header says {dim}",
        )
    return modality, dim


def _diagnose_feature_rows(path, rows: list[tuple[int, str]], dim: int):
    """Slow per-cell pass that turns a bad row into a precise ParseError."""
    for lineno, text in rows:
        if text.startswith(FEATURE_MAGIC):
            raise ParseError(path, lineno, "duplicate header line")
        cells = text.split()
        for cell in cells:
            try:
                float(cell)
            except ValueError:
                raise ParseError(path, lineno, f"non-numeric cell {cell!r}") from None
        if len(cells) != dim:
            raise ParseError(
                path, lineno, f"expected {dim} values per face row, got {len(cells)}"
            )
    raise ParseError(path, None, "malformed feature rows")


def read_feature_file(path, expect_modality: str | None = None, image_id: str = "") -> FeatureMatrix:
    """Parse one feature file; zero data rows means no detected faces."""
    path = Path(path)
    try:
        text = path.read_text(encoding="ascii")
    except FileNotFoundError:
        raise DataError(f"feature file not found: {path}") from None
    except UnicodeDecodeError as exc:
        raise ParseError(path, None, f"not ASCII text: {exc}") from None
    lines = text.splitlines()
    if not lines:
        raise ParseError(path, 1, "empty file, expected a header line")
    modality, dim = _parse_feature_header(path, lines[0])
    if expect_modality is not None and modality != expect_modality:
        raise ParseError(
            path, 1, f"manifest expects modality {expect_modality}, file declares {modality}"
        )
    rows = [
        (lineno, line)
        for lineno, line in enumerate(lines[1:], start=2)
        if line.strip()
    ]
    if not rows:
        values = np.empty((0, dim))
    else:
        body = "\n".join(text for _, text in rows)
        try:
            values = np.loadtxt(_stdio.StringIO(body), comments=None, ndmin=2)
        except ValueError:
            _diagnose_feature_rows(path, rows, dim)
        if values.shape[1] != dim:
            _diagnose_feature_rows(path, rows, dim)
        bad = ~np.isfinite(values)
        if bad.any():
            row = int(np.nonzero(bad.any(axis=1))[0][0])
            raise ParseError(path, rows[row][0], "non-finite value in face row")
    try:
        return FeatureMatrix(image_id=image_id, modality=modality, values=values)
    except InvalidInputError as exc:
        raise ParseError(path, None, str(exc)) from None


# --- score files -----------------------------------------------------------


def write_score_file(path, score) -> None:
    vec = check_proba(score, N_CLASSES, name="score")
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{SCORE_MAGIC} {FORMAT_VERSION} classes={N_CLASSES}\n")
        fh.write(" ".join(repr(float(v)) for v in vec) + "\n")


def read_score_file(path) -> np.ndarray:
    path = Path(path)
    try:
        lines = path.read_text(encoding="ascii").splitlines()
    except FileNotFoundError:
        raise DataError(f"score file not found: {path}") from None
    if not lines:
        raise ParseError(path, 1, "empty file, expected a header line")
    tokens = lines[0].split()
    if len(tokens) != 3 or tokens[0] != SCORE_MAGIC or tokens[1] != FORMAT_VERSION:
        raise ParseError(path, 1, f"expected '{SCORE_MAGIC} {FORMAT_VERSION} classes={N_CLASSES}' header")
    if tokens[2] != f"classes={N_CLASSES}":
        raise ParseError(path, 1, f"expected classes={N_CLASSES}, got {tokens[2]!r}")
    data = [(i, ln) for i, ln in enumerate(lines[1:], start=2) if ln.strip()]
    if len(data) != 1:
        raise ParseError(path, None, f"expected exactly one score row, found {len(data)}")
    lineno, row = data[0]
    cells = row.split()
    if len(cells) != N_CLASSES:
        raise ParseError(path, lineno, f"expected {N_CLASSES} probabilities, got {len(cells)}")
    try:
        vec = np.array([float(c) for c in cells])
    except ValueError:
        raise ParseError(path, lineno, "non-numeric probability") from None
    try:
        return check_proba(vec, N_CLASSES, name="score")
    except InvalidInputError as exc:
        raise ParseError(path, lineno, str(exc)) from None


# --- manifests --------------------------------------------------------------


@dataclass
class ManifestEntry:
    image_id: str
    label: int | None = None
    features: dict[str, Path] = field(default_factory=dict)
    fullimage: Path | None = None


@dataclass
class Manifest:
    split: str
    entries: list[ManifestEntry]
    path: Path

    def __post_init__(self):
        self.by_id = {e.image_id: e for e in self.entries}


def write_manifest(path, split: str, entries: list[dict]) -> None:
    """Write a manifest; entry paths are kept as given (usually relative)."""
    path = Path(path)
    out = [f"{MANIFEST_MAGIC} {FORMAT_VERSION}", f"split {split}"]
    for entry in entries:
        out.append(f"image {entry['image_id']}")
        if entry.get("label") is not None:
            out.append(f"label {LABEL_NAMES[entry['label']]}")
        for modality, relpath in entry.get("features", {}).items():
            out.append(f"feature {modality} {relpath}")
        if entry.get("fullimage") is not None:
            out.append(f"fullimage {entry['fullimage']}")
    path.write_text("\n".join(out) + "\n", encoding="ascii")


def load_manifest(path, strict: bool = False) -> Manifest:
    """Parse and validate a manifest.

    Train and validation manifests must label every entry.  With ``strict``
    every referenced feature/score file must already exist.
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="ascii").splitlines()
    except FileNotFoundError:
        raise DataError(f"manifest not found: {path}") from None
    except UnicodeDecodeError as exc:
        raise ParseError(path, None, f"not ASCII text: {exc}") from None
    if not lines or lines[0].split() != [MANIFEST_MAGIC, FORMAT_VERSION]:
        raise ParseError(path, 1, f"expected '{MANIFEST_MAGIC} {FORMAT_VERSION}' header")

    root = path.parent
    split: str | None = None
    entries: list[ManifestEntry] = []
    seen_ids: set[str] = set()
    current: ManifestEntry | None = None
    references: list[tuple[Path, int]] = []

    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        keyword, _, rest = line.partition(" ")
        rest = rest.strip()
        if keyword == "split":
            if split is not None:
                raise ParseError(path, lineno, "duplicate split line")
            if rest not in SPLITS:
                raise ParseError(path, lineno, f"unknown split {rest!r}, expected one of {SPLITS}")
            split = rest
        elif keyword == "image":
            if split is None:
                raise ParseError(path, lineno, "split must be declared before entries")
            if not rest or len(rest.split()) != 1:
                raise ParseError(path, lineno, "image id must be a single token")
            if rest in seen_ids:
                raise ParseError(path, lineno, f"duplicate image id {rest!r}")
            seen_ids.add(rest)
            current = ManifestEntry(image_id=rest)
            entries.append(current)
        elif keyword in ("label", "feature", "fullimage"):
            if current is None:
                raise ParseError(path, lineno, f"{keyword} line before any image line")
            if keyword == "label":
                if current.label is not None:
                    raise ParseError(path, lineno, f"duplicate label for {current.image_id}")
                if rest not in LABEL_TO_INDEX:
                    raise ParseError(
                        path, lineno,
                        f"unknown label {rest!r}, expected one of {LABEL_NAMES}",
                    )
                current.label = LABEL_TO_INDEX[rest]
            elif keyword == "feature":
                parts = rest.split(maxsplit=1)
                if len(parts) != 2:
                    raise ParseError(path, lineno, "feature line needs '<modality> <path>'")
                modality, rel = parts
                if modality not in MODALITY_DIMS:
                    raise ParseError(path, lineno, f"unknown modality {modality!r}")
                if modality in current.features:
                    raise ParseError(
                        path, lineno, f"duplicate modality {modality} for {current.image_id}"
                    )
                current.features[modality] = root / rel
                references.append((current.features[modality], lineno))
            else:
                if current.fullimage is not None:
                    raise ParseError(path, lineno, f"duplicate fullimage for {current.image_id}")
                current.fullimage = root / rest
                references.append((current.fullimage, lineno))
        else:
            raise ParseError(path, lineno, f"unknown keyword {keyword!r}")

    if split is None:
        raise ParseError(path, None, "manifest declares no split")
    if split in ("train", "validation"):
        for entry in entries:
            if entry.label is None:
                raise ParseError(
                    path, None, f"{split} entry {entry.image_id} has no gold label"
                )
    if strict:
        for ref, lineno in references:
            if not ref.exists():
                raise ParseError(path, lineno, f"referenced file does not exist: {ref}")
    return Manifest(split=split, entries=entries, path=path)


def load_record(entry: ManifestEntry, strict: bool = False) -> ImageRecord:
    """Materialize one manifest entry, reading its feature and score files.

    Without ``strict``, a listed-but-missing file mutes that modality for
    the record instead of failing the whole run.
    """
    features = {}
    for modality, fpath in entry.features.items():
        if not fpath.exists():
            if strict:
                raise DataError(f"{entry.image_id}: missing feature file {fpath}")
            log.warning("%s: skipping missing feature file %s", entry.image_id, fpath)
            continue
        features[modality] = read_feature_file(
            fpath, expect_modality=modality, image_id=entry.image_id
        )
    fullimage = None
    if entry.fullimage is not None:
        if entry.fullimage.exists():
            fullimage = read_score_file(entry.fullimage)
        elif strict:
            raise DataError(f"{entry.image_id}: missing score file {entry.fullimage}")
        else:
            log.warning("%s: skipping missing score file %s", entry.image_id, entry.fullimage)
    return ImageRecord(
        image_id=entry.image_id,
        features=features,
        fullimage_score=fullimage,
        gold_label=entry.label,
    )


def load_records(manifest: Manifest, strict: bool = False) -> list[ImageRecord]:
    return [load_record(entry, strict=strict) for entry in manifest.entries]


# --- model bundle ------------------------------------------------------------


def save_bundle(
    bundle_dir,
    ensemble: EmotionEnsemble,
    seed: int,
    weights_info: dict | None = None,
) -> None:
    bundle_dir = Path(bundle_dir)
    bundle_dir.mkdir(parents=True, exist_ok=True)
    forest_files = {}
    for slot in FOREST_SLOTS:
        filename = f"forest_{slot}.json"
        save_forest(ensemble.forests[slot], bundle_dir / filename)
        forest_files[slot] = filename
    doc = {
        "format": "gaffect-bundle",
        "version": 1,
        "seed": seed,
        "aggregate": ensemble.aggregate,
        "fullimage_mode": ensemble.fullimage_mode,
        "weights": ensemble.weights,
        "forest_files": forest_files,
    }
    if weights_info is not None:
        doc["weights_info"] = weights_info
    (bundle_dir / BUNDLE_FILENAME).write_text(
        json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="ascii"
    )


def update_bundle_weights(bundle_dir, weights: dict, weights_info: dict | None = None) -> None:
    """Rewrite bundle.json with new fusion weights, leaving forests untouched."""
    bundle_dir = Path(bundle_dir)
    doc_path = bundle_dir / BUNDLE_FILENAME
    if not doc_path.exists():
        raise ModelError(f"no trained bundle at {bundle_dir} (missing {BUNDLE_FILENAME})")
    doc = json.loads(doc_path.read_text(encoding="ascii"))
    doc["weights"] = dict(weights)
    if weights_info is not None:
        doc["weights_info"] = weights_info
    doc_path.write_text(
        json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="ascii"
    )


def load_bundle(bundle_dir) -> tuple[EmotionEnsemble, dict]:
    bundle_dir = Path(bundle_dir)
    doc_path = bundle_dir / BUNDLE_FILENAME
    if not doc_path.exists():
        raise ModelError(f"no trained bundle at {bundle_dir} (missing {BUNDLE_FILENAME})")
    try:
        doc = json.loads(doc_path.read_text(encoding="ascii"))
    except json.JSONDecodeError as exc:
        raise ModelError(f"corrupt bundle document {doc_path}: {exc}") from None
    if doc.get("format") != "gaffect-bundle" or doc.get("version") != 1:
        raise ModelError(f"unsupported bundle format in {doc_path}")
    forests = {}
    for slot in FOREST_SLOTS:
        filename = doc.get("forest_files", {}).get(slot)
        if filename is None:
            raise ModelError(f"bundle document lists no forest for slot {slot}")
        forests[slot] = load_forest(bundle_dir / filename)
    ensemble = EmotionEnsemble(
        forests,
        weights=doc.get("weights"),
        fullimage_mode=doc.get("fullimage_mode", "always"),
        aggregate=doc.get("aggregate", "median"),
    )
    return ensemble, doc


# --- predictions and reports -------------------------------------------------


def predictions_payload(results) -> dict:
    return {
        "format": "gaffect-predictions",
        "version": 1,
        "predictions": [
            {
                "image_id": r.image_id,
                "label": LABEL_NAMES[r.label],
                "label_index": r.label,
                "score": [float(v) for v in r.fused],
                "slots_used": list(r.slots_used),
            }
            for r in results
        ],
    }


def write_predictions(path, results) -> None:
    Path(path).write_text(
        json.dumps(predictions_payload(results), sort_keys=True, indent=2) + "\n",
        encoding="ascii",
    )


def write_report(path, report: EvalReport, slot_accuracies: dict | None = None) -> None:
    payload = report.to_payload()
    if slot_accuracies is not None:
        payload["slot_accuracies"] = slot_accuracies
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="ascii"
    )


def format_report(report: EvalReport, slot_accuracies: dict | None = None) -> str:
    """Human-readable table; fractions carry 4 decimals, Table-2 style."""
    lines = []
    lines.append(f"images evaluated   {report.n_images}")
    lines.append(f"no-face images     {report.n_noface_images}")
    lines.append(
        f"accuracy           {report.accuracy:.4f} ({100 * report.accuracy:.2f}%)"
    )
    for i, name in enumerate(LABEL_NAMES):
        lines.append(f"recall {name:<10}  {report.per_class_recall[i]:.4f}")
    lines.append("")
    lines.append("confusion matrix (rows = gold, columns = predicted)")
    header = " " * 10 + "".join(f"{n:>10}" for n in LABEL_NAMES)
    lines.append(header)
    norm = report.row_normalized()
    for i, name in enumerate(LABEL_NAMES):
        counts = "".join(f"{int(c):>10}" for c in report.confusion[i])
        lines.append(f"{name:<10}{counts}")
        fracs = "".join(f"{norm[i, j]:>10.4f}" for j in range(len(LABEL_NAMES)))
        lines.append(f"{'':<10}{fracs}")
    if slot_accuracies:
        lines.append("")
        lines.append("stand-alone slot accuracies")
        for slot, acc in slot_accuracies.items():
            lines.append(f"  {slot:<16} {acc:.4f}")
    return "\n".join(lines)
