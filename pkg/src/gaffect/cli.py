"""Command line interface.

Subcommands: synth, train, weights, predict, eval, validate.
Exit codes: 0 success, 1 usage, 2 data error, 3 model error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io as gio
from .config import load_config, make_forest
from .ensemble import EmotionEnsemble, evaluate, with_noface_count
from .exceptions import DataError, GaffectError, InvalidInputError, ModelError
from .features import AGGREGATORS
from .modalities import FOREST_SLOTS, SLOT_MODALITY
from .synth import generate_dataset

log = logging.getLogger("gaffect")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="gaffect",
        description="Group-level emotion recognition pipeline "
        "(feature aggregation, per-modality forests, weighted fusion).",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, manifest=True, bundle=True):
        if manifest:
            p.add_argument("--manifest", required=True, help="manifest file path")
        if bundle:
            p.add_argument("--bundle", required=True, help="model bundle directory")
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--strict", action="store_true", help="fail on missing referenced files")
        p.add_argument(
            "--fullimage-mode",
            choices=("always", "fallback_only"),
            help="when the full-image slot contributes",
        )
        p.add_argument(
            "--aggregate",
            choices=tuple(AGGREGATORS),
            help="per-image face aggregation (default: median)",
        )

    p_synth = sub.add_parser("synth", help="generate the synthetic fixture dataset")
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.add_argument("--config", help="JSON config file")
    p_synth.add_argument("--seed", type=int, help="override the config seed")

    p_train = sub.add_parser("train", help="train the five per-modality forests")
    common(p_train)
    p_train.add_argument("--jobs", type=int, help="grow trees in parallel")

    p_weights = sub.add_parser("weights", help="estimate fusion weights on validation data")
    common(p_weights)

    p_predict = sub.add_parser("predict", help="write fused scores and labels")
    common(p_predict)
    p_predict.add_argument("--out", help="predictions path (default: <bundle>/predictions.json)")

    p_eval = sub.add_parser("eval", help="predict and score against gold labels")
    common(p_eval)
    p_eval.add_argument("--out", help="report path (default: <bundle>/report.json)")

    p_validate = sub.add_parser("validate", help="check a manifest and every referenced file")
    common(p_validate, bundle=False)
    return parser


def _load_inputs(args, require_labels=False):
    manifest = gio.load_manifest(args.manifest, strict=args.strict)
    records = gio.load_records(manifest, strict=args.strict)
    if require_labels and all(r.gold_label is None for r in records):
        raise DataError(f"{args.manifest}: no entry carries a gold label")
    return manifest, records


def _apply_overrides(ensemble: EmotionEnsemble, args) -> None:
    if getattr(args, "aggregate", None) and args.aggregate != ensemble.aggregate:
        log.warning(
            "aggregate override: bundle was trained with %r, using %r",
            ensemble.aggregate, args.aggregate,
        )
        ensemble.aggregate = args.aggregate
    if getattr(args, "fullimage_mode", None):
        ensemble.fullimage_mode = args.fullimage_mode


def _cmd_synth(args) -> int:
    cfg = load_config(args.config)
    seed = cfg.seed if args.seed is None else args.seed
    summary = generate_dataset(args.out, cfg.synth, seed=seed)
    log.info(
        "wrote %d train / %d validation images under %s",
        summary["n_train"], summary["n_validation"], summary["out_dir"],
    )
    print(summary["train_manifest"])
    print(summary["validation_manifest"])
    return 0


def _cmd_train(args) -> int:
    cfg = load_config(args.config)
    seed = cfg.seed if args.seed is None else args.seed
    aggregate = args.aggregate or cfg.aggregate
    fullimage_mode = args.fullimage_mode or cfg.fusion.fullimage_mode
    _, records = _load_inputs(args, require_labels=True)

    aggregate_fn = AGGREGATORS[aggregate]
    forests = {}
    for slot in FOREST_SLOTS:
        modality = SLOT_MODALITY[slot]
        rows, labels = [], []
        for record in records:
            fm = record.features.get(modality)
            if fm is None or fm.n_faces == 0 or record.gold_label is None:
                continue
            rows.append(aggregate_fn(fm.values))
            labels.append(record.gold_label)
        if not rows:
            raise DataError(f"no usable training rows for slot {slot}")
        forest = make_forest(cfg, slot, seed)
        if args.jobs:
            forest.n_jobs = args.jobs
        forest.fit(np.asarray(rows), labels)
        forests[slot] = forest
        log.info("trained %s on %d images (%s trees)", slot, len(rows), forest.n_trees)

    ensemble = EmotionEnsemble(
        forests,
        weights=cfg.fusion.weights,
        fullimage_mode=fullimage_mode,
        aggregate=aggregate,
    )
    gio.save_bundle(args.bundle, ensemble, seed=seed)
    log.info("bundle written to %s", args.bundle)
    return 0


def _cmd_weights(args) -> int:
    cfg = load_config(args.config)
    ensemble, _ = gio.load_bundle(args.bundle)
    _apply_overrides(ensemble, args)
    _, records = _load_inputs(args, require_labels=True)
    accuracies, counts = ensemble.slot_accuracies(records)
    weights = ensemble.apply_weight_policy(
        accuracies, counts, cfg.fusion.weight_policy, cfg.fusion.softmax_temperature
    )
    gio.update_bundle_weights(
        args.bundle,
        weights,
        weights_info={
            "policy": cfg.fusion.weight_policy,
            "slot_accuracies": accuracies,
            "records_scored": counts,
            "manifest_split": gio.load_manifest(args.manifest).split,
        },
    )
    for slot in weights:
        log.info("%-16s accuracy %.4f -> weight %.4f", slot, accuracies[slot], weights[slot])
    return 0


def _cmd_predict(args) -> int:
    ensemble, _ = gio.load_bundle(args.bundle)
    _apply_overrides(ensemble, args)
    _, records = _load_inputs(args)
    results = ensemble.predict_records(records)
    out = Path(args.out) if args.out else Path(args.bundle) / "predictions.json"
    gio.write_predictions(out, results)
    log.info("wrote %d predictions to %s", len(results), out)
    return 0


def _cmd_eval(args) -> int:
    ensemble, _ = gio.load_bundle(args.bundle)
    _apply_overrides(ensemble, args)
    _, records = _load_inputs(args, require_labels=True)
    results = ensemble.predict_records(records)
    pairs = [
        (res.label, rec.gold_label)
        for res, rec in zip(results, records)
        if rec.gold_label is not None
    ]
    noface = sum(
        1 for rec in records if rec.gold_label is not None and rec.n_faces == 0
    )
    report = evaluate([p for p, _ in pairs], [g for _, g in pairs])
    report = with_noface_count(report, noface)
    slot_accuracies, _ = ensemble.slot_accuracies(records)
    out = Path(args.out) if args.out else Path(args.bundle) / "report.json"
    gio.write_report(out, report, slot_accuracies)
    print(gio.format_report(report, slot_accuracies))
    log.info("report written to %s", out)
    return 0


def _cmd_validate(args) -> int:
    manifest = gio.load_manifest(args.manifest, strict=True)
    records = [gio.load_record(entry, strict=True) for entry in manifest.entries]
    noface = sum(1 for r in records if r.n_faces == 0)
    print(
        f"OK: {len(records)} entries, split={manifest.split}, "
        f"no-face images: {noface}"
    )
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "train": _cmd_train,
    "weights": _cmd_weights,
    "predict": _cmd_predict,
    "eval": _cmd_eval,
    "validate": _cmd_validate,
}


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr
    )
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ModelError,) as exc:
        print(f"gaffect: model error: {exc}", file=sys.stderr)
        return 3
    except (DataError, InvalidInputError) as exc:
        print(f"gaffect: data error: {exc}", file=sys.stderr)
        return 2
    except GaffectError as exc:
        print(f"gaffect: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
