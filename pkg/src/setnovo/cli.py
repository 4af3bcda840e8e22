"""Command-line entry point: ``setnovo {config,synth,split,train,denovo,eval}``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from typing import List, Optional

from . import mgf
from .config import Config
from .decoder import denovo, read_predictions, write_predictions
from .knapsack import build_knapsack
from .metrics import evaluate, write_report
from .nn.optim import Adam
from .splits import split_by_peptide, write_manifest
from .synth import SynthConfig, generate
from .training import build_model, load_checkpoint, save_checkpoint, train

logger = logging.getLogger("setnovo")


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file (see `config init`)")
    defaults = Config()
    group = parser.add_argument_group("config overrides")
    for f in dataclasses.fields(Config):
        default = getattr(defaults, f.name)
        flag = "--" + f.name.replace("_", "-")
        if isinstance(default, bool):
            group.add_argument(flag, dest=f.name, default=None,
                               type=lambda v: v.lower() in ("1", "true", "yes"),
                               help=f"(default: {default})")
        elif isinstance(default, tuple) or default is None:
            group.add_argument(flag, dest=f.name, default=None, nargs="+",
                               help=f"(default: {None if default is None else list(default)})")
        else:
            group.add_argument(flag, dest=f.name, default=None, type=type(default),
                               help=f"(default: {default})")


def _overrides(args) -> dict:
    changes = {f.name: getattr(args, f.name) for f in dataclasses.fields(Config)
               if getattr(args, f.name, None) is not None}
    for key in ("conv", "fc"):
        if key in changes:
            changes[key] = [int(x) for x in changes[key]]
    return changes


def _config_from(args, base: Optional[Config] = None) -> Config:
    cfg = Config.load(args.config) if args.config else (base or Config())
    changes = _overrides(args)
    return cfg.replace(**changes) if changes else cfg


def cmd_config(args) -> int:
    text = Config().dumps() + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_synth(args) -> int:
    sc = SynthConfig(alphabet=tuple(args.alphabet), length_range=(args.min_length, args.max_length),
                     ion_coverage=args.ion_coverage, noise_peaks=args.noise_peaks,
                     mz_jitter=args.jitter, intensity_model=args.intensity_model, seed=args.seed)
    mgf.write_mgf(generate(sc, args.count), args.output)
    return 0


def cmd_split(args) -> int:
    spectra = mgf.parse_mgf(args.input)
    split = split_by_peptide(spectra, tuple(args.ratios), args.seed)
    for name, items in split.parts().items():
        mgf.write_mgf(items, f"{args.prefix}.{name}.mgf")
    write_manifest(split, f"{args.prefix}.manifest.tsv")
    return 0


def cmd_train(args) -> int:
    cfg = _config_from(args)
    train_sp = mgf.parse_mgf(args.train)
    valid_sp = mgf.parse_mgf(args.valid)
    overlap = {str(s.annotation) for s in train_sp} & {str(s.annotation) for s in valid_sp}
    if overlap:
        logger.warning("%d peptides occur in both training and validation data", len(overlap))
    if args.resume:
        model, cfg, state = load_checkpoint(args.resume, cfg)
        optimizer = Adam(model.parameters(), lr=cfg.lr)
        optimizer.state = state
    else:
        model = build_model(cfg)
        optimizer = Adam(model.parameters(), lr=cfg.lr)
    result = train(model, train_sp, valid_sp, cfg, log_path=args.log, optimizer=optimizer)
    save_checkpoint(args.output, model, cfg, optimizer)
    logger.info("best validation loss %.4f at step %d", result.best_valid_loss, result.best_step)
    return 0


def cmd_denovo(args) -> int:
    model, stored, _ = load_checkpoint(args.checkpoint)
    cfg = _config_from(args, base=stored)
    if cfg.architecture_hash() != stored.architecture_hash():
        model, cfg, _ = load_checkpoint(args.checkpoint, cfg)
    spectra = mgf.parse_mgf(args.input)
    table = build_knapsack(cfg.residue_tokens(), cfg.max_mass, cfg.bin_width)
    preds = denovo(spectra, model, table, width=cfg.beam_width, n_peaks=cfg.n_peaks,
                   normalize=cfg.normalize_intensity, c=cfg.c, resolution=cfg.mz_resolution,
                   tolerance=cfg.tolerance, precursor_tolerance=cfg.precursor_tolerance,
                   max_length=cfg.max_length, threads=args.threads)
    write_predictions([(s.scan_id, p) for s, p in zip(spectra, preds)], args.output)
    return 0


def cmd_eval(args) -> int:
    preds = dict(read_predictions(args.predictions))
    truth = mgf.parse_mgf(args.annotated)
    known = {s.scan_id for s in truth}
    missing = sorted(set(preds) - known)
    for scan in missing:
        logger.warning("prediction for unknown scan %s ignored", scan)
    pairs, ids = [], []
    for s in truth:
        if s.annotation is None:
            continue
        p = preds.get(s.scan_id)
        pairs.append((p.peptide if p is not None else None, s.annotation))
        ids.append(s.scan_id)
    summary, results = evaluate(pairs)
    write_report(summary, list(zip(ids, results)), args.output, missing)
    sys.stdout.write(json.dumps({"aa_recall": summary.aa_recall, "aa_precision": summary.aa_precision,
                                 "peptide_recall": summary.peptide_recall}) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="setnovo", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("config", help="emit the default configuration")
    p.add_argument("action", choices=["init"])
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_config)

    p = sub.add_parser("synth", help="write synthetic annotated spectra")
    p.add_argument("output")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--alphabet", nargs="+", default=["G", "A", "S", "P"])
    p.add_argument("--min-length", type=int, default=4)
    p.add_argument("--max-length", type=int, default=8)
    p.add_argument("--ion-coverage", type=float, default=0.9)
    p.add_argument("--noise-peaks", type=int, default=20)
    p.add_argument("--jitter", type=float, default=0.0)
    p.add_argument("--intensity-model", choices=["uniform", "decreasing"], default="uniform")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("split", help="peptide-disjoint train/valid/test split")
    p.add_argument("input")
    p.add_argument("prefix", help="output prefix; writes PREFIX.{train,valid,test}.mgf and PREFIX.manifest.tsv")
    p.add_argument("--ratios", type=float, nargs=3, default=[0.8, 0.1, 0.1])
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("train")
    p.add_argument("valid")
    p.add_argument("-o", "--output", required=True, help="checkpoint path")
    p.add_argument("--log", help="training log (TSV)")
    p.add_argument("--resume", help="checkpoint to continue from")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("denovo", help="sequence spectra with beam search")
    p.add_argument("checkpoint")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--threads", type=int, default=1)
    _add_config_flags(p)
    p.set_defaults(func=cmd_denovo)

    p = sub.add_parser("eval", help="score predictions against annotated spectra")
    p.add_argument("predictions")
    p.add_argument("annotated")
    p.add_argument("-o", "--output", required=True, help="report path")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:  # surfaced as a machine-readable line
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
