"""Command-line pipeline: ingest, featurize, train, predict, evaluate,
export-graphs.

Exit codes: 0 success, 1 usage or configuration problem, 2 data problem
(unreadable/malformed inputs), 3 unexpected internal failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import traceback

import numpy as np

from . import dataset as ds_mod
from .config import ConfigError, PipelineConfig, load_config
from .dataset import DatasetError
from .fasta import FastaError
from .gbdt import GbdtError, load_model, save_model, train
from .ligand_features import (
    FingerprintFormatError,
    ligand_graph_features,
)
from .metrics import MetricsError, build_report, write_report
from .protein_features import (
    EmptySequenceError,
    UnknownResidueError,
    default_table,
    load_property_table,
    receptor_graph_features,
)
from .smiles import ParseError

log = logging.getLogger("bindkit")

_DATA_ERRORS = (
    DatasetError, FastaError, ParseError, GbdtError, MetricsError,
    FingerprintFormatError, UnknownResidueError, EmptySequenceError,
    FileNotFoundError, IsADirectoryError, NotADirectoryError, PermissionError,
    json.JSONDecodeError,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):           # argparse would exit(2); we want 1
        raise _UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="bindkit",
                     description="receptor-ligand affinity screening pipeline")
    parser.add_argument("--config", metavar="FILE", default=None,
                        help="TOML config file (defaults apply when omitted)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the configured seed")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress progress logging")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("ingest", help="curate a raw affinity TSV into a dataset")
    p.add_argument("--in", dest="input", required=True, metavar="TSV")
    p.add_argument("--out", required=True, metavar="DIR")

    p = sub.add_parser("featurize", help="build model matrices for a subset")
    p.add_argument("--dataset", required=True, metavar="DIR")
    p.add_argument("--subset", default="all",
                   choices=["train", "valid", "test", "all"])
    p.add_argument("--out", required=True, metavar="DIR")

    p = sub.add_parser("train", help="fit the boosted-tree regressor")
    p.add_argument("--train", dest="train_dir", required=True, metavar="DIR")
    p.add_argument("--valid", dest="valid_dir", default=None, metavar="DIR")
    p.add_argument("--out", required=True, metavar="MODEL_JSON")

    p = sub.add_parser("predict", help="apply a saved model to features")
    p.add_argument("--model", required=True, metavar="MODEL_JSON")
    p.add_argument("--features", required=True, metavar="DIR_OR_NPY")
    p.add_argument("--out", required=True, metavar="FILE")

    p = sub.add_parser("evaluate", help="score predictions against truth")
    p.add_argument("--pred", required=True, metavar="FILE")
    p.add_argument("--truth", required=True, metavar="FILE")
    p.add_argument("--out", required=True, metavar="REPORT_JSON")

    p = sub.add_parser("export-graphs",
                       help="write receptor/ligand graph features as JSONL")
    p.add_argument("--dataset", required=True, metavar="DIR")
    p.add_argument("--subset", default="all",
                   choices=["train", "valid", "test", "all"])
    p.add_argument("--out", required=True, metavar="JSONL")
    return parser


def _table_for(cfg: PipelineConfig):
    if cfg.property_table is None:
        return None
    return load_property_table(cfg.property_table)


def cmd_ingest(args, cfg: PipelineConfig) -> int:
    rows, reader_drops, digest = ds_mod.read_raw_tsv(args.input)
    fasta_index = None
    if cfg.fasta is not None:
        with open(cfg.fasta, "r", encoding="utf-8") as fh:
            fasta_index = ds_mod.build_fasta_index(fh.read())
    dataset = ds_mod.ingest(rows, bounds=cfg.bounds, fasta_index=fasta_index,
                            source_digest=digest, initial_drops=reader_drops)
    dataset = ds_mod.split(dataset, seed=cfg.seed, ratios=cfg.ratios)
    dataset.provenance["config_digest"] = cfg.digest()
    ds_mod.write_dataset(dataset, args.out)
    sizes = dataset.provenance["split_sizes"]
    log.info("ingested %d records (%s) -> %s",
             len(dataset.records), sizes, args.out)
    return 0


def cmd_featurize(args, cfg: PipelineConfig) -> int:
    dataset = ds_mod.load_dataset(args.dataset)
    table = _table_for(cfg)
    X, y, columns, ids = ds_mod.featurize_pairs(
        dataset, which=args.subset, radius=cfg.radius, nbits=cfg.nbits,
        table=table, workers=cfg.workers)
    os.makedirs(args.out, exist_ok=True)
    np.save(os.path.join(args.out, "X.npy"), X)
    np.save(os.path.join(args.out, "y.npy"), y)
    with open(os.path.join(args.out, "ids.txt"), "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write("".join(i + "\n" for i in ids))
    sidecar = {
        "columns": list(columns),
        "config_digest": cfg.digest(),
        "dataset_digest": dataset.provenance.get("source_digest", ""),
        "n_rows": int(X.shape[0]),
        "n_columns": int(X.shape[1]),
        "radius": cfg.radius,
        "nbits": cfg.nbits,
        "subset": args.subset,
        "table_version": (table or default_table()).version,
    }
    with open(os.path.join(args.out, "featurize.json"), "w", encoding="utf-8",
              newline="\n") as fh:
        json.dump(sidecar, fh, sort_keys=True, indent=2)
        fh.write("\n")
    log.info("featurized %s: X %s -> %s", args.subset, X.shape, args.out)
    return 0


def _load_matrix_dir(path) -> tuple[np.ndarray, np.ndarray | None]:
    if os.path.isdir(path):
        X = np.load(os.path.join(path, "X.npy"))
        y_path = os.path.join(path, "y.npy")
        y = np.load(y_path) if os.path.exists(y_path) else None
        return X, y
    return np.load(path), None


def cmd_train(args, cfg: PipelineConfig) -> int:
    X, y = _load_matrix_dir(args.train_dir)
    if y is None:
        raise DatasetError(f"no y.npy next to features in {args.train_dir}")
    valid = None
    if args.valid_dir is not None:
        Xv, yv = _load_matrix_dir(args.valid_dir)
        if yv is None:
            raise DatasetError(f"no y.npy next to features in {args.valid_dir}")
        valid = (Xv, yv)
    model, metrics = train(X, y, params=cfg.gbdt, valid=valid)
    save_model(model, args.out)
    with open(args.out + ".metrics.json", "w", encoding="utf-8",
              newline="\n") as fh:
        json.dump(metrics, fh, sort_keys=True, indent=2)
        fh.write("\n")
    last_loss = metrics["train_loss"][-1] if metrics["train_loss"] else None
    log.info("trained %d trees (final train loss %s) -> %s",
             len(model.trees), last_loss, args.out)
    return 0


def _load_vector(path) -> np.ndarray:
    if path.endswith(".npy"):
        return np.asarray(np.load(path), dtype=np.float64).ravel()
    with open(path, "r", encoding="utf-8") as fh:
        try:
            values = [float(line) for line in fh if line.strip()]
        except ValueError as exc:
            raise DatasetError(f"non-numeric line in {path}: {exc}") from exc
    return np.array(values, dtype=np.float64)


def cmd_predict(args, cfg: PipelineConfig) -> int:
    model = load_model(args.model)
    X, _ = _load_matrix_dir(args.features)
    preds = model.predict(X)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("".join(repr(float(p)) + "\n" for p in preds))
    log.info("wrote %d predictions -> %s", len(preds), args.out)
    return 0


def cmd_evaluate(args, cfg: PipelineConfig) -> int:
    preds = _load_vector(args.pred)
    truth = args.truth
    if os.path.isdir(truth):
        truth = os.path.join(truth, "y.npy")
    y = _load_vector(truth)
    report = build_report(y, preds, start=cfg.bin_start, stop=cfg.bin_stop,
                          width=cfg.bin_width, threshold=cfg.threshold)
    csv_path = (args.out[:-5] + ".csv" if args.out.endswith(".json")
                else args.out + ".csv")
    write_report(report, args.out, csv_path=csv_path)
    log.info("MAE %.4f, accuracy@%.3g %.4f -> %s", report["mae"],
             report["threshold"], report["accuracy_at_threshold"], args.out)
    return 0


def cmd_export_graphs(args, cfg: PipelineConfig) -> int:
    dataset = ds_mod.load_dataset(args.dataset)
    table = _table_for(cfg)
    records = dataset.subset(args.subset)
    if not records:
        raise DatasetError(f"subset {args.subset!r} is empty")
    lig_cache: dict[str, dict] = {}
    rec_cache: dict[str, dict] = {}
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            lig = lig_cache.get(rec.ligand.source)
            if lig is None:
                feats = ligand_graph_features(rec.ligand)
                lig = {
                    "node_features": feats.node_features.tolist(),
                    "edge_list": [list(e) for e in feats.edge_list],
                    "edge_features": feats.edge_features.tolist(),
                    "feature_names": {
                        "node": list(feats.node_feature_names),
                        "edge": list(feats.edge_feature_names),
                    },
                }
                lig_cache[rec.ligand.source] = lig
            rgraph = rec_cache.get(rec.receptor.residues)
            if rgraph is None:
                rfeats = receptor_graph_features(rec.receptor, table)
                rgraph = {
                    "node_features": rfeats.node_features.tolist(),
                    "edge_list": [list(e) for e in rfeats.edge_list],
                    "edge_features": [],
                    "feature_names": {
                        "node": list(rfeats.node_feature_names),
                        "edge": [],
                    },
                }
                rec_cache[rec.receptor.residues] = rgraph
            line = {"id": rec.pair_key, "ligand": lig, "receptor": rgraph}
            fh.write(json.dumps(line, sort_keys=True) + "\n")
    log.info("exported %d pair graphs -> %s", len(records), args.out)
    return 0


_COMMANDS = {
    "ingest": cmd_ingest,
    "featurize": cmd_featurize,
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "export-graphs": cmd_export_graphs,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"bindkit: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(stream=sys.stderr, format="%(message)s",
                        level=logging.WARNING if args.quiet else logging.INFO,
                        force=True)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
    except ConfigError as exc:
        print(f"bindkit: config error: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"bindkit: config error: {exc}", file=sys.stderr)
        return 1
    except _DATA_ERRORS as exc:
        print(f"bindkit: data error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 3


def entry() -> None:                    # console-script hook
    sys.exit(main())


if __name__ == "__main__":              # pragma: no cover
    entry()
