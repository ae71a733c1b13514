"""Command-line front end.

Subcommands:
  eval      run cross-validated experiments over datasets x configurations
            and emit per-metric result tables, per-fold audit files and a
            run manifest
  stats     Friedman or Wilcoxon analysis of a labeled result-matrix CSV
  plotdata  flatten a manifest into plot-ready (dataset, configuration,
            value) files, one per metric

Every emitted byte is determined by the arguments plus the --seed value.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import configparser
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .autoencoder import TrainConfig
from .dataset import load_csv, make_folds
from .pipeline import PipelineConfig, run_cv
from .stats import ResultMatrix, friedman, wilcoxon_signed_rank

METRICS = ("accuracy", "fscore", "auc", "time")


def parse_ppl(text: str) -> tuple[float, ...]:
    """Parse a layer spec like '0.75' or '1.5,0.25,1.5' (parentheses allowed)."""
    cleaned = text.strip().strip("()")
    parts = [p for p in cleaned.replace(";", ",").split(",") if p.strip()]
    if not parts:
        raise ValueError(f"empty ppl spec {text!r}")
    fractions = tuple(float(p) for p in parts)
    if any(f <= 0 for f in fractions):
        raise ValueError(f"ppl fractions must be positive: {text!r}")
    return fractions


@dataclass(frozen=True)
class ExperimentSpec:
    datasets: tuple[str, ...]
    configs: tuple[tuple[str, PipelineConfig], ...]  # (label, config)
    repetitions: int
    folds: int
    seed: int
    jobs: int
    out_dir: str
    has_header: bool
    label_column: int | None
    positive: int

    def resolved(self) -> dict:
        return {
            "datasets": list(self.datasets),
            "configs": [
                {
                    "label": label,
                    "reducer": cfg.reducer,
                    "ppl": list(cfg.ppl),
                    "target_dim": cfg.target_dim,
                    "k": cfg.k,
                    "epochs": cfg.train_cfg.epochs,
                    "batch_size": cfg.train_cfg.batch_size,
                    "learning_rate": cfg.train_cfg.learning_rate,
                }
                for label, cfg in self.configs
            ],
            "repetitions": self.repetitions,
            "folds": self.folds,
            "seed": self.seed,
            "has_header": self.has_header,
            "label_column": self.label_column,
            "positive": self.positive,
        }


def _atomic_write(path: str, content: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as handle:
        handle.write(content)
    os.replace(tmp, path)


def _file_sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aeknn",
        description="autoencoder-reduced kNN classification, evaluation and statistics",
    )
    parser.add_argument("--version", action="version", version=f"aeknn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("eval", help="run cross-validated experiments")
    ev.add_argument("--dataset", action="append", default=[], help="CSV path (repeatable)")
    ev.add_argument("--config", help="INI experiment file; flags win over file values")
    ev.add_argument("--reducer", choices=["ae", "pca", "lda", "identity"], default=None)
    ev.add_argument("--ppl", default=None, help="layer fractions, e.g. 0.75 or 1.5,0.25,1.5")
    ev.add_argument("--k", type=int, default=None, help="neighbors (default 5)")
    ev.add_argument("--reps", type=int, default=None, help="CV repetitions (default 2)")
    ev.add_argument("--folds", type=int, default=None, help="folds per repetition (default 5)")
    ev.add_argument("--seed", type=int, required=True)
    ev.add_argument("--epochs", type=int, default=None)
    ev.add_argument("--batch-size", type=int, default=None)
    ev.add_argument("--lr", type=float, default=None)
    ev.add_argument("--jobs", type=int, default=1)
    ev.add_argument("--out", default="results")
    ev.add_argument("--header", action="store_true", help="datasets carry a header row")
    ev.add_argument("--label-column", type=int, default=None, help="default: last column")
    ev.add_argument("--positive-class", type=int, default=1)

    st = sub.add_parser("stats", help="statistical tests over a result matrix CSV")
    st.add_argument("--matrix", required=True, help="labeled CSV (rows=datasets)")
    st.add_argument("--test", choices=["friedman", "wilcoxon"], required=True)
    st.add_argument("--direction", choices=["higher", "lower"], default="higher")
    st.add_argument("--form", choices=["chi2", "iman-davenport"], default="chi2")
    st.add_argument("--columns", help="comma-separated column subset / wilcoxon pair")
    st.add_argument("--baseline", help="wilcoxon: compare every other column to this one")
    st.add_argument("--out", help="also write the report as CSV")

    pl = sub.add_parser("plotdata", help="emit plot-ready files from a manifest")
    pl.add_argument("--manifest", required=True)
    pl.add_argument("--out", default="plotdata")
    return parser


def _configs_from_ini(path: str, base_train: TrainConfig, k: int) -> list[tuple[str, PipelineConfig]]:
    ini = configparser.ConfigParser()
    if not ini.read(path):
        raise ValueError(f"cannot read experiment file {path}")
    configs = []
    for section in ini.sections():
        if not section.startswith("config:"):
            continue
        label = section.split(":", 1)[1].strip()
        body = ini[section]
        reducer = body.get("reducer", "ae").strip()
        ppl = parse_ppl(body.get("ppl", "0.75"))
        target_dim = body.getint("target_dim", fallback=None)
        cfg = PipelineConfig(
            reducer=reducer,
            ppl=ppl,
            k=body.getint("k", fallback=k),
            train_cfg=base_train,
            target_dim=target_dim,
        )
        configs.append((label or cfg.label(), cfg))
    return configs


def _ini_defaults(path: str) -> dict:
    ini = configparser.ConfigParser()
    ini.read(path)
    if not ini.has_section("defaults"):
        return {}
    body = ini["defaults"]
    out: dict = {}
    for key in ("k", "reps", "folds", "epochs", "batch_size"):
        if body.get(key) is not None:
            out[key] = body.getint(key)
    if body.get("lr") is not None:
        out["lr"] = body.getfloat("lr")
    if body.get("datasets") is not None:
        out["datasets"] = [p.strip() for p in body["datasets"].split(",") if p.strip()]
    return out


def _resolve_spec(args) -> ExperimentSpec:
    file_defaults = _ini_defaults(args.config) if args.config else {}

    def pick(flag_value, key, fallback):
        if flag_value is not None:
            return flag_value
        return file_defaults.get(key, fallback)

    k = pick(args.k, "k", 5)
    reps = pick(args.reps, "reps", 2)
    folds = pick(args.folds, "folds", 5)
    train_cfg = TrainConfig(
        epochs=pick(args.epochs, "epochs", 50),
        batch_size=pick(args.batch_size, "batch_size", 32),
        learning_rate=pick(args.lr, "lr", 0.01),
        seed=args.seed,
    )
    datasets = list(args.dataset) or list(file_defaults.get("datasets", []))
    if not datasets:
        raise ValueError("no datasets given (use --dataset or the experiment file)")

    configs: list[tuple[str, PipelineConfig]] = []
    if args.config:
        configs.extend(_configs_from_ini(args.config, train_cfg, k))
    if args.reducer is not None or args.ppl is not None or not configs:
        cfg = PipelineConfig(
            reducer=args.reducer or "ae",
            ppl=parse_ppl(args.ppl) if args.ppl else (0.75,),
            k=k,
            train_cfg=train_cfg,
        )
        configs.append((cfg.label(), cfg))
    labels = [label for label, _ in configs]
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate configuration labels: {labels}")
    return ExperimentSpec(
        datasets=tuple(datasets),
        configs=tuple(configs),
        repetitions=reps,
        folds=folds,
        seed=args.seed,
        jobs=max(1, args.jobs),
        out_dir=args.out,
        has_header=args.header,
        label_column=args.label_column,
        positive=args.positive_class,
    )


def _run_cell(payload: dict) -> dict:
    """One (dataset, configuration) cell; module-level so workers can pickle it."""
    spec_kwargs = payload["spec"]
    data = load_csv(
        payload["dataset_path"],
        label_column=spec_kwargs["label_column"],
        has_header=spec_kwargs["has_header"],
    )
    plan = make_folds(data, spec_kwargs["repetitions"], spec_kwargs["folds"], spec_kwargs["seed"])
    cfg_dict = payload["config"]
    cfg = PipelineConfig(
        reducer=cfg_dict["reducer"],
        ppl=tuple(cfg_dict["ppl"]),
        k=cfg_dict["k"],
        target_dim=cfg_dict["target_dim"],
        train_cfg=TrainConfig(
            epochs=cfg_dict["epochs"],
            batch_size=cfg_dict["batch_size"],
            learning_rate=cfg_dict["learning_rate"],
            seed=spec_kwargs["seed"],
        ),
    )
    result = run_cv(data, plan, cfg, positive=spec_kwargs["positive"])
    audit_rows = []
    for fold_no, fold in enumerate(result.fold_results):
        rep, fold_idx = divmod(fold_no, plan.n_folds)
        for i in range(fold.n_test):
            audit_rows.append(
                [rep, fold_idx, int(fold.test_indices[i]), int(fold.true_labels[i]),
                 int(fold.predictions[i])] + [repr(float(s)) for s in fold.scores[i]]
            )
    plan_lines = [
        f"folds {plan.n_folds} repetitions {plan.repetitions} samples {plan.n_samples}"
    ] + [" ".join(str(v) for v in plan.assignments[rep]) for rep in range(plan.repetitions)]
    return {
        "metrics": {
            "accuracy": result.accuracy,
            "fscore": result.fscore,
            "auc": result.auc_score,
            "time": result.classification_seconds,
        },
        "fit_seconds": result.fit_seconds,
        "fold_plan_fingerprint": plan.fingerprint(),
        "fold_plan_text": "\n".join(plan_lines) + "\n",
        "n_classes": data.n_classes,
        "audit_rows": audit_rows,
        "class_names": list(data.class_names),
    }


def _matrix_csv(datasets, labels, cells, metric) -> str:
    lines = ["dataset," + ",".join(labels)]
    for ds in datasets:
        row = [ds]
        for label in labels:
            cell = cells.get((ds, label))
            if cell is None or cell.get("status") != "ok":
                row.append("nan")
            else:
                row.append(repr(float(cell["metrics"][metric])))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def cmd_eval(args) -> int:
    spec = _resolve_spec(args)
    os.makedirs(spec.out_dir, exist_ok=True)
    folds_dir = os.path.join(spec.out_dir, "folds")
    os.makedirs(folds_dir, exist_ok=True)

    dataset_names = []
    name_by_path = {}
    for path in spec.datasets:
        stem = os.path.splitext(os.path.basename(path))[0]
        name_by_path[path] = stem
        dataset_names.append(stem)

    spec_common = {
        "repetitions": spec.repetitions,
        "folds": spec.folds,
        "seed": spec.seed,
        "has_header": spec.has_header,
        "label_column": spec.label_column,
        "positive": spec.positive,
    }
    jobs_payload = []
    for path in spec.datasets:
        for label, cfg in spec.configs:
            jobs_payload.append(
                {
                    "dataset_path": path,
                    "dataset_name": name_by_path[path],
                    "config_label": label,
                    "config": {
                        "reducer": cfg.reducer,
                        "ppl": list(cfg.ppl),
                        "k": cfg.k,
                        "target_dim": cfg.target_dim,
                        "epochs": cfg.train_cfg.epochs,
                        "batch_size": cfg.train_cfg.batch_size,
                        "learning_rate": cfg.train_cfg.learning_rate,
                    },
                    "spec": spec_common,
                }
            )

    cells: dict[tuple[str, str], dict] = {}
    if spec.jobs == 1:
        outcomes = []
        for payload in jobs_payload:
            try:
                outcomes.append(_run_cell(payload))
            except Exception as exc:  # cell failures are reported, not fatal
                outcomes.append(exc)
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            futures = [pool.submit(_run_cell, payload) for payload in jobs_payload]
            outcomes = []
            for future in futures:
                try:
                    outcomes.append(future.result())
                except Exception as exc:
                    outcomes.append(exc)

    any_failed = False
    for payload, outcome in zip(jobs_payload, outcomes):
        key = (payload["dataset_name"], payload["config_label"])
        if isinstance(outcome, Exception):
            any_failed = True
            cells[key] = {"status": "failed", "reason": f"{type(outcome).__name__}: {outcome}"}
            print(f"FAILED {key[0]} x {key[1]}: {cells[key]['reason']}", file=sys.stderr)
            continue
        cells[key] = {
            "status": "ok",
            "metrics": outcome["metrics"],
            "fit_seconds": outcome["fit_seconds"],
            "fold_plan_fingerprint": outcome["fold_plan_fingerprint"],
        }
        # one sidecar per dataset; identical across that dataset's configs
        _atomic_write(
            os.path.join(folds_dir, f"{key[0]}.plan"), outcome["fold_plan_text"]
        )
        header = "repetition,fold,row_id,true_label,predicted_label," + ",".join(
            f"score_{c}" for c in outcome["class_names"]
        )
        lines = [header] + [",".join(str(v) for v in row) for row in outcome["audit_rows"]]
        audit_path = os.path.join(folds_dir, f"{key[0]}__{key[1]}.csv")
        _atomic_write(audit_path, "\n".join(lines) + "\n")

    labels = [label for label, _ in spec.configs]
    for metric in METRICS:
        _atomic_write(
            os.path.join(spec.out_dir, f"{metric}.csv"),
            _matrix_csv(dataset_names, labels, cells, metric),
        )

    fingerprint = hashlib.sha256()
    fingerprint.update(__version__.encode())
    fingerprint.update(json.dumps(spec.resolved(), sort_keys=True).encode())
    for path in spec.datasets:
        fingerprint.update(_file_sha256(path).encode())
    manifest = {
        "version": __version__,
        "spec": spec.resolved(),
        "fingerprint": fingerprint.hexdigest(),
        "cells": {f"{ds}::{label}": cell for (ds, label), cell in sorted(cells.items())},
    }
    _atomic_write(
        os.path.join(spec.out_dir, "manifest.json"),
        json.dumps(manifest, indent=2, sort_keys=True) + "\n",
    )
    print(f"wrote {spec.out_dir}/manifest.json ({len(cells)} cells)")
    return 1 if any_failed else 0


def cmd_stats(args) -> int:
    matrix = ResultMatrix.from_csv(args.matrix)
    if args.columns:
        wanted = [c.strip() for c in args.columns.split(",") if c.strip()]
        matrix_for_test = matrix.select_columns(wanted) if args.test == "friedman" else matrix
    else:
        wanted = None
        matrix_for_test = matrix

    out_lines = []
    if args.test == "friedman":
        form = "iman_davenport" if args.form == "iman-davenport" else "chi2"
        report = friedman(matrix_for_test, direction=args.direction, form=form)
        order = np.argsort(report.avg_ranks)
        print(f"{report.method}: statistic={report.statistic:.6f} p={report.p_value:.6f}")
        out_lines.append("column,avg_rank")
        for idx in order:
            label = report.rank_labels[idx]
            print(f"  {label:<24} avg rank {report.avg_ranks[idx]:.3f}")
            out_lines.append(f"{label},{report.avg_ranks[idx]!r}")
        out_lines.append(f"statistic,{report.statistic!r}")
        out_lines.append(f"p_value,{report.p_value!r}")
    else:
        pairs = []
        if wanted is not None:
            if len(wanted) != 2:
                raise ValueError("--columns for wilcoxon needs exactly two labels")
            pairs.append((wanted[0], wanted[1]))
        elif args.baseline:
            others = [c for c in matrix.col_labels if c != args.baseline]
            if not others:
                raise ValueError("baseline leaves nothing to compare against")
            pairs.extend((args.baseline, other) for other in others)
        else:
            raise ValueError("wilcoxon needs --columns a,b or --baseline")
        out_lines.append("a,b,statistic,p_value")
        for a, b in pairs:
            report = wilcoxon_signed_rank(matrix.column(a), matrix.column(b))
            if math.isnan(report.p_value):
                print(f"  {a} vs {b}: undefined (all differences zero)")
                out_lines.append(f"{a},{b},nan,nan")
            else:
                print(f"  {a} vs {b}: W={report.statistic:g} p={report.p_value:.6f}  [{report.method}]")
                out_lines.append(f"{a},{b},{report.statistic!r},{report.p_value!r}")
    if args.out:
        _atomic_write(args.out, "\n".join(out_lines) + "\n")
    return 0


def cmd_plotdata(args) -> int:
    with open(args.manifest, encoding="utf-8") as handle:
        manifest = json.load(handle)
    os.makedirs(args.out, exist_ok=True)
    for metric in METRICS:
        lines = ["dataset,configuration,value"]
        for key in sorted(manifest.get("cells", {})):
            cell = manifest["cells"][key]
            if cell.get("status") != "ok":
                continue
            dataset, configuration = key.split("::", 1)
            lines.append(f"{dataset},{configuration},{cell['metrics'][metric]!r}")
        _atomic_write(os.path.join(args.out, f"plot_{metric}.csv"), "\n".join(lines) + "\n")
    print(f"wrote plot data for {len(METRICS)} metrics to {args.out}/")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "eval":
            return cmd_eval(args)
        if args.command == "stats":
            return cmd_stats(args)
        return cmd_plotdata(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
