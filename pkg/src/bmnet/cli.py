"""Command-line entry point: ``bmnet synth|train|crossval|eval|compare|roc``.

Exit codes: 0 success, 2 configuration or data error, 3 divergence,
4 incompatible comparison.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .data import SynthSpec, TaskBinding, load_csv, save_csv, synthesize, zscore_fit_transform
from .errors import BmnetError, DivergenceError, IncompatibleRunsError
from .evaluation import evaluate, roc_curve
from .experiment import (
    ExperimentConfig,
    _write_csv,
    dump_json,
    read_csv_rows,
    run_ablation,
    run_experiment,
    write_ablation,
    write_run,
)
from .model import BmnetConfig, checkpoint_dict, params_from_dict, predict_proba
from .stats import delong_test, paired_t_test
from .training import train_model

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_INCOMPATIBLE = 0, 2, 3, 4

log = logging.getLogger("bmnet")


class CliError(Exception):
    def __init__(self, message, code=EXIT_CONFIG):
        super().__init__(message)
        self.code = code


def _load_experiment(args) -> ExperimentConfig:
    try:
        cfg = ExperimentConfig.load(args.config)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config {args.config}: {exc}") from None
    if args.seed is not None:
        cfg = replace(cfg, train=replace(cfg.train, seed=args.seed))
    if args.out is not None:
        cfg = replace(cfg, output_dir=args.out)
    if cfg.output_dir is None:
        raise CliError("no output directory: set output_dir in the config or pass --out")
    return cfg


def cmd_synth(args) -> int:
    try:
        spec = SynthSpec.from_dict(json.loads(Path(args.spec).read_text()))
    except (OSError, json.JSONDecodeError, TypeError) as exc:
        raise CliError(f"invalid synth spec: {exc}") from None
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    data = synthesize(spec)
    save_csv(data, args.out)
    x, y, _ = TaskBinding(*spec.class_names).bind(data)
    mu_pos, mu_neg = x[y == 1].mean(axis=0), x[y == 0].mean(axis=0)
    # nearest class centroid on the generated rows
    d_pos = ((x - mu_pos) ** 2).sum(axis=1)
    d_neg = ((x - mu_neg) ** 2).sum(axis=1)
    acc = float(np.mean((d_pos < d_neg) == (y == 1)))
    print(f"wrote {len(data)} rows x {data.regions} regions to {args.out}")
    for name, n in zip(spec.class_names, spec.n_per_class):
        print(f"  {name}: {n}")
    print(f"  centroid distance: {np.linalg.norm(mu_pos - mu_neg):.4f}")
    print(f"  nearest-centroid accuracy: {acc:.4f}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _load_experiment(args)
    out = Path(cfg.output_dir)
    if cfg.validation["mode"] == "holdout":
        run = run_experiment(cfg)
        write_run(run, out)
        f = run.folds[0]
        print(f"best epoch {f.train.best_epoch}; test auc={f.report.auc} acc={f.report.acc:.4f}")
        return EXIT_OK
    # k-fold configs: train on every bound sample, no test split
    data = cfg.load_dataset()
    x, y, _ = cfg.binding.bind(data)
    (x_tr,), mu, sd = zscore_fit_transform(x)
    result = train_model(x_tr, y, cfg.model, cfg.train)
    out.mkdir(parents=True, exist_ok=True)
    cd = cfg.digest()
    (out / "config.json").write_text(dump_json(cfg.to_dict()))
    hist = result.history
    cols = list(hist[0]) if hist else ["epoch", "loss_total", "loss_c", "loss_m", "train_acc"]
    _write_csv(out / "train_log.csv", cd, cols, [[r[c] if c == "epoch" else repr(float(r[c])) for c in cols] for r in hist])
    ck = checkpoint_dict(cfg.model, result.params, cfg.train.seed)
    ck.update(config_digest=cd, task=cfg.task, normalization={"mean": mu.tolist(), "std": sd.tolist()})
    (out / "checkpoint.json").write_text(json.dumps(ck, sort_keys=True))
    final = hist[-1]["train_acc"] if hist else float("nan")
    print(f"trained {cfg.train.epochs} epochs; final train acc={final:.4f}")
    return EXIT_OK


def cmd_crossval(args) -> int:
    cfg = _load_experiment(args)
    if args.ablation:
        runs, table = run_ablation(cfg)
        write_ablation(runs, table, cfg.output_dir)
        for row in table:
            cells = " ".join("   -  " if row[c] is None else f"{row[c]:.4f}" for c in ("ACC", "PPV", "NPV", "SEN", "SPE", "AUC", "F1", "p"))
            print(f"{row['Method']:<12} {cells}")
        return EXIT_OK
    run = run_experiment(cfg)
    write_run(run, cfg.output_dir)
    s = run.summary()["summary"]
    print(" ".join(f"{k}={v['mean']:.4f}" for k, v in s.items() if v["mean"] is not None))
    return EXIT_OK


def _load_checkpoint_doc(path):
    try:
        doc = json.loads(Path(path).read_text())
        return doc, BmnetConfig.from_dict(doc["config"]), params_from_dict(doc)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise CliError(f"cannot read checkpoint {path}: {exc}") from None


def cmd_eval(args) -> int:
    doc, cfg, params = _load_checkpoint_doc(args.checkpoint)
    task = TaskBinding.parse(args.task or doc.get("task", "EMCI vs LMCI"))
    x, y, _ = task.bind(load_csv(args.data))
    norm = doc.get("normalization")
    if norm:
        x = (x - np.asarray(norm["mean"])) / np.asarray(norm["std"])
    scores = predict_proba(x, params, cfg)
    report = evaluate(scores, y, args.threshold).to_dict()
    report["checkpoint_digest"] = doc.get("config_digest")
    text = dump_json(report)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _read_run(path):
    run = Path(path)
    try:
        summary = json.loads((run / "summary.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"{run} is not a run directory: {exc}") from None
    return run, summary


def _read_scores(run: Path):
    path = run / "scores.csv"
    if not path.exists():
        raise CliError(f"{run} has no exported scores")
    rows = read_csv_rows(path)
    idx = np.array([int(r["index"]) for r in rows])
    order = np.argsort(idx, kind="mergesort")
    return (
        idx[order],
        np.array([r["subject_id"] for r in rows])[order],
        np.array([int(r["label"]) for r in rows])[order],
        np.array([float(r["score"]) for r in rows])[order],
    )


def cmd_compare(args) -> int:
    dir_a, sum_a = _read_run(args.run_a)
    dir_b, sum_b = _read_run(args.run_b)
    if sum_a.get("data_digest") != sum_b.get("data_digest"):
        raise CliError("runs were trained on different data", EXIT_INCOMPATIBLE)
    if args.mode == "t":
        if sum_a["mode"] != "kfold" or sum_b["mode"] != "kfold":
            raise CliError("the t-test needs k-fold runs", EXIT_INCOMPATIBLE)
        folds_a = json.loads((dir_a / "folds.json").read_text())["folds"]
        folds_b = json.loads((dir_b / "folds.json").read_text())["folds"]
        if folds_a != folds_b:
            raise CliError("runs use different fold assignments", EXIT_INCOMPATIBLE)
        auc_a = [f["auc"] for f in sum_a["folds"]]
        auc_b = [f["auc"] for f in sum_b["folds"]]
        if None in auc_a or None in auc_b:
            raise CliError("a fold has an undefined AUC", EXIT_INCOMPATIBLE)
        result = paired_t_test(auc_a, auc_b)
    else:
        ia, sa_ids, ya, sa = _read_scores(dir_a)
        ib, sb_ids, yb, sb = _read_scores(dir_b)
        if not (np.array_equal(ia, ib) and np.array_equal(sa_ids, sb_ids) and np.array_equal(ya, yb)):
            raise CliError("runs were not scored on the same test samples", EXIT_INCOMPATIBLE)
        result = delong_test(sa, sb, ya)
    doc = result.to_dict()
    doc.update(run_a=str(dir_a), run_b=str(dir_b), config_digest_a=sum_a.get("config_digest"), config_digest_b=sum_b.get("config_digest"))
    text = dump_json(doc)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_roc(args) -> int:
    run, summary = _read_run(args.run)
    _, _, labels, scores = _read_scores(run)
    _, curve = roc_curve(scores, labels)
    rows = [
        [repr(float(f)), repr(float(t)), "inf" if math.isinf(th) else repr(float(th))]
        for f, t, th in zip(curve.fpr, curve.tpr, curve.thresholds)
    ]
    _write_csv(Path(args.out), summary.get("config_digest", ""), ["fpr", "tpr", "threshold"], rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bmnet", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="write a synthetic ROI feature CSV")
    s.add_argument("spec", help="JSON file with SynthSpec fields")
    s.add_argument("out", help="output CSV path")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_synth)

    for name, func, text in (
        ("train", cmd_train, "train one model and write a checkpoint"),
        ("crossval", cmd_crossval, "run the configured validation protocol"),
    ):
        c = sub.add_parser(name, help=text)
        c.add_argument("config", help="experiment config JSON")
        c.add_argument("--seed", type=int)
        c.add_argument("--out", help="output directory (overrides output_dir)")
        if name == "crossval":
            c.add_argument("--ablation", action="store_true", help="run all six ablation variants")
        c.set_defaults(func=func)

    e = sub.add_parser("eval", help="score a feature CSV with a checkpoint")
    e.add_argument("checkpoint")
    e.add_argument("data")
    e.add_argument("--task")
    e.add_argument("--threshold", type=float, default=0.5)
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)

    m = sub.add_parser("compare", help="significance test between two runs")
    m.add_argument("run_a")
    m.add_argument("run_b")
    m.add_argument("--mode", choices=("t", "delong"), required=True)
    m.add_argument("--out")
    m.set_defaults(func=cmd_compare)

    r = sub.add_parser("roc", help="export ROC points of a run")
    r.add_argument("run")
    r.add_argument("out")
    r.set_defaults(func=cmd_roc)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except DivergenceError as exc:
        print(f"error: training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except IncompatibleRunsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCOMPATIBLE
    except BmnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
