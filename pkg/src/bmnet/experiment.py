"""Reproducible experiments: cross-validation, holdout runs and the ablation grid."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .data import (
    FoldPlan,
    RoiDataset,
    SynthSpec,
    TaskBinding,
    holdout_split,
    load_csv,
    stratified_kfold,
    synthesize,
    zscore_fit_transform,
)
from .errors import ConfigError
from .evaluation import TABLE_COLUMNS, EvalReport, aggregate_folds, evaluate
from .model import BmnetConfig, checkpoint_dict, predict_proba
from .stats import delong_test, paired_t_test
from .training import TrainConfig, TrainResult, train_model

log = logging.getLogger(__name__)

# (row label, use_bilinear, loss_mode) in the order of the published ablation tables
ABLATION_GRID = (
    ("Baseline", False, "none"),
    ("Baseline+BP", True, "none"),
    ("Tri-loss", False, "triplet"),
    ("Tri-loss+BP", True, "triplet"),
    ("Con-loss", False, "contrastive"),
    ("Con-loss+BP", True, "contrastive"),
)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def digest(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


@dataclass
class ExperimentConfig:
    task: str = "EMCI vs LMCI"
    model: BmnetConfig = field(default_factory=BmnetConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    validation: dict = field(default_factory=lambda: {"mode": "kfold", "k": 5})
    data_path: Optional[str] = None
    synth: Optional[SynthSpec] = None
    threshold: float = 0.5
    output_dir: Optional[str] = None

    def __post_init__(self):
        mode = self.validation.get("mode")
        if mode not in ("kfold", "holdout"):
            raise ConfigError(f"validation.mode must be 'kfold' or 'holdout', got {mode!r}")
        if (self.data_path is None) == (self.synth is None):
            raise ConfigError("exactly one of data_path and synth must be given")
        TaskBinding.parse(self.task)

    @property
    def binding(self) -> TaskBinding:
        return TaskBinding.parse(self.task)

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "model": self.model.to_dict(),
            "train": self.train.to_dict(),
            "validation": dict(self.validation),
            "data_path": self.data_path,
            "synth": self.synth.to_dict() if self.synth else None,
            "threshold": self.threshold,
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        known = {"task", "model", "train", "validation", "data_path", "synth", "threshold", "output_dir"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown experiment config keys: {sorted(unknown)}")
        try:
            return cls(
                task=d.get("task", "EMCI vs LMCI"),
                model=BmnetConfig.from_dict(d.get("model", {})),
                train=TrainConfig.from_dict(d.get("train", {})),
                validation=d.get("validation", {"mode": "kfold", "k": 5}),
                data_path=d.get("data_path"),
                synth=SynthSpec.from_dict(d["synth"]) if d.get("synth") else None,
                threshold=float(d.get("threshold", 0.5)),
                output_dir=d.get("output_dir"),
            )
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def digest(self) -> str:
        """Hash of everything that influences results (the output directory does not)."""
        d = self.to_dict()
        d.pop("output_dir")
        return digest(d)

    def load_dataset(self) -> RoiDataset:
        if self.synth is not None:
            return synthesize(self.synth)
        return load_csv(self.data_path)

    def make_plan(self, labels) -> FoldPlan:
        v = self.validation
        if v["mode"] == "kfold":
            return stratified_kfold(labels, int(v.get("k", 5)), self.train.seed)
        return holdout_split(labels, tuple(v.get("fractions", (0.8, 0.1, 0.1))), self.train.seed)


@dataclass
class FoldOutcome:
    fold: int
    report: EvalReport
    train: TrainResult
    test_index: np.ndarray
    scores: np.ndarray
    norm_mean: np.ndarray
    norm_std: np.ndarray


@dataclass
class RunResult:
    config: ExperimentConfig
    plan: FoldPlan
    labels: np.ndarray
    subject_ids: List[str]
    folds: List[FoldOutcome]
    data_digest: str

    @property
    def fold_aucs(self) -> List[float]:
        return [f.report.auc for f in self.folds]

    def pooled_scores(self):
        """Scores, labels and dataset indices concatenated over folds in fold order."""
        idx = np.concatenate([f.test_index for f in self.folds])
        return np.concatenate([f.scores for f in self.folds]), self.labels[idx], idx

    def summary(self) -> dict:
        reports = [f.report for f in self.folds]
        scores, labels, _ = self.pooled_scores()
        return {
            "config_digest": self.config.digest(),
            "data_digest": self.data_digest,
            "config": {k: v for k, v in self.config.to_dict().items() if k != "output_dir"},
            "mode": self.plan.mode,
            "folds": [
                {"fold": f.fold, "best_epoch": f.train.best_epoch, **f.report.to_dict()} for f in self.folds
            ],
            "summary": aggregate_folds(reports),
            "pooled": evaluate(scores, labels, self.config.threshold).to_dict(),
            "comparisons": [],
        }


def run_experiment(cfg: ExperimentConfig, dataset: Optional[RoiDataset] = None) -> RunResult:
    """Train and test once per fold (k-fold) or once on the holdout test split.

    Fold ``i`` trains with seed ``train.seed + i``. Features are z-scored with
    statistics of the fold's training rows.
    """
    data = dataset if dataset is not None else cfg.load_dataset()
    x, y, rows = cfg.binding.bind(data)
    if x.shape[1] != cfg.model.input_regions:
        raise ConfigError(f"data has {x.shape[1]} regions but model expects {cfg.model.input_regions}")
    plan = cfg.make_plan(y)
    outcomes = []
    if plan.mode == "kfold":
        splits = [(*plan.split(i), None) for i in range(plan.k)]
    else:
        train_idx, val_idx, test_idx = plan.folds
        splits = [(train_idx, test_idx, val_idx)]
    for i, (tr, te, va) in enumerate(splits):
        tcfg = replace(cfg.train, seed=cfg.train.seed + i)
        extra = [x[va]] if va is not None else []
        (x_tr, x_te, *x_va), mu, sd = zscore_fit_transform(x[tr], x[te], *extra)
        result = train_model(
            x_tr,
            y[tr],
            cfg.model,
            tcfg,
            x_val=x_va[0] if x_va else None,
            y_val=y[va] if va is not None else None,
        )
        scores = predict_proba(x_te, result.params, cfg.model)
        report = evaluate(scores, y[te], cfg.threshold)
        log.info("fold %d: auc=%s acc=%.4f", i, report.auc, report.acc)
        outcomes.append(FoldOutcome(i, report, result, te, scores, mu, sd))
    ids = [data.subject_ids[r] for r in rows]
    return RunResult(cfg, plan, y, ids, outcomes, dataset_digest(x, y))


def dataset_digest(x: np.ndarray, y: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(x, dtype=np.float64).tobytes())
    h.update(np.asarray(y, dtype=np.int64).tobytes())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# artifacts


def _write_csv(path: Path, config_digest: str, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# config_digest={config_digest}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def read_csv_rows(path) -> List[dict]:
    """Read a run CSV, skipping ``#`` comment lines."""
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def write_run(run: RunResult, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cd = run.config.digest()
    (out / "config.json").write_text(dump_json(run.config.to_dict()))
    (out / "summary.json").write_text(dump_json(run.summary()))
    plan = run.plan.to_dict()
    plan["config_digest"] = cd
    (out / "folds.json").write_text(dump_json(plan))
    score_rows = []
    for f in run.folds:
        for i, s in zip(f.test_index, f.scores):
            score_rows.append([int(i), run.subject_ids[i], f.fold, int(run.labels[i]), repr(float(s))])
    _write_csv(out / "scores.csv", cd, ["index", "subject_id", "fold", "label", "score"], score_rows)
    for f in run.folds:
        hist = f.train.history
        cols = list(hist[0]) if hist else ["epoch", "loss_total", "loss_c", "loss_m", "train_acc"]
        _write_csv(
            out / f"train_log_fold{f.fold}.csv",
            cd,
            cols,
            [[repr(float(r[c])) if c != "epoch" else r[c] for c in cols] for r in hist],
        )
        ck = checkpoint_dict(run.config.model, f.train.params, run.config.train.seed + f.fold)
        ck.update(
            config_digest=cd,
            task=run.config.task,
            normalization={"mean": f.norm_mean.tolist(), "std": f.norm_std.tolist()},
        )
        (out / f"checkpoint_fold{f.fold}.json").write_text(json.dumps(ck, sort_keys=True))
    return out


# ---------------------------------------------------------------------------
# ablation


def ablation_configs(cfg: ExperimentConfig) -> Dict[str, ExperimentConfig]:
    return {
        name: replace(cfg, model=replace(cfg.model, use_bilinear=bp, loss_mode=mode))
        for name, bp, mode in ABLATION_GRID
    }


def compare_runs(run: RunResult, baseline: RunResult):
    """Paired t-test on fold AUCs (k-fold) or DeLong on the shared test set (holdout)."""
    if run.plan.mode == "kfold":
        return paired_t_test(run.fold_aucs, baseline.fold_aucs)
    s_a, y, _ = run.pooled_scores()
    s_b, _, _ = baseline.pooled_scores()
    return delong_test(s_a, s_b, y)


def ablation_table(runs: Dict[str, RunResult]) -> List[dict]:
    """One row per method with fold-mean metrics and p versus the Baseline row."""
    base = runs["Baseline"]
    rows = []
    for name, run in runs.items():
        summ = aggregate_folds([f.report for f in run.folds])
        row = {"Method": name}
        for col in TABLE_COLUMNS:
            row[col] = summ[col.lower()]["mean"]
        row["p"] = None if name == "Baseline" else compare_runs(run, base).p_value
        rows.append(row)
    return rows


def run_ablation(cfg: ExperimentConfig, dataset: Optional[RoiDataset] = None):
    """Run every ablation variant on identical data and splits; returns ``(runs, table)``."""
    data = dataset if dataset is not None else cfg.load_dataset()
    runs = {name: run_experiment(c, data) for name, c in ablation_configs(cfg).items()}
    return runs, ablation_table(runs)


def write_ablation(runs: Dict[str, RunResult], table: List[dict], out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, run in runs.items():
        write_run(run, out / name)
    base_cfg = next(iter(runs.values())).config
    doc = {"config_digest": base_cfg.digest(), "rows": table}
    (out / "ablation.json").write_text(dump_json(doc))
    header = ["Method", *TABLE_COLUMNS, "p"]
    fmt = lambda v: "" if v is None else (v if isinstance(v, str) else f"{v:.4f}")  # noqa: E731
    _write_csv(out / "ablation.csv", base_cfg.digest(), header, [[fmt(r[h]) for h in header] for r in table])
    return out
