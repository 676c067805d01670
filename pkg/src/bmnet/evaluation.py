"""Confusion-matrix metrics, ROC/AUC and fold aggregation."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ContractError

METRICS = ("acc", "ppv", "npv", "sen", "spe", "auc", "f1")
# column order used in the ablation tables
TABLE_COLUMNS = ("ACC", "PPV", "NPV", "SEN", "SPE", "AUC", "F1")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(scores, labels, threshold: float = 0.5) -> ConfusionCounts:
    """Tally predictions ``score >= threshold`` against labels (positive = 1).

    A score exactly at the threshold counts as a positive prediction.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels).astype(int)
    if s.size == 0 or s.shape != y.shape:
        raise ContractError(f"confusion: need matching non-empty scores/labels, got {s.shape} and {y.shape}")
    pred = s >= threshold
    pos = y == 1
    return ConfusionCounts(
        tp=int(np.sum(pred & pos)),
        fp=int(np.sum(pred & ~pos)),
        tn=int(np.sum(~pred & ~pos)),
        fn=int(np.sum(~pred & pos)),
    )


def _ratio(num: float, den: float) -> Optional[float]:
    return num / den if den else None


def metrics(c: ConfusionCounts) -> Dict[str, Optional[float]]:
    """ACC, PPV, NPV, SEN, SPE, F1; ``None`` marks a zero denominator."""
    if c.total <= 0:
        raise ContractError("metrics: no evaluated samples")
    ppv = _ratio(c.tp, c.tp + c.fp)
    sen = _ratio(c.tp, c.tp + c.fn)
    if ppv is None or sen is None or ppv + sen == 0:
        f1 = None
    else:
        f1 = 2.0 * ppv * sen / (ppv + sen)
    return {
        "acc": (c.tp + c.tn) / c.total,
        "ppv": ppv,
        "npv": _ratio(c.tn, c.tn + c.fn),
        "sen": sen,
        "spe": _ratio(c.tn, c.tn + c.fp),
        "f1": f1,
    }


@dataclass
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray  # first entry is +inf (nothing predicted positive)


def roc_curve(scores, labels) -> Tuple[float, RocCurve]:
    """Sweep every distinct score as a threshold, highest first.

    The AUC is accumulated from integer counts as
    ``sum(dFP * (TP_prev + TP)) / (2 * P * N)``, which is exactly the
    Mann-Whitney statistic with ties counted one half.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels).astype(int)
    if s.shape != y.shape:
        raise ContractError("roc: scores and labels differ in length")
    n_pos = int(np.sum(y == 1))
    n_neg = int(y.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ContractError("roc: both classes must be present")
    order = np.argsort(-s, kind="mergesort")
    s_sorted, y_sorted = s[order], y[order]
    # last index of every run of equal scores
    cut = np.flatnonzero(np.diff(s_sorted) != 0)
    ends = np.append(cut, s.size - 1)
    tp = np.concatenate([[0], np.cumsum(y_sorted)[ends]]).astype(np.int64)
    fp = np.concatenate([[0], (ends + 1) - tp[1:]]).astype(np.int64)
    twice_area = int(np.sum(np.diff(fp) * (tp[:-1] + tp[1:])))
    auc = twice_area / (2 * n_pos * n_neg)
    thresholds = np.concatenate([[np.inf], s_sorted[ends]])
    return auc, RocCurve(fp / n_neg, tp / n_pos, thresholds)


def roc_auc(scores, labels) -> Tuple[float, List[Tuple[float, float]]]:
    auc, curve = roc_curve(scores, labels)
    return auc, list(zip(curve.fpr.tolist(), curve.tpr.tolist()))


@dataclass
class EvalReport:
    acc: float
    ppv: Optional[float]
    npv: Optional[float]
    sen: Optional[float]
    spe: Optional[float]
    f1: Optional[float]
    auc: Optional[float]
    n_pos: int
    n_neg: int
    counts: ConfusionCounts
    roc_points: List[Tuple[float, float]] = field(default_factory=list)

    def to_dict(self, with_roc: bool = False) -> dict:
        d = asdict(self)
        if not with_roc:
            d.pop("roc_points")
        return d


def evaluate(scores, labels, threshold: float = 0.5) -> EvalReport:
    """Full report for one set of predicted probabilities.

    AUC is ``None`` when the labels contain a single class.
    """
    y = np.asarray(labels).astype(int)
    c = confusion(scores, y, threshold)
    m = metrics(c)
    n_pos = int(np.sum(y == 1))
    n_neg = int(y.size - n_pos)
    auc, points = (None, [])
    if n_pos and n_neg:
        auc, points = roc_auc(scores, y)
    return EvalReport(m["acc"], m["ppv"], m["npv"], m["sen"], m["spe"], m["f1"], auc, n_pos, n_neg, c, points)


def aggregate_folds(reports: Sequence[EvalReport]) -> Dict[str, dict]:
    """Unweighted mean and sample std per metric across folds.

    Undefined (``None``) entries are skipped; ``n`` records how many folds
    contributed. A single contributing fold has std 0.
    """
    if not reports:
        raise ContractError("aggregate_folds: no reports")
    out = {}
    for name in METRICS:
        vals = [getattr(r, name) for r in reports if getattr(r, name) is not None]
        if not vals:
            out[name] = {"mean": None, "std": None, "n": 0}
            continue
        arr = np.asarray(vals, dtype=np.float64)
        std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
        out[name] = {"mean": float(arr.mean()), "std": std, "n": int(arr.size)}
    return out


def f1_from(ppv: float, sen: float) -> float:
    return 2.0 * ppv * sen / (ppv + sen)


def trapezoid_auc(fpr: Sequence[float], tpr: Sequence[float]) -> float:
    x = np.asarray(fpr, dtype=np.float64)
    y = np.asarray(tpr, dtype=np.float64)
    return float(np.sum(np.diff(x) * (y[:-1] + y[1:]) / 2.0))
