"""Mini-batch training of a BMNet on a feature matrix."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional

import numpy as np

from . import tensor as T
from .errors import ConfigError, DivergenceError
from .losses import LossValue, cross_entropy, joint_loss
from .mining import make_pairs, make_triplets, stratified_batches, supports_metric
from .model import BmnetConfig, ModelParams, forward, init_params, predict_logits, predict_proba
from .optim import SgdState, step

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    lr: float = 0.01
    batch_size: int = 32
    epochs: int = 100
    seed: int = 0
    momentum: float = 0.9
    weight_decay: float = 0.001

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigError("epochs must be >= 0 and batch_size >= 1")
        if not self.lr > 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"unknown train config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class TrainResult:
    params: ModelParams
    history: List[dict] = field(default_factory=list)
    best_epoch: int = 0  # 1-based; 0 means the initialization was kept


def batch_loss(xb: np.ndarray, yb: np.ndarray, params: ModelParams, cfg: BmnetConfig, rng, mode: str = "train") -> LossValue:
    """Forward one batch and assemble the joint objective, mining inside the batch.

    Batches that cannot supply a pair or triplet fall back to cross-entropy.
    """
    out = forward(xb[:, None, :], params, cfg, mode)
    if not supports_metric(yb, cfg.loss_mode):
        ce = cross_entropy(out.logit, yb)
        return LossValue(ce, float(ce.value), 0.0)
    if cfg.loss_mode == "contrastive":
        return joint_loss(out.logit, yb, out.embedding, cfg, pairs=make_pairs(yb, rng))
    triplets = make_triplets(
        yb, rng, semi_hard=cfg.semi_hard, embeddings=out.embedding.value, margin=cfg.margin
    )
    return joint_loss(out.logit, yb, out.embedding, cfg, triplets=triplets)


def train_model(
    x: np.ndarray,
    y: np.ndarray,
    cfg: BmnetConfig,
    tcfg: TrainConfig,
    *,
    x_val: Optional[np.ndarray] = None,
    y_val: Optional[np.ndarray] = None,
    params: Optional[ModelParams] = None,
) -> TrainResult:
    """Train with SGD; with a validation split keep the epoch of lowest validation CE.

    Without validation data the final epoch is returned.
    """
    rng = T.rng_from_seed(tcfg.seed)
    if params is None:
        params = init_params(cfg, rng)
    y = np.asarray(y).astype(int)
    state = SgdState(tcfg.lr, tcfg.momentum, tcfg.weight_decay)
    metric = cfg.loss_mode != "none"
    history = []
    best, best_epoch, best_val = params.copy(), 0, math.inf
    for epoch in range(1, tcfg.epochs + 1):
        plan = stratified_batches(y, tcfg.batch_size, rng, metric=metric)
        sums = np.zeros(3)
        for idx in plan:
            loss = batch_loss(x[idx], y[idx], params, cfg, rng)
            if not math.isfinite(float(loss.total.value)):
                raise DivergenceError(f"non-finite loss at epoch {epoch}", epoch=epoch)
            T.backward(loss.total)
            try:
                step(params, state)
            except DivergenceError as exc:
                raise DivergenceError(f"{exc} at epoch {epoch}", name=exc.name, epoch=epoch) from None
            sums += len(idx) * np.array([float(loss.total.value), loss.classification, loss.metric])
        sums /= y.size
        train_acc = float(np.mean((predict_proba(x, params, cfg) >= 0.5) == y))
        row = {"epoch": epoch, "loss_total": sums[0], "loss_c": sums[1], "loss_m": sums[2], "train_acc": train_acc}
        if x_val is not None:
            val_logits = predict_logits(x_val, params, cfg)
            val_loss = float(cross_entropy(T.constant(val_logits), y_val).value)
            row["val_loss"] = val_loss
            if val_loss < best_val:
                best, best_epoch, best_val = params.copy(), epoch, val_loss
        history.append(row)
        log.debug("epoch %d %s", epoch, row)
    if x_val is None:
        return TrainResult(params, history, tcfg.epochs)
    if tcfg.epochs == 0:
        return TrainResult(params, history, 0)
    return TrainResult(best, history, best_epoch)

