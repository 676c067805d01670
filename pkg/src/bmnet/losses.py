"""Classification, contrastive, triplet and joint objectives."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import tensor as T
from .errors import ConfigError, ContractError, MiningError
from .tensor import GradNode


@dataclass
class LossValue:
    total: GradNode
    classification: float
    metric: float


def _reduce(per_item: GradNode, reduction: str) -> GradNode:
    if reduction == "mean":
        return T.mean(per_item)
    if reduction == "sum":
        return T.sum(per_item)
    raise ConfigError(f"reduction must be 'mean' or 'sum', got {reduction!r}")


def _sq_dist(a: GradNode, b: GradNode) -> GradNode:
    """Row-wise squared Euclidean distance of two ``[P, E]`` nodes."""
    if a.shape != b.shape or a.value.ndim != 2:
        raise ContractError(f"embedding batches must share shape [P, E], got {a.shape} and {b.shape}")
    return T.sum(T.square(T.sub(a, b)), axis=1)


def cross_entropy(logits: GradNode, labels) -> GradNode:
    """Mean binary cross-entropy on raw logits.

    Uses ``softplus(z) - y * z``, which equals ``-[y log p + (1-y) log(1-p)]``
    with ``p = sigmoid(z)`` and never overflows.
    """
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    if y.size == 0:
        raise ContractError("cross_entropy: empty batch")
    if logits.value.size != y.size:
        raise ContractError(f"cross_entropy: {logits.value.size} logits for {y.size} labels")
    z = T.reshape(logits, (y.size,))
    return T.mean(T.sub(T.softplus(z), T.mul(z, T.constant(y))))


def contrastive_loss(
    a: GradNode,
    b: GradNode,
    same_class,
    margin: float = 1.0,
    *,
    distance: str = "euclidean",
    swap_terms: bool = False,
    reduction: str = "mean",
) -> GradNode:
    """Hadsell-style contrastive loss over row-aligned pairs ``(a[i], b[i])``.

    Same-class pairs contribute ``D**2``; different-class pairs contribute
    ``max(0, margin - D)**2``. ``distance="squared"`` replaces ``D`` by the
    squared distance inside both terms. ``swap_terms`` swaps which pair type
    receives which term.
    """
    same = np.asarray(same_class, dtype=bool).reshape(-1)
    if same.size == 0:
        raise ContractError("contrastive_loss: no pairs")
    if margin < 0:
        raise ConfigError(f"contrastive_loss: margin must be >= 0, got {margin}")
    if a.shape[0] != same.size:
        raise ContractError(f"contrastive_loss: {a.shape[0]} pairs but {same.size} labels")
    d2 = _sq_dist(a, b)
    if distance == "euclidean":
        pull, dist = d2, T.sqrt(d2)
    elif distance == "squared":
        pull, dist = T.square(d2), d2
    else:
        raise ConfigError(f"contrastive_loss: unknown distance {distance!r}")
    push = T.square(T.relu(T.sub(T.constant(np.full(same.size, float(margin))), dist)))
    pulled = ~same if swap_terms else same
    per_pair = T.add(
        T.mul(pull, T.constant(pulled.astype(float))),
        T.mul(push, T.constant((~pulled).astype(float))),
    )
    return _reduce(per_pair, reduction)


def triplet_loss(
    anchor: GradNode,
    positive: GradNode,
    negative: GradNode,
    margin: float = 1.0,
    *,
    reduction: str = "mean",
) -> GradNode:
    """``max(0, margin + |a-p|^2 - |a-n|^2)`` per triple, squared distances throughout."""
    if anchor.shape[0] == 0:
        raise ContractError("triplet_loss: no triples")
    if margin < 0:
        raise ConfigError(f"triplet_loss: margin must be >= 0, got {margin}")
    d_ap = _sq_dist(anchor, positive)
    d_an = _sq_dist(anchor, negative)
    hinge = T.relu(T.add(T.sub(d_ap, d_an), T.constant(np.full(anchor.shape[0], float(margin)))))
    return _reduce(hinge, reduction)


def pair_loss_from_indices(embedding: GradNode, pairs: Sequence, cfg) -> GradNode:
    idx = np.asarray([(i, j) for i, j, _ in pairs], dtype=np.intp)
    same = [s for _, _, s in pairs]
    return contrastive_loss(
        T.take_rows(embedding, idx[:, 0]),
        T.take_rows(embedding, idx[:, 1]),
        same,
        cfg.margin,
        distance=cfg.contrastive_distance,
        swap_terms=cfg.contrastive_swap_terms,
        reduction=cfg.metric_reduction,
    )


def triplet_loss_from_indices(embedding: GradNode, triplets: Sequence, cfg) -> GradNode:
    idx = np.asarray(triplets, dtype=np.intp).reshape(-1, 3)
    return triplet_loss(
        T.take_rows(embedding, idx[:, 0]),
        T.take_rows(embedding, idx[:, 1]),
        T.take_rows(embedding, idx[:, 2]),
        cfg.margin,
        reduction=cfg.metric_reduction,
    )


def joint_loss(
    logits: GradNode,
    labels,
    embedding: Optional[GradNode],
    cfg,
    *,
    pairs: Optional[Sequence] = None,
    triplets: Optional[Sequence] = None,
) -> LossValue:
    """``lam * metric + cross_entropy`` as a single graph node.

    ``pairs`` holds ``(i, j, same_class)`` rows and ``triplets`` holds
    ``(anchor, positive, negative)`` rows, both indexing into ``embedding``.
    Which one is used is decided by ``cfg.loss_mode``.
    """
    ce = cross_entropy(logits, labels)
    if cfg.loss_mode == "none":
        return LossValue(ce, float(ce.value), 0.0)
    if cfg.loss_mode == "contrastive":
        if not pairs:
            raise MiningError("loss_mode=contrastive but the batch yielded no pairs")
        metric = pair_loss_from_indices(embedding, pairs, cfg)
    elif cfg.loss_mode == "triplet":
        if triplets is None or len(triplets) == 0:
            raise MiningError("loss_mode=triplet but the batch yielded no triplets")
        metric = triplet_loss_from_indices(embedding, triplets, cfg)
    else:
        raise ConfigError(f"unknown loss_mode {cfg.loss_mode!r}")
    total = T.add(T.scalar_mul(metric, cfg.lam), ce)
    return LossValue(total, float(ce.value), float(metric.value))
