"""Class-balanced batching and within-batch pair/triplet sampling."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .errors import ConfigError, MiningError


@dataclass(frozen=True)
class BatchPlan:
    batches: Tuple[np.ndarray, ...]

    def __iter__(self):
        return iter(self.batches)

    def __len__(self):
        return len(self.batches)

    def class_counts(self, labels) -> List[Tuple[int, int]]:
        labels = np.asarray(labels)
        return [(int(np.sum(labels[b] == 0)), int(np.sum(labels[b] == 1))) for b in self.batches]


def stratified_batches(labels, batch_size: int, rng: np.random.Generator, *, metric: bool = False) -> BatchPlan:
    """Shuffle within class, then interleave so each batch tracks the global ratio.

    The number of positives among the first ``k`` slots is
    ``floor(k * p + 1/2)`` with ``p`` the global positive fraction, so any
    batch of size ``s`` holds ``floor(s * p)`` or ``ceil(s * p)`` positives.
    The final short batch is kept.
    """
    labels = np.asarray(labels).astype(int)
    n = labels.size
    if batch_size < 1:
        raise ConfigError(f"batch_size must be positive, got {batch_size}")
    pos = np.flatnonzero(labels == 1)
    neg = np.flatnonzero(labels == 0)
    if metric:
        if batch_size < 4:
            raise ConfigError(f"batch_size must be >= 4 with a metric loss, got {batch_size}")
        if pos.size == 0 or neg.size == 0:
            raise MiningError("metric loss needs both classes in the training set")
    pos = rng.permutation(pos)
    neg = rng.permutation(neg)
    p = pos.size / n if n else 0.0
    order = np.empty(n, dtype=np.intp)
    taken_pos = 0
    for k in range(n):
        want = math.floor((k + 1) * p + 0.5)
        if want > taken_pos:
            order[k] = pos[taken_pos]
            taken_pos += 1
        else:
            order[k] = neg[k - taken_pos]
    return BatchPlan(tuple(order[i : i + batch_size] for i in range(0, n, batch_size)))


def supports_metric(batch_labels, loss_mode: str) -> bool:
    """Whether ``make_pairs``/``make_triplets`` can produce anything useful for this batch."""
    labels = np.asarray(batch_labels)
    n_pos, n_neg = int(np.sum(labels == 1)), int(np.sum(labels == 0))
    if loss_mode == "none":
        return False
    return min(n_pos, n_neg) >= 1 and max(n_pos, n_neg) >= 2


def make_pairs(batch_labels, rng: np.random.Generator) -> List[Tuple[int, int, bool]]:
    """Disjoint positive pairs within each class, then disjoint cross-class pairs.

    Returns ``(i, j, same_class)`` tuples with batch-local indices; positive
    pairs come first.
    """
    labels = np.asarray(batch_labels)
    if labels.size < 2:
        raise MiningError(f"need at least 2 samples to form pairs, got {labels.size}")
    classes = np.unique(labels)
    if classes.size < 2:
        raise MiningError("batch has no other-class sample to form a negative pair")
    members = {c: rng.permutation(np.flatnonzero(labels == c)) for c in classes}
    pairs = []
    for c in classes:
        m = members[c]
        for k in range(0, m.size - 1, 2):
            pairs.append((int(m[k]), int(m[k + 1]), True))
    if not pairs:
        warnings.warn("batch yields no positive pair; contrastive loss only pushes", RuntimeWarning, stacklevel=2)
    a, b = members[classes[0]], members[classes[1]]
    for i, j in zip(a, b):
        pairs.append((int(i), int(j), False))
    return pairs


def make_triplets(
    batch_labels,
    rng: np.random.Generator,
    *,
    semi_hard: bool = False,
    embeddings: Optional[np.ndarray] = None,
    margin: float = 1.0,
) -> List[Tuple[int, int, int]]:
    """One triplet per eligible anchor (a sample with at least one same-class peer).

    Positives and negatives are uniform within the batch. With ``semi_hard``
    the negative is drawn among those with ``|a-n|^2 < |a-p|^2 + margin``
    when any exist.
    """
    labels = np.asarray(batch_labels)
    if semi_hard and embeddings is None:
        raise ConfigError("semi_hard mining needs the batch embeddings")
    triplets = []
    for a in range(labels.size):
        same = np.flatnonzero(labels == labels[a])
        same = same[same != a]
        other = np.flatnonzero(labels != labels[a])
        if same.size == 0 or other.size == 0:
            continue
        p = int(rng.choice(same))
        if semi_hard:
            d_ap = np.sum((embeddings[a] - embeddings[p]) ** 2)
            d_an = np.sum((embeddings[a] - embeddings[other]) ** 2, axis=1)
            hard = other[d_an < d_ap + margin]
            if hard.size:
                other = hard
        n = int(rng.choice(other))
        triplets.append((a, p, n))
    if not triplets:
        raise MiningError("batch has no class with two members alongside another class")
    return triplets
