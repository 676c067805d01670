"""ROI feature tables, synthetic stand-in cohorts, scaling, and stratified splits."""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, ParseError
from .tensor import rng_from_seed

DIAGNOSES = ("NC", "EMCI", "LMCI", "AD")


@dataclass(frozen=True)
class RoiSample:
    subject_id: str
    label: str
    features: np.ndarray


@dataclass
class RoiDataset:
    """Column-oriented table of subjects; ``labels`` hold raw diagnosis strings."""

    subject_ids: List[str]
    labels: List[str]
    features: np.ndarray  # [n, R]

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2 or not self.features.shape[0] == len(self.labels) == len(self.subject_ids):
            raise ConfigError("dataset columns have inconsistent lengths")

    def __len__(self):
        return len(self.labels)

    @property
    def regions(self) -> int:
        return self.features.shape[1]

    def samples(self):
        for sid, lab, row in zip(self.subject_ids, self.labels, self.features):
            yield RoiSample(sid, lab, row)


@dataclass(frozen=True)
class TaskBinding:
    """Binary task over two diagnoses; the positive class maps to 1."""

    positive: str = "EMCI"
    negative: str = "LMCI"

    def __post_init__(self):
        for name in (self.positive, self.negative):
            if name not in DIAGNOSES:
                raise ConfigError(f"unknown diagnosis {name!r}; expected one of {DIAGNOSES}")
        if self.positive == self.negative:
            raise ConfigError("task classes must differ")

    @classmethod
    def parse(cls, text: str) -> "TaskBinding":
        """Parse ``"EMCI vs LMCI"``; the first-named class is positive."""
        parts = [p.strip().upper() for p in re.split(r"\s+vs\.?\s+", text.strip(), flags=re.IGNORECASE)]
        if len(parts) != 2:
            raise ConfigError(f"cannot parse task {text!r}")
        return cls(parts[0], parts[1])

    def bind(self, data: RoiDataset) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return ``(features, labels01, kept_row_indices)``; other diagnoses are dropped."""
        keep = np.array([lab in (self.positive, self.negative) for lab in data.labels], dtype=bool)
        rows = np.flatnonzero(keep)
        y = np.array([1 if data.labels[i] == self.positive else 0 for i in rows], dtype=int)
        return data.features[rows], y, rows


# ---------------------------------------------------------------------------
# CSV contract: subject_id,label,f000,...,f{R-1}


def feature_header(regions: int) -> List[str]:
    width = max(3, len(str(regions - 1)))
    return ["subject_id", "label"] + [f"f{i:0{width}d}" for i in range(regions)]


def load_csv(path) -> RoiDataset:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", line=1) from None
        if len(header) < 3 or header[:2] != ["subject_id", "label"]:
            raise ParseError("header must start with subject_id,label followed by feature columns", line=1)
        regions = len(header) - 2
        if header != feature_header(regions):
            raise ParseError(f"feature columns must be named {feature_header(regions)[2]}..", line=1)
        ids, labels, rows = [], [], []
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != regions + 2:
                raise ParseError(f"expected {regions} features, found {len(row) - 2}", line=line)
            if row[1] not in DIAGNOSES:
                raise ParseError(f"unknown label {row[1]!r}", line=line)
            try:
                values = [float(v) for v in row[2:]]
            except ValueError as exc:
                raise ParseError(str(exc), line=line) from None
            if not all(math.isfinite(v) for v in values):
                raise ParseError("non-finite feature value", line=line)
            ids.append(row[0])
            labels.append(row[1])
            rows.append(values)
    features = np.asarray(rows, dtype=np.float64).reshape(len(rows), regions)
    return RoiDataset(ids, labels, features)


def save_csv(data: RoiDataset, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(feature_header(data.regions))
        for sid, lab, row in zip(data.subject_ids, data.labels, data.features):
            writer.writerow([sid, lab] + [format(v, ".17g") for v in row])


# ---------------------------------------------------------------------------
# scaling


def zscore_fit_transform(train: np.ndarray, *others: np.ndarray, floor: float = 1e-8):
    """Standardize with statistics of ``train`` only.

    Returns ``(transformed, mean, std)`` where ``transformed`` lists ``train``
    followed by each of ``others``. ``std`` is floored so constant features
    map to zero.
    """
    train = np.asarray(train, dtype=np.float64)
    if train.shape[0] == 0:
        raise ConfigError("cannot fit normalization on an empty training split")
    mu = train.mean(axis=0)
    sd = np.maximum(train.std(axis=0), floor)
    out = [(np.asarray(x, dtype=np.float64) - mu) / sd for x in (train, *others)]
    return out, mu, sd


# ---------------------------------------------------------------------------
# splits


@dataclass
class FoldPlan:
    """Index sets for one validation design.

    ``kfold``: ``folds[i]`` are the test indices of fold ``i``.
    ``holdout``: ``folds`` is ``[train, val, test]``.
    """

    mode: str
    seed: int
    folds: List[np.ndarray]
    fractions: Optional[Tuple[float, ...]] = None

    @property
    def k(self) -> int:
        return len(self.folds)

    def split(self, i: int) -> Tuple[np.ndarray, np.ndarray]:
        """``(train, test)`` indices for fold ``i`` of a k-fold plan."""
        if self.mode != "kfold":
            raise ConfigError("split(i) is only defined for kfold plans")
        test = self.folds[i]
        train = np.sort(np.concatenate([f for j, f in enumerate(self.folds) if j != i]))
        return train, test

    def to_dict(self) -> dict:
        d = {"mode": self.mode, "seed": self.seed, "folds": [f.tolist() for f in self.folds]}
        if self.fractions is not None:
            d["fractions"] = list(self.fractions)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FoldPlan":
        fr = d.get("fractions")
        return cls(d["mode"], int(d["seed"]), [np.asarray(f, dtype=np.intp) for f in d["folds"]], tuple(fr) if fr else None)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True))

    @classmethod
    def load(cls, path) -> "FoldPlan":
        return cls.from_dict(json.loads(Path(path).read_text()))


def stratified_kfold(labels, k: int = 5, seed: int = 0) -> FoldPlan:
    """Deal each shuffled class round-robin over the folds.

    Every class lands ``floor(n_c / k)`` or ``ceil(n_c / k)`` times in each
    fold. The dealing offset carries over between classes so fold sizes also
    differ by at most one.
    """
    labels = np.asarray(labels)
    if k < 2:
        raise ConfigError(f"k must be >= 2, got {k}")
    rng = rng_from_seed(seed)
    assign = np.empty(labels.size, dtype=np.intp)
    offset = 0
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        if members.size < k:
            raise ConfigError(f"class {c!r} has {members.size} samples, fewer than k={k}")
        members = rng.permutation(members)
        assign[members] = (offset + np.arange(members.size)) % k
        offset = (offset + members.size) % k
    folds = [np.flatnonzero(assign == i) for i in range(k)]
    return FoldPlan("kfold", seed, folds)


def _largest_remainder(n: int, fractions: Sequence[float]) -> List[int]:
    quotas = [n * f for f in fractions]
    counts = [math.floor(q) for q in quotas]
    short = n - sum(counts)
    # stable: ties go to the earlier split
    order = sorted(range(len(fractions)), key=lambda j: -(quotas[j] - counts[j]))
    for j in order[:short]:
        counts[j] += 1
    return counts


def holdout_split(labels, fractions=(0.8, 0.1, 0.1), seed: int = 0) -> FoldPlan:
    """Stratified train/val/test split with largest-remainder rounding per class."""
    labels = np.asarray(labels)
    fractions = tuple(float(f) for f in fractions)
    if any(f <= 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"fractions must be positive and sum to 1, got {fractions}")
    rng = rng_from_seed(seed)
    parts = [[] for _ in fractions]
    for c in np.unique(labels):
        members = rng.permutation(np.flatnonzero(labels == c))
        counts = _largest_remainder(members.size, fractions)
        if min(counts) == 0:
            raise ConfigError(f"class {c!r} ({members.size} samples) leaves an empty split at {fractions}")
        start = 0
        for j, cnt in enumerate(counts):
            parts[j].append(members[start : start + cnt])
            start += cnt
    folds = [np.sort(np.concatenate(p)) for p in parts]
    return FoldPlan("holdout", seed, folds, fractions)


# ---------------------------------------------------------------------------
# synthetic cohorts


@dataclass
class SynthSpec:
    """Two Gaussian classes sharing a block-correlated covariance.

    ``n_per_class`` is ``(n_positive, n_negative)`` in ``class_names`` order.
    The positive mean is shifted by ``shift`` marginal standard deviations on
    ``shift_regions`` randomly chosen regions. A ``hard_fraction`` of each
    class is drawn around the midpoint of the two means instead.
    """

    regions: int = 90
    n_per_class: Tuple[int, int] = (200, 100)
    shift: float = 1.0
    shift_regions: int = 10
    rho: float = 0.0
    block_size: int = 10
    hard_fraction: float = 0.0
    seed: int = 0
    class_names: Tuple[str, str] = ("EMCI", "LMCI")

    def __post_init__(self):
        self.n_per_class = tuple(int(n) for n in self.n_per_class)
        self.class_names = tuple(self.class_names)
        if self.regions < 1 or len(self.n_per_class) != 2 or min(self.n_per_class) < 1:
            raise ConfigError("regions and both class sizes must be positive")
        if not 0 <= self.shift_regions <= self.regions:
            raise ConfigError(f"shift_regions must be in [0, {self.regions}]")
        if not 0.0 <= self.hard_fraction <= 1.0:
            raise ConfigError(f"hard_fraction must be in [0, 1], got {self.hard_fraction}")
        if self.block_size < 1:
            raise ConfigError("block_size must be positive")
        TaskBinding(*self.class_names)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["n_per_class"] = list(self.n_per_class)
        d["class_names"] = list(self.class_names)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        return cls(**d)

    def covariance(self) -> np.ndarray:
        idx = np.arange(self.regions) // self.block_size
        blocks = (idx[:, None] == idx[None, :]).astype(float)
        return (1.0 - self.rho) * np.eye(self.regions) + self.rho * blocks

    def means(self, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
        subset = np.sort(rng.choice(self.regions, size=self.shift_regions, replace=False))
        mu_pos = np.zeros(self.regions)
        mu_pos[subset] = self.shift
        return mu_pos, np.zeros(self.regions)


def synthesize(spec: SynthSpec) -> RoiDataset:
    cov = spec.covariance()
    eig = np.linalg.eigvalsh(cov)
    if eig.min() < -1e-10:
        raise ConfigError(f"covariance is not positive semidefinite (min eigenvalue {eig.min():.3g}); check rho")
    # eigen-factor rather than Cholesky: rho = 1 gives a singular but valid covariance
    w, v = np.linalg.eigh(cov)
    factor = v * np.sqrt(np.clip(w, 0.0, None))
    rng = rng_from_seed(spec.seed)
    mu_pos, mu_neg = spec.means(rng)
    mid = 0.5 * (mu_pos + mu_neg)
    ids, labels, rows = [], [], []
    for name, mu, n in zip(spec.class_names, (mu_pos, mu_neg), spec.n_per_class):
        n_hard = int(round(spec.hard_fraction * n))
        centers = np.vstack([np.tile(mu, (n - n_hard, 1)), np.tile(mid, (n_hard, 1))])
        rows.append(centers + rng.standard_normal((n, spec.regions)) @ factor.T)
        labels.extend([name] * n)
    features = np.vstack(rows)
    ids = [f"S{i:05d}" for i in range(features.shape[0])]
    return RoiDataset(ids, labels, features)
