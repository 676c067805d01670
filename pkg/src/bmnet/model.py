"""BMNet: two conv blocks, optional factorized bilinear pooling, three-layer FC head."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from . import tensor as T
from .errors import ConfigError, ShapeError
from .tensor import BatchNormStats, GradNode

LOSS_MODES = ("none", "contrastive", "triplet")


@dataclass
class BmnetConfig:
    input_regions: int = 90
    conv_channels: tuple = (16, 32)
    kernel_size: int = 3
    use_bilinear: bool = True
    bilinear_rank: int = 64
    pool_window: int = 2
    hidden_dim: int = 64
    embed_dim: int = 32
    loss_mode: str = "triplet"
    lam: float = 0.05
    margin: float = 1.0
    # "mean" keeps lam's scale independent of batch size; "sum" is the literal form.
    metric_reduction: str = "mean"
    # "euclidean": hinge on ||a-b||; "squared": hinge on ||a-b||^2.
    contrastive_distance: str = "euclidean"
    contrastive_swap_terms: bool = False
    semi_hard: bool = False
    bn_momentum: float = 0.1
    bn_eps: float = 1e-5

    def __post_init__(self):
        self.conv_channels = tuple(int(c) for c in self.conv_channels)
        self.validate()

    def validate(self) -> None:
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.input_regions >= 1, f"input_regions must be positive, got {self.input_regions}")
        need(
            len(self.conv_channels) == 2 and min(self.conv_channels) >= 1,
            f"conv_channels must be two positive ints, got {self.conv_channels}",
        )
        need(self.kernel_size >= 1 and self.kernel_size % 2 == 1, f"kernel_size must be odd, got {self.kernel_size}")
        need(self.bilinear_rank >= 1, "bilinear_rank must be >= 1")
        need(self.hidden_dim >= 1 and self.embed_dim >= 1, "hidden_dim and embed_dim must be positive")
        need(self.loss_mode in LOSS_MODES, f"loss_mode must be one of {LOSS_MODES}, got {self.loss_mode!r}")
        need(self.lam >= 0, f"lambda must be >= 0, got {self.lam}")
        need(self.margin >= 0, f"margin must be >= 0, got {self.margin}")
        need(self.metric_reduction in ("mean", "sum"), "metric_reduction must be 'mean' or 'sum'")
        need(self.contrastive_distance in ("euclidean", "squared"), "contrastive_distance must be 'euclidean' or 'squared'")
        limit = self.bilinear_rank if self.use_bilinear else self.flat_features
        need(1 <= self.pool_window <= limit, f"pool_window must be in [1, {limit}], got {self.pool_window}")

    @property
    def flat_features(self) -> int:
        return self.conv_channels[1] * self.input_regions

    @property
    def head_inputs(self) -> int:
        if self.use_bilinear:
            return self.bilinear_rank // self.pool_window
        return self.flat_features

    def to_dict(self) -> dict:
        d = asdict(self)
        d["conv_channels"] = list(self.conv_channels)
        d["lambda"] = d.pop("lam")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BmnetConfig":
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**d)


def param_shapes(cfg: BmnetConfig) -> Dict[str, tuple]:
    """Ordered parameter shapes; the order is also the initialization draw order."""
    c1, c2 = cfg.conv_channels
    k = cfg.kernel_size
    shapes = {}
    for name, cin, cout in (("conv1", 1, c1), ("conv2", c1, c2)):
        shapes[f"{name}.w"] = (cout, cin, k)
        shapes[f"{name}.b"] = (cout,)
        shapes[f"{name}.gamma"] = (cout,)
        shapes[f"{name}.beta"] = (cout,)
    if cfg.use_bilinear:
        for name in ("f1", "f2"):
            shapes[f"{name}.W"] = (cfg.flat_features, cfg.bilinear_rank)
            shapes[f"{name}.b"] = (cfg.bilinear_rank,)
    for name, fan_in, fan_out in (
        ("fc1", cfg.head_inputs, cfg.hidden_dim),
        ("fc2", cfg.hidden_dim, cfg.embed_dim),
        ("fc_out", cfg.embed_dim, 1),
    ):
        shapes[f"{name}.W"] = (fan_in, fan_out)
        shapes[f"{name}.b"] = (fan_out,)
    return shapes


def param_count(cfg: BmnetConfig) -> int:
    return int(sum(np.prod(s) for s in param_shapes(cfg).values()))


@dataclass
class ModelParams:
    tensors: Dict[str, GradNode]
    bn: Dict[str, BatchNormStats] = field(default_factory=dict)

    def __getitem__(self, name: str) -> GradNode:
        return self.tensors[name]

    def items(self):
        return self.tensors.items()

    @property
    def no_decay(self) -> frozenset:
        """BatchNorm affine parameters, which are excluded from weight decay."""
        return frozenset(n for n in self.tensors if n.endswith((".gamma", ".beta")))

    def count(self) -> int:
        return int(sum(p.value.size for p in self.tensors.values()))

    def zero_grad(self) -> None:
        for p in self.tensors.values():
            p.zero_grad()

    def copy(self) -> "ModelParams":
        return ModelParams(
            {n: GradNode(p.value.copy(), name=n) for n, p in self.tensors.items()},
            {n: s.copy() for n, s in self.bn.items()},
        )


def init_params(cfg: BmnetConfig, rng: np.random.Generator) -> ModelParams:
    """Uniform(-s, s) weights with s = sqrt(1 / fan_in); zero biases; BN gamma=1, beta=0."""
    cfg.validate()
    tensors = {}
    for name, shape in param_shapes(cfg).items():
        kind = name.rsplit(".", 1)[1]
        if kind in ("w", "W"):
            fan_in = shape[1] * shape[2] if len(shape) == 3 else shape[0]
            s = np.sqrt(1.0 / fan_in)
            value = rng.uniform(-s, s, size=shape)
        elif kind == "gamma":
            value = np.ones(shape)
        else:
            value = np.zeros(shape)
        tensors[name] = GradNode(value, name=name)
    bn = {
        name: BatchNormStats.fresh(cfg.conv_channels[i], cfg.bn_momentum, cfg.bn_eps)
        for i, name in enumerate(("conv1", "conv2"))
    }
    return ModelParams(tensors, bn)


def conv_block(x: GradNode, params: ModelParams, prefix: str, mode: str) -> GradNode:
    """relu(batchnorm(conv1d(x)))."""
    p = params.tensors
    y = T.conv1d(x, p[f"{prefix}.w"], p[f"{prefix}.b"])
    y = T.batchnorm(y, p[f"{prefix}.gamma"], p[f"{prefix}.beta"], mode, params.bn[prefix])
    return T.relu(y)


def linear(x: GradNode, params: ModelParams, prefix: str) -> GradNode:
    return T.add(T.matmul(x, params[f"{prefix}.W"]), params[f"{prefix}.b"])


def bilinear_pool(y: GradNode, params: ModelParams, pool_window: int) -> GradNode:
    """Hadamard product of two learned projections of ``y``, average-pooled.

    ``y`` is ``[N, F]``; the result is ``[N, d // pool_window]``.
    """
    w1 = params["f1.W"]
    if y.value.ndim != 2 or y.shape[1] != w1.shape[0]:
        raise ShapeError(f"bilinear_pool: input {y.shape} does not match projection {w1.shape}")
    b = T.mul(linear(y, params, "f1"), linear(y, params, "f2"))
    return T.flatten(T.mean_pool1d(b, pool_window))


@dataclass
class ForwardOutput:
    logit: GradNode  # [N]
    embedding: GradNode  # [N, E]


def forward(x, params: ModelParams, cfg: BmnetConfig, mode: str = "train") -> ForwardOutput:
    if not isinstance(x, GradNode):
        x = T.constant(x)
    if x.value.ndim != 3 or x.shape[1] != 1 or x.shape[2] != cfg.input_regions:
        raise ShapeError(f"forward: expected input [N, 1, {cfg.input_regions}], got {x.shape}")
    h = conv_block(x, params, "conv1", mode)
    h = conv_block(h, params, "conv2", mode)
    h = T.flatten(h)
    if cfg.use_bilinear:
        h = bilinear_pool(h, params, cfg.pool_window)
    h = T.relu(linear(h, params, "fc1"))
    emb = T.relu(linear(h, params, "fc2"))
    logit = T.reshape(linear(emb, params, "fc_out"), (x.shape[0],))
    return ForwardOutput(logit, emb)


def predict_logits(features: np.ndarray, params: ModelParams, cfg: BmnetConfig) -> np.ndarray:
    """Eval-mode logits for a ``[N, R]`` feature matrix."""
    return forward(features[:, None, :], params, cfg, mode="eval").logit.value


def predict_proba(features: np.ndarray, params: ModelParams, cfg: BmnetConfig) -> np.ndarray:
    return T._sigmoid(predict_logits(features, params, cfg))


# ---------------------------------------------------------------------------
# checkpoints


def checkpoint_dict(cfg: BmnetConfig, params: ModelParams, seed: Optional[int]) -> dict:
    return {
        "config": cfg.to_dict(),
        "params": {
            n: {"shape": list(p.shape), "data": p.value.ravel().tolist()} for n, p in params.items()
        },
        "bn_running": {
            n: {"mean": s.mean.tolist(), "var": s.var.tolist(), "momentum": s.momentum, "eps": s.eps}
            for n, s in params.bn.items()
        },
        "seed": seed,
    }


def save_checkpoint(path, cfg: BmnetConfig, params: ModelParams, seed: Optional[int] = None) -> None:
    # json writes floats with repr(), the shortest string that round-trips exactly.
    Path(path).write_text(json.dumps(checkpoint_dict(cfg, params, seed), sort_keys=True))


def params_from_dict(doc: dict) -> ModelParams:
    tensors = {
        n: GradNode(np.asarray(d["data"], dtype=np.float64).reshape(d["shape"]), name=n)
        for n, d in doc["params"].items()
    }
    bn = {
        n: BatchNormStats(np.asarray(d["mean"]), np.asarray(d["var"]), d["momentum"], d["eps"])
        for n, d in doc["bn_running"].items()
    }
    return ModelParams(tensors, bn)


def load_checkpoint(path):
    """Return ``(config, params, seed)`` from a checkpoint file."""
    doc = json.loads(Path(path).read_text())
    cfg = BmnetConfig.from_dict(doc["config"])
    params = params_from_dict(doc)
    expected = param_shapes(cfg)
    got = {n: tuple(p.shape) for n, p in params.items()}
    if got != expected:
        raise ConfigError(f"checkpoint parameters do not match config: {sorted(set(got) ^ set(expected))}")
    return cfg, params, doc.get("seed")
