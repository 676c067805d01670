"""SGD with heavy-ball momentum and L2 weight decay folded into the gradient."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable

import numpy as np

from .errors import ConfigError, DivergenceError


@dataclass
class SgdState:
    lr: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 0.001
    velocity: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if not self.lr > 0:
            raise ConfigError(f"learning rate must be positive, got {self.lr}")
        if self.momentum < 0 or self.weight_decay < 0:
            raise ConfigError("momentum and weight_decay must be non-negative")


def step(params, state: SgdState, no_decay: Iterable[str] = ()) -> None:
    """One update of every parameter in ``params``, then zero its gradient.

    ``params`` is a name -> GradNode mapping (or a ModelParams, whose BN
    affine parameters are skipped for weight decay automatically).
    """
    skip = set(no_decay) | set(getattr(params, "no_decay", ()))
    items = params.items() if hasattr(params, "items") else params
    for name, node in items:
        if not np.all(np.isfinite(node.grad)):
            raise DivergenceError(f"non-finite gradient in parameter {name!r}", name=name)
        g = node.grad if name in skip or state.weight_decay == 0 else node.grad + state.weight_decay * node.value
        v = state.velocity.get(name)
        v = g.copy() if v is None else state.momentum * v + g
        state.velocity[name] = v
        node.value -= state.lr * v
        node.zero_grad()
