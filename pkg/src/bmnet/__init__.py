"""BMNet on ROI feature vectors: autodiff core, model, losses, evaluation and experiment harness."""

from .data import FoldPlan, RoiDataset, SynthSpec, TaskBinding
from .errors import BmnetError
from .model import BmnetConfig, forward, init_params
from .tensor import GradNode, backward, rng_from_seed

__all__ = [
    "BmnetConfig",
    "BmnetError",
    "FoldPlan",
    "GradNode",
    "RoiDataset",
    "SynthSpec",
    "TaskBinding",
    "backward",
    "forward",
    "init_params",
    "rng_from_seed",
]
__version__ = "0.1.0"
