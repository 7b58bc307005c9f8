"""pointlink: a desk-scale simulator for transmitting point-cloud geometry
as learned QAM constellation points over noisy channels."""

from .config import ExperimentConfig, desk_config, load_config, paper_scale_config
from .geometry import PointCloud
from .rng import RandomSource
from .system import LinkSystem
from .tensor import Tensor

__version__ = "0.1.0"

__all__ = [
    "ExperimentConfig",
    "LinkSystem",
    "PointCloud",
    "RandomSource",
    "Tensor",
    "desk_config",
    "load_config",
    "paper_scale_config",
    "__version__",
]
