"""Defect detection in periodic textures from Gabor-HOG features and a
low-rank plus sparse decomposition."""

from .admm import Decomposition, SolverConfig, solve
from .config import ConfigError, RunConfig, config_from_dict, load_config
from .estimators import DefectDetector, DetectionResult, GHOGExtractor, LogDetRPCA
from .gabor import GaborParams
from .image import BlockGrid, load_image, make_block_grid
from .synth import Defect, SynthSpec, generate

__version__ = "0.1.0"

__all__ = [
    "BlockGrid", "ConfigError", "Decomposition", "Defect", "DefectDetector",
    "DetectionResult", "GHOGExtractor", "GaborParams", "LogDetRPCA", "RunConfig",
    "SolverConfig", "SynthSpec", "config_from_dict", "generate", "load_config",
    "load_image", "make_block_grid", "solve",
]
