"""Run configuration: JSON loading, defaults and validation."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import asdict, dataclass, field, fields

from .admm import SolverConfig
from .gabor import GaborParams
from .synth import SynthSpec


class ConfigError(ValueError):
    """A configuration value is missing, malformed or violates an invariant."""


@dataclass(frozen=True)
class RunConfig:
    gabor: GaborParams = field(default_factory=GaborParams)
    block_size: int = 16
    hog_bins: int = 8
    gamma: float = 0.5
    solver: SolverConfig = field(default_factory=SolverConfig)
    smoothing_radius: int = 2
    threshold_offset: int = 0
    # relative saliency below this never counts as a defect; 0 disables the gate
    min_saliency: float = 0.25
    filter_method: str = "spatial"
    input: str | None = None
    output: str | None = None
    synth: SynthSpec | None = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not _is_int(self.block_size) or self.block_size < 2:
            raise ConfigError(f"block_size must be an integer >= 2, got {self.block_size!r}")
        if not _is_int(self.hog_bins) or self.hog_bins < 1:
            raise ConfigError(f"hog_bins must be a positive integer, got {self.hog_bins!r}")
        if self.hog_bins != self.gabor.num_orientations:
            raise ConfigError(
                f"hog_bins ({self.hog_bins}) must equal gabor.num_orientations "
                f"({self.gabor.num_orientations})"
            )
        if not _is_num(self.gamma) or not self.gamma > 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma!r}")
        if not _is_int(self.smoothing_radius) or self.smoothing_radius < 0:
            raise ConfigError(
                f"smoothing_radius must be an integer >= 0, got {self.smoothing_radius!r}"
            )
        if not _is_int(self.threshold_offset):
            raise ConfigError(f"threshold_offset must be an integer, got {self.threshold_offset!r}")
        if not _is_num(self.min_saliency) or self.min_saliency < 0:
            raise ConfigError(f"min_saliency must be >= 0, got {self.min_saliency!r}")
        if self.filter_method not in ("spatial", "fft"):
            raise ConfigError(
                f"filter_method must be 'spatial' or 'fft', got {self.filter_method!r}"
            )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["solver"] = asdict(self.solver)
        d["gabor"] = asdict(self.gabor)
        d["synth"] = self.synth.to_dict() if self.synth is not None else None
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _build(cls, data, prefix):
    if not isinstance(data, dict):
        raise ConfigError(f"{prefix} must be a JSON object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown field {prefix}.{unknown[0]}")
    try:
        return cls(**data)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{prefix}: {exc}") from exc


def config_from_dict(data: dict) -> RunConfig:
    """Build a RunConfig; missing fields take their defaults."""
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    data = dict(data)
    if "gabor" in data:
        data["gabor"] = _build(GaborParams, data["gabor"], "gabor")
    if "solver" in data:
        data["solver"] = _build(SolverConfig, data["solver"], "solver")
    if data.get("synth") is not None:
        data["synth"] = _build(SynthSpec, data["synth"], "synth")
    # the bin count follows the orientation count unless given explicitly
    if "hog_bins" not in data and "gabor" in data:
        data["hog_bins"] = data["gabor"].num_orientations
    return _build(RunConfig, data, "config")


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(data)


def merge(cfg: RunConfig, **overrides) -> RunConfig:
    """Apply non-None overrides on top of ``cfg``."""
    changes = {k: v for k, v in overrides.items() if v is not None}
    if not changes:
        return cfg
    try:
        return dataclasses.replace(cfg, **changes)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
