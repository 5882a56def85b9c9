"""Pipeline configuration: one flat record of every tunable.

Defaults come from the modules that own them, so a parameter has exactly
one source of truth.  The JSON representation round-trips losslessly and
unknown keys are rejected outright; a typo in a config file must fail,
not silently run the defaults.  The content hash stamps report rows so
any result can be traced to the exact configuration that produced it.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from pathlib import Path

from .association import PixelWindow
from .clustering import (
    DEFAULT_BOUNDARY_K,
    DEFAULT_EPS,
    DEFAULT_MERGE_THRESHOLD,
    DEFAULT_MIN_PTS,
)
from .delaunay import DEFAULT_AXIS_TOLERANCE, DEFAULT_RADIUS_ALPHA
from .errors import ConfigError
from .evaluation import (
    DEFAULT_ASSOC_DISTANCE,
    DEFAULT_GT_DEGREE,
    DEFAULT_GT_SAMPLES,
    FILTER_METHODS,
)
from .ransac import DEFAULT_DEGREES, DEFAULT_INLIER_TOL, DEFAULT_MAX_ITERS

DEFAULT_BOUND = 3  # association pixel window half-width


@dataclasses.dataclass(frozen=True)
class PipelineConfig:
    # association
    bound: int = DEFAULT_BOUND
    pixel_window: PixelWindow = "chebyshev"
    # clustering
    eps: float = DEFAULT_EPS
    min_pts: int = DEFAULT_MIN_PTS
    boundary_k: int = DEFAULT_BOUNDARY_K
    merge_threshold: float = DEFAULT_MERGE_THRESHOLD
    # delaunay filter; r_max set switches the radius policy to absolute
    radius_alpha: float = DEFAULT_RADIUS_ALPHA
    r_max: float | None = None
    axis_tolerance: float = DEFAULT_AXIS_TOLERANCE
    # ransac filter
    inlier_tol: float = DEFAULT_INLIER_TOL
    max_iters: int = DEFAULT_MAX_ITERS
    degrees: tuple = DEFAULT_DEGREES
    # evaluation
    methods: tuple = FILTER_METHODS
    d_assoc: float = DEFAULT_ASSOC_DISTANCE
    gt_degree: int = DEFAULT_GT_DEGREE
    gt_samples: int = DEFAULT_GT_SAMPLES
    # global
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "degrees", tuple(int(d) for d in self.degrees))
        object.__setattr__(self, "methods", tuple(str(m) for m in self.methods))
        if self.bound < 0:
            raise ConfigError("bound must be non-negative")
        if self.eps <= 0 or self.merge_threshold <= 0:
            raise ConfigError("eps and merge_threshold must be positive")
        if self.min_pts < 1 or self.boundary_k < 1:
            raise ConfigError("min_pts and boundary_k must be at least 1")
        if self.radius_alpha <= 0 or (self.r_max is not None and self.r_max <= 0):
            raise ConfigError("radius policy values must be positive")
        if self.axis_tolerance <= 0 or self.inlier_tol <= 0:
            raise ConfigError("tolerances must be positive")
        if self.max_iters < 1 or self.gt_samples < 2 or self.gt_degree < 1:
            raise ConfigError("max_iters, gt_samples, gt_degree out of range")
        if not self.degrees or min(self.degrees) < 1:
            raise ConfigError("degrees must be a nonempty list of integers >= 1")
        unknown = set(self.methods) - set(FILTER_METHODS)
        if not self.methods or unknown:
            raise ConfigError(f"methods must be drawn from {FILTER_METHODS}")
        if self.d_assoc <= 0:
            raise ConfigError("d_assoc must be positive")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        fields = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - fields)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["degrees"] = list(self.degrees)
        out["methods"] = list(self.methods)
        return out

    def dump(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    def with_overrides(self, **overrides) -> "PipelineConfig":
        """Replace the given fields (None values mean "keep"), re-running
        validation; this is how CLI flags land on top of a config file."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        fields = {f.name for f in dataclasses.fields(self)}
        unknown = sorted(set(changes) - fields)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        return dataclasses.replace(self, **changes)

    def content_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("ascii")).hexdigest()[:12]

    def filter_params(self) -> dict:
        """The knobs the per-cluster filters consume."""
        return {
            "inlier_tol": self.inlier_tol,
            "max_iters": self.max_iters,
            "degrees": self.degrees,
            "radius_alpha": self.radius_alpha,
            "r_max": self.r_max,
            "axis_tolerance": self.axis_tolerance,
        }
