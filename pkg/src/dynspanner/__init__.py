"""Fully-dynamic lightweight bounded-degree Euclidean (1+eps)-spanner."""

from .config import (
    BucketCoord,
    Config,
    InfeasibleConfigError,
    config_from_json,
    derive_config,
)
from .points import DuplicatePointError, PointStore
from .spanner import DynamicSpanner, OpStats

__all__ = [
    "BucketCoord",
    "Config",
    "DuplicatePointError",
    "DynamicSpanner",
    "InfeasibleConfigError",
    "OpStats",
    "PointStore",
    "config_from_json",
    "derive_config",
]
