from .filterbank import ConfigError, Filterbank, ScatterConfig, build_filterbank, filter_params
from .paths import Path, PathTable, enumerate_paths
from .transform import ScatteringOutput, scatter_segment, scatter_stream
from .cost import CostReport, estimate_cost, lag_seconds

__all__ = [
    "ConfigError", "Filterbank", "ScatterConfig", "build_filterbank", "filter_params",
    "Path", "PathTable", "enumerate_paths",
    "ScatteringOutput", "scatter_segment", "scatter_stream",
    "CostReport", "estimate_cost", "lag_seconds",
]
